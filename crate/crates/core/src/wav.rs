//! Mono 16-bit PCM WAV encoding with symmetric scaling.
//!
//! A sample `s` is stored as `round(s * 32767)`, so -1.0 maps to -32767 and
//! the code -32768 is never written. Decoding maps `i` back to `i / 32767`
//! clamped to `[-1, 1]`.

use thiserror::Error;

use crate::synth::{SampleBuffer, StimulusProgram};

const FULL_SCALE: f64 = 32767.0;
const HEADER_LEN: usize = 44;
const PCM_FORMAT: u16 = 1;
const BITS_PER_SAMPLE: u16 = 16;
const BLOCK_ALIGN: u16 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavError {
    #[error("cannot encode an empty buffer")]
    Empty,
    #[error("sample {index} = {value} outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("data too long for a RIFF container ({0} samples)")]
    TooLong(usize),
    #[error("malformed WAV: {field}: {reason}")]
    Malformed { field: &'static str, reason: String },
    #[error("unsupported WAV: {field} = {value} (expected {expected})")]
    Unsupported {
        field: &'static str,
        value: u32,
        expected: u32,
    },
}

impl WavError {
    /// Header field (or sample position) responsible for the error.
    pub fn field(&self) -> &'static str {
        match self {
            WavError::Empty => "samples",
            WavError::SampleOutOfRange { .. } => "samples",
            WavError::TooLong(_) => "samples",
            WavError::Malformed { field, .. } | WavError::Unsupported { field, .. } => field,
        }
    }
}

fn malformed(field: &'static str, reason: impl Into<String>) -> WavError {
    WavError::Malformed {
        field,
        reason: reason.into(),
    }
}

#[inline]
fn quantize(s: f64) -> i16 {
    (s * FULL_SCALE).round() as i16
}

/// Encodes `buffer` as a canonical 44-byte-header WAV file.
pub fn encode_wav(buffer: &SampleBuffer) -> Result<Vec<u8>, WavError> {
    encode_samples(buffer.samples(), buffer.sample_rate())
}

fn encode_samples(samples: &[f64], sample_rate: u32) -> Result<Vec<u8>, WavError> {
    if samples.is_empty() {
        return Err(WavError::Empty);
    }
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, s)| s.is_nan() || s.abs() > 1.0) {
        return Err(WavError::SampleOutOfRange { index, value });
    }
    let data_len = samples
        .len()
        .checked_mul(2)
        .filter(|&n| n <= (u32::MAX as usize) - 36)
        .ok_or(WavError::TooLong(samples.len()))? as u32;

    let mut out = Vec::with_capacity(HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(BLOCK_ALIGN)).to_le_bytes());
    out.extend_from_slice(&BLOCK_ALIGN.to_le_bytes());
    out.extend_from_slice(&BITS_PER_SAMPLE.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8], WavError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| malformed(field, "unexpected end of file"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self, field: &'static str) -> Result<u16, WavError> {
        let b = self.take(2, field)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, field: &'static str) -> Result<u32, WavError> {
        let b = self.take(4, field)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self, field: &'static str) -> Result<[u8; 4], WavError> {
        let b = self.take(4, field)?;
        Ok([b[0], b[1], b[2], b[3]])
    }
}

struct Format {
    sample_rate: u32,
}

fn parse_fmt(body: &[u8]) -> Result<Format, WavError> {
    let mut r = Reader { bytes: body, pos: 0 };
    let format = r.u16("format_code")?;
    let channels = r.u16("channels")?;
    let sample_rate = r.u32("sample_rate")?;
    let byte_rate = r.u32("byte_rate")?;
    let block_align = r.u16("block_align")?;
    let bits = r.u16("bits_per_sample")?;
    if format != PCM_FORMAT {
        return Err(WavError::Unsupported {
            field: "format_code",
            value: format.into(),
            expected: PCM_FORMAT.into(),
        });
    }
    if channels != 1 {
        return Err(WavError::Unsupported {
            field: "channels",
            value: channels.into(),
            expected: 1,
        });
    }
    if bits != BITS_PER_SAMPLE {
        return Err(WavError::Unsupported {
            field: "bits_per_sample",
            value: bits.into(),
            expected: BITS_PER_SAMPLE.into(),
        });
    }
    if sample_rate == 0 {
        return Err(malformed("sample_rate", "must be positive"));
    }
    if block_align != BLOCK_ALIGN {
        return Err(malformed(
            "block_align",
            format!("{block_align} inconsistent with 16-bit mono"),
        ));
    }
    if u64::from(byte_rate) != u64::from(sample_rate) * 2 {
        return Err(malformed(
            "byte_rate",
            format!("{byte_rate} != sample_rate * 2"),
        ));
    }
    Ok(Format { sample_rate })
}

/// Decodes a mono 16-bit PCM WAV. Chunks other than `fmt ` and `data` are
/// skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<SampleBuffer, WavError> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.tag("riff_tag")? != b"RIFF" {
        return Err(malformed("riff_tag", "expected \"RIFF\""));
    }
    let riff_len = r.u32("riff_size")? as usize;
    if &r.tag("wave_tag")? != b"WAVE" {
        return Err(malformed("wave_tag", "expected \"WAVE\""));
    }
    if riff_len < 4 || riff_len + 8 > bytes.len() {
        return Err(malformed(
            "riff_size",
            format!("{riff_len} inconsistent with file length {}", bytes.len()),
        ));
    }
    let end = riff_len + 8;

    let mut format = None;
    let mut data = None;
    while r.pos + 8 <= end {
        let id = r.tag("chunk_id")?;
        let len = r.u32("chunk_size")? as usize;
        if r.pos + len > end {
            return Err(malformed(
                "chunk_size",
                format!("chunk {:?} overruns the RIFF container", String::from_utf8_lossy(&id)),
            ));
        }
        let body = r.take(len, "chunk_size")?;
        match &id {
            b"fmt " => {
                if len < 16 {
                    return Err(malformed("fmt_size", format!("{len} < 16")));
                }
                format = Some(parse_fmt(body)?);
            }
            b"data" => {
                if format.is_none() {
                    return Err(malformed("fmt", "data chunk precedes fmt chunk"));
                }
                data = Some(body);
            }
            _ => {}
        }
        // Chunks are word aligned.
        if len % 2 == 1 && r.pos < end {
            r.pos += 1;
        }
        if data.is_some() {
            break;
        }
    }

    let format = format.ok_or_else(|| malformed("fmt", "missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("data", "missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(malformed("data_size", "odd byte count for 16-bit samples"));
    }
    if data.is_empty() {
        return Err(malformed("data_size", "no samples"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| (f64::from(i16::from_le_bytes([b[0], b[1]])) / FULL_SCALE).clamp(-1.0, 1.0))
        .collect();
    Ok(SampleBuffer::from_trusted(samples, format.sample_rate))
}

/// `<program-id>_<frequency>Hz_<duration>s.wav`, numbers in shortest
/// round-trip form (`sine_200Hz_0.5s.wav`).
pub fn export_file_name(program: &StimulusProgram) -> String {
    format!(
        "{}_{}Hz_{}s.wav",
        program.id, program.waveform.frequency, program.waveform.duration
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{WaveShape, WaveformSpec};

    fn buf(samples: &[f64]) -> SampleBuffer {
        SampleBuffer::new(samples.to_vec(), 44_100).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_wav(&buf(&[0.0, 1.0, -1.0])).unwrap();
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(&bytes[8..12], b"WAVE");
        assert_eq!(&bytes[12..16], b"fmt ");
        assert_eq!(&bytes[24..28], &[0x44, 0xAC, 0x00, 0x00]);
        assert_eq!(&bytes[28..32], &88_200u32.to_le_bytes());
        assert_eq!(&bytes[36..40], b"data");
        assert_eq!(&bytes[40..44], &6u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &(36u32 + 6).to_le_bytes());
        assert_eq!(bytes.len(), 50);
    }

    #[test]
    fn symmetric_scaling() {
        let bytes = encode_wav(&buf(&[1.0, 0.0, -1.0, 0.5])).unwrap();
        let codes: Vec<i16> = bytes[44..]
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        assert_eq!(codes, vec![32767, 0, -32767, 16384]);
    }

    #[test]
    fn decode_min_code_is_clamped() {
        let mut bytes = encode_wav(&buf(&[0.0])).unwrap();
        bytes[44..46].copy_from_slice(&i16::MIN.to_le_bytes());
        let decoded = decode_wav(&bytes).unwrap();
        assert_eq!(decoded[0], -1.0);
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav(&buf(&[0.25, -0.25])).unwrap();
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(b"abc\0");
        with_list.extend_from_slice(&plain[36..]);
        let riff = (with_list.len() - 8) as u32;
        with_list[4..8].copy_from_slice(&riff.to_le_bytes());
        assert_eq!(decode_wav(&with_list).unwrap(), decode_wav(&plain).unwrap());
    }

    #[test]
    fn errors_name_the_field() {
        let good = encode_wav(&buf(&[0.1, 0.2])).unwrap();

        let mut stereo = good.clone();
        stereo[22] = 2;
        assert_eq!(decode_wav(&stereo).unwrap_err().field(), "channels");

        let mut float = good.clone();
        float[20] = 3;
        assert_eq!(decode_wav(&float).unwrap_err().field(), "format_code");

        let mut bits = good.clone();
        bits[34] = 24;
        assert_eq!(decode_wav(&bits).unwrap_err().field(), "bits_per_sample");

        let mut tag = good.clone();
        tag[0] = b'X';
        assert_eq!(decode_wav(&tag).unwrap_err().field(), "riff_tag");

        assert_eq!(decode_wav(&good[..30]).unwrap_err().field(), "riff_size");
        assert_eq!(decode_wav(&good[..6]).unwrap_err().field(), "riff_size");

        let mut rate = good.clone();
        rate[28..32].copy_from_slice(&1u32.to_le_bytes());
        assert_eq!(decode_wav(&rate).unwrap_err().field(), "byte_rate");
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let raw = [0.0, 1.0000001];
        assert!(matches!(
            encode_samples(&raw, 44_100),
            Err(WavError::SampleOutOfRange { index: 1, .. })
        ));
        assert_eq!(encode_samples(&[], 44_100), Err(WavError::Empty));
    }

    #[test]
    fn export_name() {
        let program = StimulusProgram::new(
            "damped-square",
            WaveformSpec::new(WaveShape::Square).with_duration(0.5),
        );
        assert_eq!(export_file_name(&program), "damped-square_200Hz_0.5s.wav");
    }
}
