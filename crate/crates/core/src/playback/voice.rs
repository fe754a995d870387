use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{PlaybackError, PlaybackMode, Rendered, SampleSource};
use crate::synth::SampleBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandleState {
    Playing,
    Stopped,
}

const PLAYING: u8 = 0;
const STOPPED: u8 = 1;
const LOST: u8 = 2;

#[derive(Debug)]
struct Shared {
    stop: AtomicBool,
    state: AtomicU8,
    emitted: AtomicU64,
    iterations: AtomicU64,
}

/// Control-side view of one playback. Cheap to clone and `Send + Sync`.
#[derive(Debug, Clone)]
pub struct PlaybackHandle {
    id: u64,
    device: usize,
    shared: Arc<Shared>,
}

impl PlaybackHandle {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn device(&self) -> usize {
        self.device
    }

    pub fn state(&self) -> HandleState {
        match self.shared.state.load(Ordering::Acquire) {
            PLAYING => HandleState::Playing,
            _ => HandleState::Stopped,
        }
    }

    /// Set when the device vanished mid-playback.
    pub fn error(&self) -> Option<PlaybackError> {
        (self.shared.state.load(Ordering::Acquire) == LOST).then_some(PlaybackError::Lost(self.device))
    }

    /// Samples delivered to the device so far, gap zeros included.
    pub fn emitted_samples(&self) -> u64 {
        self.shared.emitted.load(Ordering::Acquire)
    }

    /// Iterations of the buffer emitted in full.
    pub fn completed_iterations(&self) -> u64 {
        self.shared.iterations.load(Ordering::Acquire)
    }

    /// Idempotent. The emission path observes the flag at its next period.
    pub fn stop(&self) {
        self.shared.stop.store(true, Ordering::Release);
        let _ = self.shared.state.compare_exchange(
            PLAYING,
            STOPPED,
            Ordering::AcqRel,
            Ordering::Acquire,
        );
    }

    /// Polls until the handle stops or `timeout` elapses. Returns whether it
    /// stopped.
    pub fn wait(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        while self.state() == HandleState::Playing {
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        true
    }
}

/// Emission-side state: walks the buffer, inserting gap zeros between
/// iterations when looping.
pub(crate) struct Voice {
    samples: Arc<[f64]>,
    looping: bool,
    gap: usize,
    pos: usize,
    gap_left: usize,
    shared: Arc<Shared>,
}

impl Voice {
    pub(crate) fn new(
        id: u64,
        device: usize,
        buffer: &SampleBuffer,
        mode: PlaybackMode,
    ) -> (Voice, PlaybackHandle) {
        let shared = Arc::new(Shared {
            stop: AtomicBool::new(false),
            state: AtomicU8::new(PLAYING),
            emitted: AtomicU64::new(0),
            iterations: AtomicU64::new(0),
        });
        let (looping, gap) = match mode {
            PlaybackMode::Once => (false, 0),
            PlaybackMode::Continuous => (true, 0),
            PlaybackMode::Gapped { gap } => {
                (true, (gap * buffer.sample_rate() as f64).round() as usize)
            }
        };
        let voice = Voice {
            samples: buffer.shared(),
            looping,
            gap,
            pos: 0,
            gap_left: 0,
            shared: Arc::clone(&shared),
        };
        (voice, PlaybackHandle { id, device, shared })
    }

    fn finish(&self) {
        let _ = self.shared.state.compare_exchange(
            PLAYING,
            STOPPED,
            Ordering::AcqRel,
            Ordering::Acquire,
        );
    }
}

impl SampleSource for Voice {
    fn render(&mut self, out: &mut [f64]) -> Rendered {
        if self.shared.stop.load(Ordering::Acquire) {
            out.fill(0.0);
            self.finish();
            return Rendered {
                written: 0,
                finished: true,
            };
        }
        let mut written = 0;
        let mut finished = false;
        while written < out.len() {
            if self.gap_left > 0 {
                let n = self.gap_left.min(out.len() - written);
                out[written..written + n].fill(0.0);
                self.gap_left -= n;
                written += n;
            } else if self.pos < self.samples.len() {
                let n = (self.samples.len() - self.pos).min(out.len() - written);
                out[written..written + n].copy_from_slice(&self.samples[self.pos..self.pos + n]);
                self.pos += n;
                written += n;
                if self.pos == self.samples.len() {
                    self.shared.iterations.fetch_add(1, Ordering::AcqRel);
                }
            } else if self.looping {
                self.pos = 0;
                self.gap_left = self.gap;
            } else {
                finished = true;
                break;
            }
        }
        // A non-looping voice that ended exactly on the period boundary is
        // finished too.
        if !self.looping && self.pos == self.samples.len() {
            finished = true;
        }
        out[written..].fill(0.0);
        self.shared.emitted.fetch_add(written as u64, Ordering::AcqRel);
        if finished {
            self.finish();
        }
        Rendered { written, finished }
    }

    fn lost(&mut self) {
        self.shared.stop.store(true, Ordering::Release);
        let _ = self.shared.state.compare_exchange(
            PLAYING,
            LOST,
            Ordering::AcqRel,
            Ordering::Acquire,
        );
    }
}
