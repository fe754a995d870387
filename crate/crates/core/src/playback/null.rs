use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use super::{AudioBackend, OutputDevice, PlaybackError, SampleSource};

/// Samples per device period.
pub const DEFAULT_PERIOD: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullDeviceConfig {
    pub name: String,
    pub max_sample_rate: Option<u32>,
}

impl NullDeviceConfig {
    pub fn new(name: impl Into<String>) -> Self {
        NullDeviceConfig {
            name: name.into(),
            max_sample_rate: None,
        }
    }

    pub fn with_max_sample_rate(mut self, hz: u32) -> Self {
        self.max_sample_rate = Some(hz);
        self
    }
}

struct NullDevice {
    config: NullDeviceConfig,
    connected: AtomicBool,
    sample_rate: AtomicU32,
    // Only the emission path and `attach` touch the slot; on hardware this
    // would be a lock-free handoff, the null device keeps it simple.
    slot: Mutex<Option<Box<dyn SampleSource>>>,
    scratch: Mutex<Vec<f64>>,
    capture: Mutex<Vec<f64>>,
}

struct Inner {
    period: usize,
    capture_enabled: bool,
    devices: Vec<NullDevice>,
}

/// Headless output backend that records the emitted stream.
///
/// Periods are driven either manually with [`NullBackend::pump`] (tests) or by
/// a background [`NullClock`] that paces them in (scaled) real time.
#[derive(Clone)]
pub struct NullBackend {
    inner: Arc<Inner>,
}

impl Default for NullBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl NullBackend {
    /// One device named `"null"` accepting any sample rate.
    pub fn new() -> Self {
        Self::from_configs(DEFAULT_PERIOD, vec![NullDeviceConfig::new("null")])
    }

    pub fn from_configs(period: usize, configs: Vec<NullDeviceConfig>) -> Self {
        assert!(period > 0, "device period must be positive");
        let devices = configs
            .into_iter()
            .map(|config| NullDevice {
                config,
                connected: AtomicBool::new(true),
                sample_rate: AtomicU32::new(0),
                slot: Mutex::new(None),
                scratch: Mutex::new(vec![0.0; period]),
                capture: Mutex::new(Vec::new()),
            })
            .collect();
        NullBackend {
            inner: Arc::new(Inner {
                period,
                capture_enabled: true,
                devices,
            }),
        }
    }

    /// Same devices, but emitted samples are discarded instead of recorded.
    /// Meant for long-running services.
    pub fn without_capture(self) -> Self {
        let inner = Arc::try_unwrap(self.inner)
            .unwrap_or_else(|_| panic!("without_capture must be called before sharing the backend"));
        NullBackend {
            inner: Arc::new(Inner {
                capture_enabled: false,
                ..inner
            }),
        }
    }

    pub fn period(&self) -> usize {
        self.inner.period
    }

    /// Runs `periods` device periods on every device. Returns the number of
    /// samples produced across all devices.
    pub fn pump(&self, periods: usize) -> usize {
        let mut produced = 0;
        for _ in 0..periods {
            for device in &self.inner.devices {
                produced += self.pump_device(device);
            }
        }
        produced
    }

    fn pump_device(&self, device: &NullDevice) -> usize {
        let mut slot = device.slot.lock();
        let Some(source) = slot.as_mut() else {
            return 0;
        };
        let mut scratch = device.scratch.lock();
        let rendered = source.render(&mut scratch);
        if self.inner.capture_enabled && rendered.written > 0 {
            device
                .capture
                .lock()
                .extend_from_slice(&scratch[..rendered.written]);
        }
        if rendered.finished {
            *slot = None;
        }
        rendered.written
    }

    /// Pumps until no device has an attached source, or `max_periods` elapse.
    pub fn run_until_idle(&self, max_periods: usize) -> bool {
        for _ in 0..max_periods {
            if self.is_idle() {
                return true;
            }
            self.pump(1);
        }
        self.is_idle()
    }

    pub fn is_idle(&self) -> bool {
        self.inner.devices.iter().all(|d| d.slot.lock().is_none())
    }

    /// Everything device `index` has emitted so far.
    pub fn capture(&self, index: usize) -> Vec<f64> {
        self.inner
            .devices
            .get(index)
            .map(|d| d.capture.lock().clone())
            .unwrap_or_default()
    }

    pub fn captured_len(&self, index: usize) -> usize {
        self.inner
            .devices
            .get(index)
            .map_or(0, |d| d.capture.lock().len())
    }

    pub fn clear_capture(&self, index: usize) {
        if let Some(d) = self.inner.devices.get(index) {
            d.capture.lock().clear();
        }
    }

    /// Simulates the device being unplugged: the attached source is told it
    /// was lost and the device leaves the enumeration.
    pub fn disconnect(&self, index: usize) {
        if let Some(device) = self.inner.devices.get(index) {
            device.connected.store(false, Ordering::Release);
            if let Some(mut source) = device.slot.lock().take() {
                source.lost();
            }
        }
    }

    /// Starts a background thread that pumps one period at a time, sleeping
    /// `period / (sample_rate * speed)` between periods.
    pub fn start_clock(&self, speed: f64) -> NullClock {
        assert!(speed > 0.0, "clock speed must be positive");
        let running = Arc::new(AtomicBool::new(true));
        let backend = self.clone();
        let flag = Arc::clone(&running);
        let thread = std::thread::Builder::new()
            .name("null-audio-clock".into())
            .spawn(move || backend.clock_loop(&flag, speed))
            .expect("spawn null clock thread");
        NullClock {
            running,
            thread: Some(thread),
        }
    }

    fn clock_loop(&self, running: &AtomicBool, speed: f64) {
        let idle = Duration::from_millis(1);
        let mut next = Instant::now();
        while running.load(Ordering::Acquire) {
            if self.is_idle() {
                std::thread::sleep(idle);
                next = Instant::now();
                continue;
            }
            self.pump(1);
            let rate = self
                .inner
                .devices
                .iter()
                .map(|d| d.sample_rate.load(Ordering::Relaxed))
                .max()
                .unwrap_or(0)
                .max(1);
            let secs = self.inner.period as f64 / (f64::from(rate) * speed);
            if secs.is_finite() && secs > 0.0 {
                next += Duration::from_secs_f64(secs);
                let now = Instant::now();
                if next > now {
                    std::thread::sleep(next - now);
                } else {
                    next = now;
                }
            }
        }
    }
}

impl AudioBackend for NullBackend {
    fn output_devices(&self) -> Result<Vec<OutputDevice>, PlaybackError> {
        Ok(self
            .inner
            .devices
            .iter()
            .enumerate()
            .filter(|(_, d)| d.connected.load(Ordering::Acquire))
            .map(|(index, d)| OutputDevice {
                index,
                name: d.config.name.clone(),
                max_sample_rate: d.config.max_sample_rate,
            })
            .collect())
    }

    fn attach(
        &self,
        device_index: usize,
        sample_rate: u32,
        source: Box<dyn SampleSource>,
    ) -> Result<(), PlaybackError> {
        let device = self
            .inner
            .devices
            .get(device_index)
            .filter(|d| d.connected.load(Ordering::Acquire))
            .ok_or(PlaybackError::NoSuchDevice(device_index))?;
        device.sample_rate.store(sample_rate, Ordering::Relaxed);
        *device.slot.lock() = Some(source);
        Ok(())
    }
}

/// Background period clock for a [`NullBackend`]. Stops when dropped.
pub struct NullClock {
    running: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for NullClock {
    fn drop(&mut self) {
        self.running.store(false, Ordering::Release);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::playback::{HandleState, PlaybackMode, Player};
    use crate::synth::{render_wave, WaveformSpec};

    #[test]
    fn clock_drives_playback_to_completion() {
        let backend = NullBackend::new();
        let player = Player::new(Arc::new(backend.clone()));
        let buf = render_wave(&WaveformSpec::default().with_duration(0.05)).unwrap();
        let _clock = backend.start_clock(50.0);
        let handle = player.play(&buf, PlaybackMode::Once, 0).unwrap();
        assert!(handle.wait(Duration::from_secs(5)));
        assert_eq!(handle.state(), HandleState::Stopped);
        assert_eq!(backend.capture(0), buf.samples());
    }

    #[test]
    fn stop_under_clock_halts_within_a_period() {
        let backend = NullBackend::new();
        let player = Player::new(Arc::new(backend.clone()));
        let buf = render_wave(&WaveformSpec::default().with_duration(0.5)).unwrap();
        let _clock = backend.start_clock(1.0);
        let handle = player.play(&buf, PlaybackMode::Continuous, 0).unwrap();
        player.stop(&handle);
        let at_stop = handle.emitted_samples();
        std::thread::sleep(Duration::from_millis(50));
        assert!(handle.emitted_samples() - at_stop <= DEFAULT_PERIOD as u64);
        assert!(handle.emitted_samples() <= DEFAULT_PERIOD as u64);
    }

    #[test]
    fn capture_can_be_disabled() {
        let backend = NullBackend::new().without_capture();
        let player = Player::new(Arc::new(backend.clone()));
        let buf = render_wave(&WaveformSpec::default()).unwrap();
        let handle = player.play(&buf, PlaybackMode::Once, 0).unwrap();
        backend.run_until_idle(1_000);
        assert_eq!(handle.emitted_samples(), buf.len() as u64);
        assert!(backend.capture(0).is_empty());
    }
}
