//! FMCW radar parameterization and derived resolution/ambiguity quantities.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Complete FMCW and antenna parameterization.
///
/// `swept_bandwidth_hz` is the total ramp excursion; `sampled_bandwidth_hz`
/// is the portion of the ramp covered while the ADC window is open. Range
/// resolution follows from the sampled bandwidth, so both are kept explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    pub carrier_hz: f64,
    pub swept_bandwidth_hz: f64,
    pub sampled_bandwidth_hz: f64,
    pub chirp_interval_s: f64,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    pub frame_rate_hz: f64,
    pub tx_count: usize,
    pub rx_count: usize,
    pub rx_spacing_m: f64,
    /// Signal-to-noise ratio in dB; `inf` disables noise injection.
    pub snr_db: f64,
    pub rng_seed: u64,
}

/// Resolution and ambiguity figures derived from a [`RadarConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub wavelength_m: f64,
    pub range_resolution_m: f64,
    pub max_range_m: f64,
    pub velocity_resolution_mps: f64,
    pub max_velocity_mps: f64,
}

/// Field names accepted by the config file format, in canonical order.
pub const CONFIG_FIELDS: [&str; 12] = [
    "carrier_hz",
    "swept_bandwidth_hz",
    "sampled_bandwidth_hz",
    "chirp_interval_s",
    "samples_per_chirp",
    "chirps_per_frame",
    "frame_rate_hz",
    "tx_count",
    "rx_count",
    "rx_spacing_m",
    "snr_db",
    "rng_seed",
];

impl Default for RadarConfig {
    fn default() -> Self {
        default_config()
    }
}

/// 77 GHz configuration matching a TI AWR1843-class device: 256 samples per
/// chirp, 128 chirps per frame, 10 frames per second, 3 TX / 4 RX. The
/// sampled bandwidth and chirp interval are chosen so the derived figures
/// land at ~4.3 cm range resolution, ~11 m max range, ~7.1 cm/s velocity
/// resolution and ~4.5 m/s max velocity.
pub fn default_config() -> RadarConfig {
    let carrier_hz = 77.0e9;
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    RadarConfig {
        carrier_hz,
        swept_bandwidth_hz: 3.9e9,
        sampled_bandwidth_hz: 3.488e9,
        chirp_interval_s: 214.3e-6,
        samples_per_chirp: 256,
        chirps_per_frame: 128,
        frame_rate_hz: 10.0,
        tx_count: 3,
        rx_count: 4,
        rx_spacing_m: wavelength / 2.0,
        snr_db: 20.0,
        rng_seed: 0,
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier_hz must be positive"));
        }
        if !(self.sampled_bandwidth_hz > 0.0)
            || self.sampled_bandwidth_hz > self.swept_bandwidth_hz
        {
            return Err(Error::invalid(
                "sampled_bandwidth_hz must satisfy 0 < sampled <= swept",
            ));
        }
        if self.samples_per_chirp < 2 || !self.samples_per_chirp.is_power_of_two() {
            return Err(Error::invalid(
                "samples_per_chirp must be a power of two >= 2",
            ));
        }
        if self.chirps_per_frame < 2 || !self.chirps_per_frame.is_power_of_two() {
            return Err(Error::invalid(
                "chirps_per_frame must be a power of two >= 2",
            ));
        }
        if !(self.chirp_interval_s > 0.0) {
            return Err(Error::invalid("chirp_interval_s must be positive"));
        }
        if !(self.frame_rate_hz > 0.0) {
            return Err(Error::invalid("frame_rate_hz must be positive"));
        }
        if self.chirp_interval_s * self.chirps_per_frame as f64 > 1.0 / self.frame_rate_hz {
            return Err(Error::invalid(
                "chirp burst (chirp_interval_s * chirps_per_frame) exceeds the frame period",
            ));
        }
        if self.tx_count == 0 || self.rx_count == 0 {
            return Err(Error::invalid("tx_count and rx_count must be >= 1"));
        }
        if !(self.rx_spacing_m > 0.0) {
            return Err(Error::invalid("rx_spacing_m must be positive"));
        }
        if self.snr_db.is_nan() {
            return Err(Error::invalid("snr_db must not be NaN"));
        }
        Ok(())
    }

    /// Derived resolution/ambiguity quantities. `max_range` and
    /// `max_velocity` are computed as bin-count multiples of the resolutions
    /// so the internal-consistency identities hold exactly.
    pub fn derive(&self) -> DerivedParams {
        let wavelength_m = SPEED_OF_LIGHT / self.carrier_hz;
        let range_resolution_m = SPEED_OF_LIGHT / (2.0 * self.sampled_bandwidth_hz);
        let velocity_resolution_mps =
            wavelength_m / (2.0 * self.chirps_per_frame as f64 * self.chirp_interval_s);
        DerivedParams {
            wavelength_m,
            range_resolution_m,
            max_range_m: self.samples_per_chirp as f64 * range_resolution_m,
            velocity_resolution_mps,
            max_velocity_mps: (self.chirps_per_frame / 2) as f64 * velocity_resolution_mps,
        }
    }

    /// Duration of the ADC window within one chirp. The sweep covers the
    /// full `swept_bandwidth_hz` over `chirp_interval_s`; sampling covers
    /// only the `sampled_bandwidth_hz` portion of it.
    pub fn adc_window_s(&self) -> f64 {
        self.chirp_interval_s * self.sampled_bandwidth_hz / self.swept_bandwidth_hz
    }

    /// Apply `key = value` to one field; used by the file parser and the
    /// CLI `--set` flag. Unknown keys are rejected.
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        fn f64_of(key: &str, v: &str) -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| {
                Error::invalid(format!("field {key}: cannot parse {v:?} as a number"))
            })
        }
        fn usize_of(key: &str, v: &str) -> Result<usize> {
            v.trim().parse::<usize>().map_err(|_| {
                Error::invalid(format!("field {key}: cannot parse {v:?} as an integer"))
            })
        }
        match key {
            "carrier_hz" => self.carrier_hz = f64_of(key, value)?,
            "swept_bandwidth_hz" => self.swept_bandwidth_hz = f64_of(key, value)?,
            "sampled_bandwidth_hz" => self.sampled_bandwidth_hz = f64_of(key, value)?,
            "chirp_interval_s" => self.chirp_interval_s = f64_of(key, value)?,
            "samples_per_chirp" => self.samples_per_chirp = usize_of(key, value)?,
            "chirps_per_frame" => self.chirps_per_frame = usize_of(key, value)?,
            "frame_rate_hz" => self.frame_rate_hz = f64_of(key, value)?,
            "tx_count" => self.tx_count = usize_of(key, value)?,
            "rx_count" => self.rx_count = usize_of(key, value)?,
            "rx_spacing_m" => self.rx_spacing_m = f64_of(key, value)?,
            "snr_db" => self.snr_db = f64_of(key, value)?,
            "rng_seed" => {
                self.rng_seed = value.trim().parse::<u64>().map_err(|_| {
                    Error::invalid(format!("field rng_seed: cannot parse {value:?} as u64"))
                })?
            }
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Canonical `key = value` serialization; round-trips through
    /// [`parse_config_str`] bit-exactly and feeds [`config_hash`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "carrier_hz = {:?}", self.carrier_hz);
        let _ = writeln!(s, "swept_bandwidth_hz = {:?}", self.swept_bandwidth_hz);
        let _ = writeln!(s, "sampled_bandwidth_hz = {:?}", self.sampled_bandwidth_hz);
        let _ = writeln!(s, "chirp_interval_s = {:?}", self.chirp_interval_s);
        let _ = writeln!(s, "samples_per_chirp = {}", self.samples_per_chirp);
        let _ = writeln!(s, "chirps_per_frame = {}", self.chirps_per_frame);
        let _ = writeln!(s, "frame_rate_hz = {:?}", self.frame_rate_hz);
        let _ = writeln!(s, "tx_count = {}", self.tx_count);
        let _ = writeln!(s, "rx_count = {}", self.rx_count);
        let _ = writeln!(s, "rx_spacing_m = {:?}", self.rx_spacing_m);
        let _ = writeln!(s, "snr_db = {:?}", self.snr_db);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        s
    }
}

/// Parse a `key = value` config document on top of `base`. Lines starting
/// with `#` and blank lines are skipped; unknown keys are rejected with the
/// offending line number.
pub fn parse_config_str(text: &str, base: RadarConfig, origin: &Path) -> Result<RadarConfig> {
    let mut cfg = base;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, idx + 1, "expected `key = value`"))?;
        cfg.set_field(key.trim(), value)
            .map_err(|e| Error::parse(origin, idx + 1, e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, base: RadarConfig) -> Result<RadarConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, base, path)
}

pub fn save_config(cfg: &RadarConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_config_string()).map_err(|e| Error::io(path, e))
}

/// 64-bit digest binding generated data to the exact generating parameters.
pub fn config_hash(cfg: &RadarConfig) -> u64 {
    let digest = Sha256::digest(cfg.to_config_string().as_bytes());
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}
