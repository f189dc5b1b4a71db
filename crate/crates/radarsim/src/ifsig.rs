//! Complex IF cube synthesis from scatter paths and calibrated noise
//! injection.
//!
//! Phase model per rx, chirp m and fast-time sample n:
//!
//! ```text
//! phi = (2*pi/c) * d_m * (B_sampled * n/N + f_c),   d_m = d + d_dot * m * T
//! ```
//!
//! Fast time runs over the ADC window; slow-time motion enters through the
//! per-chirp path length `d_m`. The beat tone of a path at length d lands
//! on range bin `d * B_sampled / c`.

use std::io::{BufWriter, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::Array3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{RadarConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::raytrace::ScatterPath;

/// Raw simulated IF samples, indexed `[rx][chirp][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfCube {
    pub samples: Array3<Complex64>,
    pub config: RadarConfig,
    pub frame_index: usize,
}

impl IfCube {
    pub fn zeros(config: &RadarConfig, frame_index: usize) -> IfCube {
        IfCube {
            samples: Array3::zeros((
                config.rx_count,
                config.chirps_per_frame,
                config.samples_per_chirp,
            )),
            config: config.clone(),
            frame_index,
        }
    }

    pub fn total_samples(&self) -> usize {
        self.samples.len()
    }

    /// Mean of |sample|^2 over the whole cube.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Sum the contribution of every scatter path into a fresh cube. An empty
/// path list yields an all-zero cube. Synthesis is linear in the paths and
/// bitwise independent of the rayon thread count (each (rx, chirp) row is
/// computed independently in path order).
pub fn synthesize_if(paths: &[ScatterPath], config: &RadarConfig) -> Result<IfCube> {
    synthesize_if_frame(paths, config, 0)
}

pub fn synthesize_if_frame(
    paths: &[ScatterPath],
    config: &RadarConfig,
    frame_index: usize,
) -> Result<IfCube> {
    config.validate()?;
    for p in paths {
        if p.rx_index >= config.rx_count {
            return Err(Error::invalid(format!(
                "path rx_index {} out of range for rx_count {}",
                p.rx_index, config.rx_count
            )));
        }
    }
    let n_rx = config.rx_count;
    let n_chirps = config.chirps_per_frame;
    let n_samples = config.samples_per_chirp;

    let mut by_rx: Vec<Vec<&ScatterPath>> = vec![Vec::new(); n_rx];
    for p in paths {
        by_rx[p.rx_index].push(p);
    }

    let k_wave = std::f64::consts::TAU / SPEED_OF_LIGHT;
    let bin_step = config.sampled_bandwidth_hz / n_samples as f64;
    let chirp_t = config.chirp_interval_s;
    let f_c = config.carrier_hz;

    let mut data = vec![Complex64::new(0.0, 0.0); n_rx * n_chirps * n_samples];
    data.par_chunks_mut(n_samples)
        .enumerate()
        .for_each(|(row, chunk)| {
            let rx = row / n_chirps;
            let m = row % n_chirps;
            for p in &by_rx[rx] {
                let d_m = p.path_length_m + p.path_rate_mps * m as f64 * chirp_t;
                // phi(n) = k*d_m*f_c + n * k*d_m*bin_step
                let phase0 = k_wave * d_m * f_c;
                let dphase = k_wave * d_m * bin_step;
                let mut acc = Complex64::from_polar(p.amplitude, phase0);
                let step = Complex64::from_polar(1.0, dphase);
                for cell in chunk.iter_mut() {
                    *cell += acc;
                    acc *= step;
                }
            }
        });

    Ok(IfCube {
        samples: Array3::from_shape_vec((n_rx, n_chirps, n_samples), data).unwrap(),
        config: config.clone(),
        frame_index,
    })
}

/// Add complex white Gaussian noise scaled for the requested SNR:
/// `sigma = sqrt(P_signal / 10^(SNR/10))` with `P_signal` the mean |s|^2
/// over the whole cube; real and imaginary parts carry variance 1/2 each.
/// `snr_db = inf` disables noise and returns the input bitwise. The noise
/// field is keyed by (seed, frame, rx, chirp), so it does not depend on
/// thread scheduling.
pub fn add_noise(cube: &IfCube, snr_db: f64, seed: u64) -> Result<IfCube> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(cube.clone());
    }
    let p_signal = cube.mean_power();
    if p_signal <= 0.0 {
        return Err(Error::invalid("SNR undefined for zero signal"));
    }
    let sigma = (p_signal / 10f64.powf(snr_db / 10.0)).sqrt();
    let comp = sigma * std::f64::consts::FRAC_1_SQRT_2;

    let (n_rx, n_chirps, n_samples) = cube.samples.dim();
    let mut out = cube.clone();
    let data = out.samples.as_slice_mut().unwrap();
    data.par_chunks_mut(n_samples)
        .enumerate()
        .for_each(|(row, chunk)| {
            let rx = row / n_chirps;
            let m = row % n_chirps;
            let mut rng = crate::rng::rng_for(&[
                seed,
                cube.frame_index as u64,
                rx as u64,
                m as u64,
                0x6e6f_6973,
            ]);
            for cell in chunk.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *cell += Complex64::new(comp * re, comp * im);
            }
        });
    let _ = n_rx;
    Ok(out)
}

// ---------------------------------------------------------------------
// IFC1 binary dump
// ---------------------------------------------------------------------

pub const IFC_MAGIC: &[u8; 4] = b"IFC1";
const MAX_IFC_CELLS: u64 = 1 << 28;

/// Write magic "IFC1", u32 rx/chirps/samples, then complex64 (two f32)
/// values in [rx][chirp][sample] row-major order, little-endian.
pub fn write_ifc(cube: &IfCube, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let (rx, chirps, samples) = cube.samples.dim();
    w.write_all(IFC_MAGIC).map_err(io)?;
    let mut hdr = [0u8; 12];
    LittleEndian::write_u32(&mut hdr[0..4], rx as u32);
    LittleEndian::write_u32(&mut hdr[4..8], chirps as u32);
    LittleEndian::write_u32(&mut hdr[8..12], samples as u32);
    w.write_all(&hdr).map_err(io)?;
    let mut buf = [0u8; 8];
    for c in cube.samples.iter() {
        LittleEndian::write_f32(&mut buf[0..4], c.re as f32);
        LittleEndian::write_f32(&mut buf[4..8], c.im as f32);
        w.write_all(&buf).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parse an IFC1 dump; returns the dimensions and data (upcast to f64).
pub fn parse_ifc(data: &[u8], origin: &Path) -> Result<Array3<Complex64>> {
    let perr = |msg: &str| Error::parse(origin, 0, msg);
    if data.len() < 16 {
        return Err(perr("file shorter than the IFC1 header"));
    }
    if &data[0..4] != IFC_MAGIC {
        return Err(perr("bad magic, expected IFC1"));
    }
    let rx = LittleEndian::read_u32(&data[4..8]) as u64;
    let chirps = LittleEndian::read_u32(&data[8..12]) as u64;
    let samples = LittleEndian::read_u32(&data[12..16]) as u64;
    let cells = rx
        .checked_mul(chirps)
        .and_then(|x| x.checked_mul(samples))
        .ok_or_else(|| perr("dimension overflow"))?;
    if cells == 0 || cells > MAX_IFC_CELLS {
        return Err(perr("dimensions out of range"));
    }
    let need = 16 + cells * 8;
    if data.len() as u64 != need {
        return Err(perr("file size does not match the header dimensions"));
    }
    let mut values = Vec::with_capacity(cells as usize);
    for i in 0..cells as usize {
        let off = 16 + i * 8;
        values.push(Complex64::new(
            LittleEndian::read_f32(&data[off..off + 4]) as f64,
            LittleEndian::read_f32(&data[off + 4..off + 8]) as f64,
        ));
    }
    Array3::from_shape_vec((rx as usize, chirps as usize, samples as usize), values)
        .map_err(|_| perr("shape mismatch"))
}

pub fn read_ifc(path: &Path) -> Result<Array3<Complex64>> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ifc(&data, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    fn single_path(rx: usize, d: f64, d_dot: f64) -> ScatterPath {
        ScatterPath {
            rx_index: rx,
            path_length_m: d,
            path_rate_mps: d_dot,
            amplitude: 1.0,
        }
    }

    #[test]
    fn empty_paths_zero_cube() {
        let cfg = default_config();
        let cube = synthesize_if(&[], &cfg).unwrap();
        assert!(cube.samples.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn rx_out_of_range_rejected() {
        let cfg = default_config();
        assert!(synthesize_if(&[single_path(4, 6.0, 0.0)], &cfg).is_err());
    }

    #[test]
    fn static_path_beats_at_the_expected_bin() {
        let cfg = default_config();
        let cube = synthesize_if(&[single_path(0, 6.0, 0.0)], &cfg).unwrap();
        // DFT by hand over fast time for chirp 0, rx 0.
        let n = cfg.samples_per_chirp;
        let row: Vec<Complex64> = (0..n).map(|i| cube.samples[[0, 0, i]]).collect();
        let mut best = (0usize, 0.0f64);
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, s) in row.iter().enumerate() {
                let ang = -std::f64::consts::TAU * (k * i) as f64 / n as f64;
                acc += s * Complex64::from_polar(1.0, ang);
            }
            if acc.norm() > best.1 {
                best = (k, acc.norm());
            }
        }
        // d * B_sampled / c = 6 * 3.488e9 / c = 69.81 -> bin 70
        assert_eq!(best.0, 70);
    }

    #[test]
    fn chirp_phase_advance_matches_path_rate() {
        let cfg = default_config();
        let d_dot = 2.0;
        let cube = synthesize_if(&[single_path(0, 6.0, d_dot)], &cfg).unwrap();
        let lambda = cfg.derive().wavelength_m;
        let expected = std::f64::consts::TAU / lambda * d_dot * cfg.chirp_interval_s;
        for m in 0..4 {
            let a = cube.samples[[0, m, 0]];
            let b = cube.samples[[0, m + 1, 0]];
            let measured = (b / a).arg();
            let wrapped = (expected + std::f64::consts::PI)
                .rem_euclid(std::f64::consts::TAU)
                - std::f64::consts::PI;
            assert!(
                (measured - wrapped).abs() < 1e-9,
                "chirp {m}: {measured} vs {wrapped}"
            );
        }
    }

    #[test]
    fn synthesis_is_linear() {
        let cfg = default_config();
        let a = vec![single_path(0, 6.0, 0.5), single_path(1, 7.0, -1.0)];
        let b = vec![single_path(0, 9.2, 1.5)];
        let ab: Vec<ScatterPath> = a.iter().chain(b.iter()).cloned().collect();
        let cube_a = synthesize_if(&a, &cfg).unwrap();
        let cube_b = synthesize_if(&b, &cfg).unwrap();
        let cube_ab = synthesize_if(&ab, &cfg).unwrap();
        for ((x, y), z) in cube_a
            .samples
            .iter()
            .zip(cube_b.samples.iter())
            .zip(cube_ab.samples.iter())
        {
            let sum = x + y;
            assert!((sum - z).norm() <= 1e-9 * sum.norm().max(1.0));
        }
    }

    #[test]
    fn doubling_distance_doubles_the_beat_bin() {
        let cfg = default_config();
        let peak_bin = |d: f64| -> usize {
            let cube = synthesize_if(&[single_path(0, d, 0.0)], &cfg).unwrap();
            let n = cfg.samples_per_chirp;
            let row: Vec<Complex64> = (0..n).map(|i| cube.samples[[0, 0, i]]).collect();
            (0..n)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, s) in row.iter().enumerate() {
                        let ang = -std::f64::consts::TAU * (k * i) as f64 / n as f64;
                        acc += s * Complex64::from_polar(1.0, ang);
                    }
                    (k, acc.norm())
                })
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap()
                .0
        };
        let b1 = peak_bin(3.0);
        let b2 = peak_bin(6.0);
        assert_eq!(b2, 2 * b1);
    }

    #[test]
    fn infinite_snr_is_identity() {
        let cfg = default_config();
        let cube = synthesize_if(&[single_path(0, 6.0, 0.0)], &cfg).unwrap();
        let out = add_noise(&cube, f64::INFINITY, 1).unwrap();
        assert_eq!(cube, out);
    }

    #[test]
    fn zero_cube_noise_rejected() {
        let cfg = default_config();
        let cube = IfCube::zeros(&cfg, 0);
        let err = add_noise(&cube, 20.0, 1).unwrap_err();
        assert!(err.to_string().contains("SNR undefined"));
    }

    #[test]
    fn noise_power_matches_snr() {
        let cfg = default_config();
        // Unit-amplitude tone on every rx so the cube has unit mean power.
        let paths: Vec<ScatterPath> = (0..4).map(|rx| single_path(rx, 6.0, 0.0)).collect();
        let cube = synthesize_if(&paths, &cfg).unwrap();
        assert!((cube.mean_power() - 1.0).abs() < 1e-9);

        let noisy = add_noise(&cube, 20.0, 123).unwrap();
        let mut noise_power = 0.0;
        for (a, b) in cube.samples.iter().zip(noisy.samples.iter()) {
            noise_power += (b - a).norm_sqr();
        }
        noise_power /= cube.total_samples() as f64;
        // sigma^2 = 0.01 within 5 %
        assert!(
            (noise_power - 0.01).abs() < 0.0005,
            "noise power {noise_power}"
        );
    }

    #[test]
    fn noise_deterministic_per_seed() {
        let cfg = default_config();
        let cube = synthesize_if(&[single_path(0, 6.0, 0.0)], &cfg).unwrap();
        let a = add_noise(&cube, 10.0, 77).unwrap();
        let b = add_noise(&cube, 10.0, 77).unwrap();
        assert_eq!(a, b);
        let c = add_noise(&cube, 10.0, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ifc_roundtrip() {
        let mut cfg = default_config();
        cfg.samples_per_chirp = 8;
        cfg.chirps_per_frame = 4;
        let cube = synthesize_if(&[single_path(0, 6.0, 1.0)], &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.ifc");
        write_ifc(&cube, &path).unwrap();
        let back = read_ifc(&path).unwrap();
        assert_eq!(back.dim(), cube.samples.dim());
        for (a, b) in back.iter().zip(cube.samples.iter()) {
            assert!((a.re - b.re).abs() < 1e-6 && (a.im - b.im).abs() < 1e-6);
        }
    }

    #[test]
    fn ifc_rejects_malformed_input() {
        for data in [
            &b""[..],
            &b"IFC1"[..],
            &b"XXXX\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00"[..],
            // size mismatch
            &b"IFC1\x01\x00\x00\x00\x01\x00\x00\x00\x02\x00\x00\x00\x00\x00\x00\x00"[..],
        ] {
            assert!(parse_ifc(data, Path::new("fuzz")).is_err());
        }
    }
}
