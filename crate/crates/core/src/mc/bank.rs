//! Common random numbers.
//!
//! Every noise row is produced by its own ChaCha8 stream keyed by
//! `(master_seed, stream, replicate)`; the value at time `t` is the `t`-th
//! draw of that stream. Any entry can therefore be regenerated without the
//! rest of the bank, and the bank does not depend on generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::infofn::Excitation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Measurement = 1,
    GaussianExploration = 2,
    BinaryExploration = 3,
}

/// Generator for one `(master_seed, stream, replicate)` row.
pub fn stream_rng(master_seed: u64, stream: Stream, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(stream as u64).to_le_bytes());
    key[16..24].copy_from_slice(&replicate.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn draw_one(rng: &mut ChaCha8Rng, stream: Stream) -> f64 {
    match stream {
        Stream::Measurement | Stream::GaussianExploration => rng.sample(StandardNormal),
        Stream::BinaryExploration => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    }
}

fn draw_row(master_seed: u64, stream: Stream, replicate: u64, len: usize) -> Vec<f64> {
    let mut rng = stream_rng(master_seed, stream, replicate);
    (0..len).map(|_| draw_one(&mut rng, stream)).collect()
}

/// Regenerates a single bank entry from its coordinates.
pub fn draw(master_seed: u64, stream: Stream, replicate: u64, t: usize) -> f64 {
    let mut rng = stream_rng(master_seed, stream, replicate);
    for _ in 0..t {
        draw_one(&mut rng, stream);
    }
    draw_one(&mut rng, stream)
}

/// Materialized noise for `n_mc` replicates over horizon `T`.
///
/// `e` holds unit-variance measurement noise with column 0 reserved for the
/// initialization experiment; the exploration banks hold unit-variance
/// bases `ᾱₜ` for `t = 1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBank {
    master_seed: u64,
    n_mc: usize,
    horizon: usize,
    e: Vec<f64>,
    alpha_gauss: Vec<f64>,
    alpha_binary: Vec<f64>,
}

impl NoiseBank {
    pub fn generate(master_seed: u64, n_mc: usize, horizon: usize) -> Self {
        let rows = |stream, len| -> Vec<f64> {
            (0..n_mc as u64)
                .into_par_iter()
                .flat_map_iter(|r| draw_row(master_seed, stream, r, len))
                .collect()
        };
        Self {
            master_seed,
            n_mc,
            horizon,
            e: rows(Stream::Measurement, horizon + 1),
            alpha_gauss: rows(Stream::GaussianExploration, horizon),
            alpha_binary: rows(Stream::BinaryExploration, horizon),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `e₀..e_T` of replicate `r`.
    pub fn e_row(&self, r: usize) -> &[f64] {
        let w = self.horizon + 1;
        &self.e[r * w..(r + 1) * w]
    }

    /// `ᾱ₁..ᾱ_T` of replicate `r` for the given family.
    pub fn alpha_row(&self, r: usize, excitation: Excitation) -> &[f64] {
        let bank = match excitation {
            Excitation::Gaussian => &self.alpha_gauss,
            Excitation::Binary => &self.alpha_binary,
        };
        &bank[r * self.horizon..(r + 1) * self.horizon]
    }

    /// SHA-256 of the measurement-noise bank.
    pub fn e_checksum(&self) -> [u8; 32] {
        digest(&self.e)
    }

    pub fn alpha_checksum(&self, excitation: Excitation) -> [u8; 32] {
        match excitation {
            Excitation::Gaussian => digest(&self.alpha_gauss),
            Excitation::Binary => digest(&self.alpha_binary),
        }
    }
}

fn digest(values: &[f64]) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}
