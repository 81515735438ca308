//! Random observation model.
//!
//! Final values carry independent Gaussian errors `sigma_k eps_k`, source
//! samples carry independent Brownian paths `vartheta xi_k(t)`, and the
//! coefficient is observed as `a(t) + eps xi(t)`.
//!
//! Every draw comes from a ChaCha8 stream whose seed is derived from
//! `(master seed, purpose, trial)`; node-indexed draws use the ChaCha stream id.
//! Normals use the ziggurat sampler of `rand_distr`. Draws are therefore a
//! pure function of the key, independent of evaluation order or thread count.

use alloc::vec::Vec;

use libm::sqrt;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::spectral::GridSamples;

/// Disjoint sub-stream tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    FinalValue = 0x01,
    SourcePath = 0x02,
    CoefficientPath = 0x03,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `(seed, purpose, trial)` stream family.
pub fn derive_seed(seed: u64, purpose: Purpose, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ purpose as u64) ^ trial)
}

fn stream(seed: u64, purpose: Purpose, trial: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, trial));
    rng.set_stream(index);
    rng
}

/// Brownian motion on `grid`, `xi(0) = 0`, Euler increments `sqrt(dt) N(0,1)`.
pub fn brownian_path(seed: u64, purpose: Purpose, trial: u64, index: u64, grid: &TimeGrid) -> Vec<f64> {
    let mut rng = stream(seed, purpose, trial, index);
    let mut path = Vec::with_capacity(grid.len());
    let mut xi = 0.0;
    path.push(xi);
    for j in 0..grid.steps() {
        let z: f64 = StandardNormal.sample(&mut rng);
        xi += sqrt(grid.step(j)) * z;
        path.push(xi);
    }
    path
}

/// Noise levels and the master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Per-node standard deviations `sigma_k`.
    pub sigma: Vec<f64>,
    pub v_max: f64,
    /// Source noise amplitude.
    pub vartheta: f64,
    /// Coefficient noise amplitude.
    pub eps: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn uniform(n: usize, sigma: f64, v_max: f64, vartheta: f64, eps: f64, seed: u64) -> Self {
        Self {
            sigma: alloc::vec![sigma; n],
            v_max,
            vartheta,
            eps,
            seed,
        }
    }

    pub fn noiseless(n: usize, seed: u64) -> Self {
        Self::uniform(n, 0.0, 1.0, 0.0, 0.0, seed)
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.sigma.iter().enumerate() {
            if !(*s >= 0.0 && *s < self.v_max) {
                return Err(Error::NoiseBound {
                    k: k + 1,
                    sigma: *s,
                    v_max: self.v_max,
                });
            }
        }
        if !(self.vartheta >= 0.0) || !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter("noise amplitudes must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma.iter().all(|s| *s == 0.0) && self.vartheta == 0.0 && self.eps == 0.0
    }
}

/// `u_T(x_k) + sigma_k eps_k`.
pub fn observe_final(true_samples: &GridSamples, spec: &NoiseSpec, trial: u64) -> Result<GridSamples> {
    spec.validate()?;
    if true_samples.n() != spec.n() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} samples but {} noise levels",
            true_samples.n(),
            spec.n()
        )));
    }
    let mut rng = stream(spec.seed, Purpose::FinalValue, trial, 0);
    let mut out = true_samples.clone();
    for (v, s) in out.values_mut().iter_mut().zip(&spec.sigma) {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += s * z;
    }
    Ok(out)
}

/// `g(x_k, t_j) + vartheta xi_k(t_j)`; `true_paths[j]` holds the node values
/// at `t_j`.
pub fn observe_source(
    true_paths: &[GridSamples],
    spec: &NoiseSpec,
    grid: &TimeGrid,
    trial: u64,
) -> Result<Vec<GridSamples>> {
    if true_paths.len() != grid.len() {
        return Err(Error::InvalidParameter("one node vector per grid time is required".into()));
    }
    let mut out = true_paths.to_vec();
    if spec.vartheta == 0.0 {
        return Ok(out);
    }
    let n = true_paths[0].n();
    for k in 0..n {
        let xi = brownian_path(spec.seed, Purpose::SourcePath, trial, k as u64, grid);
        for (row, x) in out.iter_mut().zip(&xi) {
            row.values_mut()[k] += spec.vartheta * x;
        }
    }
    Ok(out)
}

/// Observed coefficient path and its relation to the bound `a0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientObservation {
    pub path: Vec<f64>,
    /// Whether `0 < abar(t) <= a0` on the whole grid.
    pub within_bounds: bool,
    /// Realized `min_t (a0 - abar(t))`.
    pub b0: f64,
}

/// `a(t_j) + eps xi(t_j)` with a single Brownian path.
pub fn observe_coefficient(
    a_samples: &[f64],
    spec: &NoiseSpec,
    grid: &TimeGrid,
    a0: f64,
    trial: u64,
) -> Result<CoefficientObservation> {
    if a_samples.len() != grid.len() {
        return Err(Error::InvalidParameter("coefficient samples must match the grid".into()));
    }
    let path: Vec<f64> = if spec.eps == 0.0 {
        a_samples.to_vec()
    } else {
        let xi = brownian_path(spec.seed, Purpose::CoefficientPath, trial, 0, grid);
        a_samples.iter().zip(&xi).map(|(a, x)| a + spec.eps * x).collect()
    };
    let within_bounds = path.iter().all(|a| *a > 0.0 && *a <= a0);
    let b0 = path.iter().map(|a| a0 - a).fold(f64::INFINITY, f64::min);
    Ok(CoefficientObservation {
        path,
        within_bounds,
        b0,
    })
}

/// Everything the regularizers see in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub final_samples: GridSamples,
    /// `source_paths[j]` are the noisy node values at `t_j`.
    pub source_paths: Vec<GridSamples>,
    pub coefficient: CoefficientObservation,
}

impl ObservedData {
    pub fn n(&self) -> usize {
        self.final_samples.n()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::uniform(1.0, 10).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let truth = GridSamples::new(alloc::vec![0.5, -1.0, 2.0]).unwrap();
        let spec = NoiseSpec::noiseless(3, 9);
        assert_eq!(observe_final(&truth, &spec, 0).unwrap(), truth);
        let paths = alloc::vec![truth.clone(); 11];
        assert_eq!(observe_source(&paths, &spec, &grid(), 0).unwrap(), paths);
        let a = alloc::vec![1.0; 11];
        let obs = observe_coefficient(&a, &spec, &grid(), 2.0, 0).unwrap();
        assert_eq!(obs.path, a);
        assert!(obs.within_bounds);
        assert_eq!(obs.b0, 1.0);
    }

    #[test]
    fn deterministic_per_key() {
        let truth = GridSamples::new(alloc::vec![0.0; 16]).unwrap();
        let spec = NoiseSpec::uniform(16, 0.3, 1.0, 0.2, 0.1, 42);
        let a = observe_final(&truth, &spec, 3).unwrap();
        let b = observe_final(&truth, &spec, 3).unwrap();
        let c = observe_final(&truth, &spec, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn vartheta_does_not_change_final_noise() {
        let truth = GridSamples::new(alloc::vec![0.0; 8]).unwrap();
        let a = observe_final(&truth, &NoiseSpec::uniform(8, 0.3, 1.0, 0.0, 0.0, 5), 1).unwrap();
        let b = observe_final(&truth, &NoiseSpec::uniform(8, 0.3, 1.0, 0.7, 0.4, 5), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coefficient_path_starts_at_truth() {
        let a = alloc::vec![1.0; 11];
        let spec = NoiseSpec::uniform(2, 0.0, 1.0, 0.0, 0.5, 77);
        let obs = observe_coefficient(&a, &spec, &grid(), 1.2, 2).unwrap();
        assert_eq!(obs.path[0], 1.0);
        assert_ne!(obs.path[5], 1.0);
    }

    #[test]
    fn noise_bound_enforced() {
        let truth = GridSamples::new(alloc::vec![0.0; 4]).unwrap();
        let spec = NoiseSpec::uniform(4, 0.5, 0.5, 0.0, 0.0, 1);
        assert!(matches!(observe_final(&truth, &spec, 0), Err(Error::NoiseBound { .. })));
    }

    #[test]
    fn violation_is_reported() {
        let a = alloc::vec![1.0; 11];
        let spec = NoiseSpec::uniform(2, 0.0, 1.0, 0.0, 2.0, 11);
        let obs = observe_coefficient(&a, &spec, &grid(), 1.01, 0).unwrap();
        assert!(!obs.within_bounds);
        assert!(obs.b0 < 0.01);
    }
}
