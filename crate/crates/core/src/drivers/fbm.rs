//! Fractional Brownian motion with Hurst index `H in (1/2, 1)`, sampled exactly
//! on a uniform grid by Cholesky factorisation of
//! `Gamma(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2 * Var(X_1)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use super::quad::integrate;
use super::{refinement_trend, rng, Trend, TrendRule};
use crate::error::{Error, Result};
use crate::path::{p_variation, SampledPath};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FbmSpec {
    pub hurst: f64,
    /// Number of grid cells; the path has `cells + 1` samples.
    pub cells: usize,
    pub horizon: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub stream: u64,
}

impl FbmSpec {
    pub fn new(hurst: f64, cells: usize, horizon: f64, seed: u64) -> Self {
        Self { hurst, cells, horizon, seed, stream: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.5 && self.hurst < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "Hurst index must lie in (1/2, 1), got {}",
                self.hurst
            )));
        }
        if self.cells < 1 {
            return Err(Error::InvalidParameter("fBm grid needs at least two samples".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// `Var(X_1) = 1/(2H) + int_0^inf ((1+s)^{H-1/2} - s^{H-1/2})^2 ds`.
///
/// On `[0, S]` the integral is computed by quadrature in `u = s / (1 + s)`.
/// The integrand decays only like `s^{2H-3}`, which in `u` is a singularity at
/// `u = 1`, so the tail `[S, inf)` is integrated term by term from the
/// binomial series `(1+s)^a - s^a = sum_k C(a, k) s^{a-k}`.
pub fn var1(hurst: f64) -> f64 {
    const S: f64 = 100.0;
    const TERMS: usize = 12;
    let a = hurst - 0.5;
    let integrand = |u: f64| {
        let s = u / (1.0 - u);
        // (1+s)^a - s^a without cancellation for large s
        let diff = s.powf(a) * (a * (1.0 / s).ln_1p()).exp_m1();
        diff * diff / ((1.0 - u) * (1.0 - u))
    };
    let body = integrate(integrand, 0.0, S / (1.0 + S), 1e-12);
    let mut binom = [0.0; TERMS + 1];
    binom[0] = 1.0;
    for k in 1..=TERMS {
        binom[k] = binom[k - 1] * (a - (k - 1) as f64) / k as f64;
    }
    let mut tail = 0.0;
    for k in 1..=TERMS {
        for l in 1..=TERMS {
            let m = (k + l) as f64;
            // int_S^inf s^{2a - m} ds
            tail += binom[k] * binom[l] * S.powf(2.0 * a - m + 1.0) / (m - 1.0 - 2.0 * a);
        }
    }
    1.0 / (2.0 * hurst) + body + tail
}

pub fn covariance(s: f64, t: f64, hurst: f64, var1: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2)) * var1
}

/// A factorised covariance for repeated sampling on one grid.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    pub hurst: f64,
    pub var1: f64,
    times: Vec<f64>,
    chol: DMatrix<f64>,
}

impl FbmSampler {
    pub fn new(hurst: f64, cells: usize, horizon: f64) -> Result<Self> {
        FbmSpec::new(hurst, cells, horizon, 0).validate()?;
        let v1 = var1(hurst);
        let times: Vec<f64> = (0..=cells).map(|i| horizon * i as f64 / cells as f64).collect();
        // X_0 = 0 is deterministic; factor the covariance of X_{t_1..t_n}
        let cov = DMatrix::from_fn(cells, cells, |i, j| covariance(times[i + 1], times[j + 1], hurst, v1));
        let chol = cov.cholesky().ok_or(Error::Factorization)?;
        Ok(Self { hurst, var1: v1, times, chol: chol.unpack() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cells(&self) -> usize {
        self.times.len() - 1
    }

    pub fn sample(&self, seed: u64, stream: u64) -> Result<SampledPath> {
        let mut r = rng(seed, stream);
        let n = self.cells();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
        let x = &self.chol * z;
        let mut values = vec![0.0; n + 1];
        values[1..].copy_from_slice(x.as_slice());
        SampledPath::scalar(self.times.clone(), values)
    }

    /// p-variation of one sample restricted to the dyadic subgrids with
    /// `2, 4, ..., cells` cells (`cells` must be a power of two).
    pub fn variation_probe(&self, p: f64, seed: u64, stream: u64, rule: TrendRule) -> Result<Trend> {
        let n = self.cells();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter("probe grids need a power-of-two cell count".into()));
        }
        let path = self.sample(seed, stream)?;
        dyadic_trend(&path, p, rule)
    }
}

/// p-variation of `path` on the nested subgrids with `2^1, ..., 2^K = len - 1` cells.
pub fn dyadic_trend(path: &SampledPath, p: f64, rule: TrendRule) -> Result<Trend> {
    let n = path.len() - 1;
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::InvalidParameter("probe grids need a power-of-two cell count".into()));
    }
    let levels = n.trailing_zeros() as usize;
    let mut cells = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels);
    for k in 1..=levels {
        let stride = n >> k;
        let idx: Vec<usize> = (0..=n).step_by(stride).collect();
        let times = idx.iter().map(|&i| path.times()[i]).collect();
        let vals = idx.iter().flat_map(|&i| path.point(i).iter().copied()).collect();
        let sub = SampledPath::continuous(times, vals, path.dim())?;
        cells.push((1usize << k) as f64);
        values.push(p_variation(&sub, p)?);
    }
    Ok(refinement_trend(cells, values, rule))
}

pub fn sample_fbm(spec: &FbmSpec) -> Result<SampledPath> {
    spec.validate()?;
    FbmSampler::new(spec.hurst, spec.cells, spec.horizon)?.sample(spec.seed, spec.stream)
}

/// Refinement trend of the p-variation of one sample over `refinements`
/// dyadic levels (`2^refinements` cells on `[0, horizon]`). `spec.cells` is
/// ignored.
pub fn fbm_variation_probe(spec: &FbmSpec, p: f64, refinements: u32) -> Result<Trend> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let sampler = FbmSampler::new(spec.hurst, 1usize << refinements, spec.horizon)?;
    sampler.variation_probe(p, spec.seed, spec.stream, TrendRule::FBM)
}
