//! Scalar pure-jump Lévy drivers, truncated at a jump size `eps > 0`.
//!
//! Jumps with `|x| > eps` form a marked Poisson process with intensity `nu`
//! restricted to `{|x| > eps}`. With compensation on, the drift
//! `-t * int_{eps < |x| <= 1} x nu(dx)` is added. The `eps -> 0` limit is only
//! approached through [`truncation_sweep`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{refinement_trend, rng, Trend, TrendRule};
use crate::error::{Error, Result};
use crate::path::{p_variation, SampledPath};

/// Above this many expected jumps a sample is refused.
pub const MAX_EXPECTED_JUMPS: f64 = 5e7;

/// Jump-size distribution of a compound Poisson component.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum JumpLaw {
    /// Finitely many sizes with (unnormalised) weights.
    Atoms { values: Vec<f64>, weights: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LevyComponent {
    /// `nu(dx) = c |x|^{-1-alpha} dx`, `alpha in (0, 2)`.
    Stable { alpha: f64, c: f64 },
    /// `nu = rate * law`.
    CompoundPoisson { rate: f64, law: JumpLaw },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevySpec {
    /// `nu` is the sum of the components.
    pub components: Vec<LevyComponent>,
    pub truncation: f64,
    pub compensate: bool,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub stream: u64,
    /// Uniform grid cells added to the jump times (0 keeps only `0`, `T` and the jumps).
    #[cfg_attr(feature = "serde", serde(default))]
    pub grid: usize,
}

impl LevySpec {
    pub fn stable(alpha: f64, c: f64, truncation: f64, seed: u64) -> Self {
        Self {
            components: vec![LevyComponent::Stable { alpha, c }],
            truncation,
            compensate: true,
            seed,
            stream: 0,
            grid: 0,
        }
    }

    pub fn compound_poisson(rate: f64, law: JumpLaw, seed: u64) -> Self {
        Self {
            components: vec![LevyComponent::CompoundPoisson { rate, law }],
            truncation: 0.0,
            compensate: false,
            seed,
            stream: 0,
            grid: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("Lévy measure has no components".into()));
        }
        if !(self.truncation >= 0.0) || !self.truncation.is_finite() {
            return Err(Error::InvalidParameter(format!("truncation must be >= 0, got {}", self.truncation)));
        }
        for comp in &self.components {
            match comp {
                LevyComponent::Stable { alpha, c } => {
                    if !(*alpha > 0.0 && *alpha < 2.0) {
                        return Err(Error::InvalidParameter(format!("stable index must lie in (0, 2), got {alpha}")));
                    }
                    if !(*c >= 0.0) || !c.is_finite() {
                        return Err(Error::InvalidParameter(format!("stable intensity must be >= 0, got {c}")));
                    }
                    if self.truncation == 0.0 && *c > 0.0 {
                        return Err(Error::InfiniteActivity);
                    }
                }
                LevyComponent::CompoundPoisson { rate, law } => {
                    if !(*rate >= 0.0) || !rate.is_finite() {
                        return Err(Error::InvalidParameter(format!("jump rate must be >= 0, got {rate}")));
                    }
                    match law {
                        JumpLaw::Atoms { values, weights } => {
                            if values.is_empty()
                                || values.len() != weights.len()
                                || weights.iter().any(|w| !(*w >= 0.0))
                                || !(weights.iter().sum::<f64>() > 0.0)
                                || values.iter().any(|v| !v.is_finite())
                            {
                                return Err(Error::InvalidParameter(
                                    "atoms need finite values and non-negative weights with positive sum".into(),
                                ));
                            }
                        }
                        JumpLaw::Uniform { lo, hi } => {
                            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                                return Err(Error::InvalidParameter("uniform jump law needs lo < hi".into()));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `nu({|x| > eps})`.
fn tail_rate(comp: &LevyComponent, eps: f64) -> f64 {
    match comp {
        LevyComponent::Stable { alpha, c } => 2.0 * c * eps.powf(-alpha) / alpha,
        LevyComponent::CompoundPoisson { rate, .. } => *rate,
    }
}

/// `int_{eps < |x| <= 1} x nu(dx)`.
fn small_jump_mean(comp: &LevyComponent, eps: f64) -> f64 {
    match comp {
        // symmetric
        LevyComponent::Stable { .. } => 0.0,
        LevyComponent::CompoundPoisson { rate, law } => {
            let inside = |x: f64| x.abs() > eps && x.abs() <= 1.0;
            match law {
                JumpLaw::Atoms { values, weights } => {
                    let total: f64 = weights.iter().sum();
                    rate * values.iter().zip(weights).filter(|(x, _)| inside(**x)).map(|(x, w)| x * w).sum::<f64>()
                        / total
                }
                JumpLaw::Uniform { lo, hi } => {
                    // int over [lo, hi] ∩ ([-1, -eps) ∪ (eps, 1]) of x dx / (hi - lo)
                    let piece = |a: f64, b: f64| {
                        let (a, b) = (a.max(*lo), b.min(*hi));
                        if b > a {
                            0.5 * (b * b - a * a)
                        } else {
                            0.0
                        }
                    };
                    rate * (piece(-1.0, -eps) + piece(eps, 1.0)) / (hi - lo)
                }
            }
        }
    }
}

fn draw_size<R: Rng>(comp: &LevyComponent, eps: f64, r: &mut R) -> f64 {
    match comp {
        LevyComponent::Stable { alpha, .. } => {
            // P(|x| > r) = (r / eps)^{-alpha} for r > eps
            let u: f64 = 1.0 - r.random::<f64>();
            let size = eps * u.powf(-1.0 / alpha);
            if r.random::<bool>() {
                size
            } else {
                -size
            }
        }
        LevyComponent::CompoundPoisson { law, .. } => match law {
            JumpLaw::Atoms { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut target = r.random::<f64>() * total;
                for (v, w) in values.iter().zip(weights) {
                    if target < *w {
                        return *v;
                    }
                    target -= w;
                }
                *values.last().expect("validated non-empty")
            }
            JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * r.random::<f64>(),
        },
    }
}

/// A sampled driver together with its jump list.
#[derive(Debug, Clone, PartialEq)]
pub struct LevySample {
    pub path: SampledPath,
    pub horizon: f64,
    pub truncation: f64,
    /// Chronological.
    pub jump_times: Vec<f64>,
    pub jumps: Vec<f64>,
    /// Slope of the compensating drift (0 without compensation).
    pub drift: f64,
}

impl LevySample {
    fn from_jumps(
        jump_times: Vec<f64>,
        jumps: Vec<f64>,
        drift: f64,
        horizon: f64,
        truncation: f64,
        grid: usize,
    ) -> Result<Self> {
        let mut grid_times: Vec<f64> = (0..=grid.max(1)).map(|i| horizon * i as f64 / grid.max(1) as f64).collect();
        grid_times.dedup();
        let mut times = Vec::with_capacity(grid_times.len() + 2 * jump_times.len());
        let mut values = Vec::with_capacity(times.capacity());
        let mut level = 0.0;
        let (mut g, mut j) = (0, 0);
        while g < grid_times.len() || j < jump_times.len() {
            let take_jump = j < jump_times.len() && (g >= grid_times.len() || jump_times[j] <= grid_times[g]);
            if take_jump {
                let t = jump_times[j];
                if g < grid_times.len() && grid_times[g] == t {
                    g += 1;
                }
                times.push(t);
                values.push(level + drift * t);
                level += jumps[j];
                times.push(t);
                values.push(level + drift * t);
                j += 1;
            } else {
                let t = grid_times[g];
                times.push(t);
                values.push(level + drift * t);
                g += 1;
            }
        }
        let path = if jumps.is_empty() {
            SampledPath::scalar(times, values)?
        } else {
            SampledPath::cadlag(times, values, 1)?
        };
        Ok(Self { path, horizon, truncation, jump_times, jumps, drift })
    }

    /// The same realisation with jumps of size `<= eps` removed and the drift
    /// recomputed for `eps`. Needs `eps >= self.truncation`.
    pub fn coarsen(&self, spec: &LevySpec, eps: f64) -> Result<Self> {
        if eps < self.truncation {
            return Err(Error::InvalidParameter(format!(
                "cannot refine a sample truncated at {} down to {eps}",
                self.truncation
            )));
        }
        let (times, sizes): (Vec<f64>, Vec<f64>) = self
            .jump_times
            .iter()
            .zip(&self.jumps)
            .filter(|(_, x)| x.abs() > eps)
            .map(|(t, x)| (*t, *x))
            .unzip();
        LevySample::from_jumps(times, sizes, drift(spec, eps), self.horizon, eps, spec.grid)
    }
}

fn drift(spec: &LevySpec, eps: f64) -> f64 {
    if spec.compensate {
        -spec.components.iter().map(|c| small_jump_mean(c, eps)).sum::<f64>()
    } else {
        0.0
    }
}

/// Expected number of jumps of size `> truncation` on `[0, horizon]`.
pub fn expected_jumps(spec: &LevySpec, horizon: f64) -> f64 {
    spec.components.iter().map(|c| tail_rate(c, spec.truncation)).sum::<f64>() * horizon
}

/// One realisation on `[0, horizon]`.
pub fn sample_levy(spec: &LevySpec, horizon: f64) -> Result<LevySample> {
    spec.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let expected = expected_jumps(spec, horizon);
    if !(expected <= MAX_EXPECTED_JUMPS) {
        return Err(Error::InvalidParameter(format!(
            "{expected:.3e} expected jumps; raise the truncation level"
        )));
    }
    let eps = spec.truncation;
    let mut r = rng(spec.seed, spec.stream);
    let mut events: Vec<(f64, f64)> = Vec::new();
    for comp in &spec.components {
        let lambda = tail_rate(comp, eps) * horizon;
        if lambda <= 0.0 {
            continue;
        }
        let count = Poisson::new(lambda).map_err(|_| Error::InvalidParameter("bad Poisson rate".into()))?.sample(&mut r);
        for _ in 0..count as u64 {
            // (0, horizon]: a jump cannot sit on the first row
            let t = horizon * (1.0 - r.random::<f64>());
            let x = draw_size(comp, eps, &mut r);
            if x.abs() > eps && x != 0.0 {
                events.push((t, x));
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    // simultaneous jumps (probability zero, but atoms at equal times can collide
    // after rounding) are merged; cancelling ones disappear
    let mut times: Vec<f64> = Vec::with_capacity(events.len());
    let mut sizes: Vec<f64> = Vec::with_capacity(events.len());
    for (t, x) in events {
        if times.last() == Some(&t) {
            *sizes.last_mut().expect("paired with times") += x;
            if sizes.last() == Some(&0.0) {
                times.pop();
                sizes.pop();
            }
        } else {
            times.push(t);
            sizes.push(x);
        }
    }
    LevySample::from_jumps(times, sizes, drift(spec, eps), horizon, eps, spec.grid)
}

/// Coupled samples for decreasing truncation levels: one realisation at the
/// smallest level, thinned for the larger ones. Returned in the order of `levels`.
pub fn truncation_sweep(spec: &LevySpec, horizon: f64, levels: &[f64]) -> Result<Vec<LevySample>> {
    let finest = levels.iter().copied().fold(f64::INFINITY, f64::min);
    if levels.is_empty() || !(finest > 0.0) {
        return Err(Error::InvalidParameter("truncation levels must be positive".into()));
    }
    let base = sample_levy(&LevySpec { truncation: finest, ..spec.clone() }, horizon)?;
    levels.iter().map(|&eps| base.coarsen(spec, eps)).collect()
}

/// Blumenthal–Getoor index: `alpha` for stable components, 0 for finite ones,
/// the maximum over a sum.
pub fn bg_index(spec: &LevySpec) -> Result<f64> {
    if spec.components.is_empty() {
        return Err(Error::InvalidParameter("Lévy measure has no components".into()));
    }
    Ok(spec
        .components
        .iter()
        .map(|c| match c {
            LevyComponent::Stable { alpha, c } if *c > 0.0 => *alpha,
            _ => 0.0,
        })
        .fold(0.0, f64::max))
}

/// Whether `int_{|x| <= 1} |x|^p nu(dx)` is finite, i.e. whether paths have
/// finite p-variation almost surely. For a stable part this holds iff `p > alpha`.
pub fn bretagnolle_check(spec: &LevySpec, p: f64) -> Result<bool> {
    if !(p < 2.0) {
        return Err(Error::InvalidParameter(format!("the criterion needs p < 2, got {p}")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    if spec.components.is_empty() {
        return Err(Error::InvalidParameter("Lévy measure has no components".into()));
    }
    Ok(spec.components.iter().all(|c| match c {
        LevyComponent::Stable { alpha, c } => *c == 0.0 || p > *alpha,
        LevyComponent::CompoundPoisson { .. } => true,
    }))
}

/// p-variation of coupled samples along decreasing truncation levels.
pub fn levy_variation_probe(spec: &LevySpec, p: f64, horizon: f64, levels: &[f64]) -> Result<Trend> {
    if !(p >= 1.0 && p < 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    let samples = truncation_sweep(spec, horizon, levels)?;
    let values = samples.iter().map(|s| p_variation(&s.path, p)).collect::<Result<Vec<_>>>()?;
    Ok(refinement_trend(levels.to_vec(), values, TrendRule::LEVY))
}
