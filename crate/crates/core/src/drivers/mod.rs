//! Random drivers: fractional Brownian motion and pure-jump Lévy processes,
//! with refinement probes for their p-variation.
//!
//! Every sampler is a pure function of its spec. Randomness comes from
//! ChaCha20 seeded with `seed` on stream `stream`, so ensembles can run in any
//! order (or concurrently) and reproduce bit for bit.

pub mod fbm;
pub mod levy;
pub(crate) mod quad;

use alloc::vec::Vec;

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use fbm::{fbm_variation_probe, sample_fbm, var1, FbmSampler, FbmSpec};
pub use levy::{
    bg_index, bretagnolle_check, levy_variation_probe, sample_levy, truncation_sweep, JumpLaw, LevyComponent,
    LevySample, LevySpec,
};

pub fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Thresholds that classify a refinement sequence `v_0, v_1, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrendRule {
    /// Plateau when `|v_last / v_prev - 1| <= plateau_tol`.
    pub plateau_tol: f64,
    /// Divergence when `v_last / v_first >= growth_factor`.
    pub growth_factor: f64,
}

impl TrendRule {
    pub const FBM: TrendRule = TrendRule { plateau_tol: 0.10, growth_factor: 2.0 };
    pub const LEVY: TrendRule = TrendRule { plateau_tol: 0.15, growth_factor: 2.0 };
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trend {
    /// The refinement parameter per level (grid cells, or truncation level).
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    /// `v_{k+1} / v_k`.
    pub ratios: Vec<f64>,
    /// `v_last / v_first`.
    pub growth: f64,
    pub plateau: bool,
    pub diverges: bool,
}

/// Classifies a sequence of p-variation values along a refinement.
pub fn refinement_trend(levels: Vec<f64>, values: Vec<f64>, rule: TrendRule) -> Trend {
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let growth = match (values.first(), values.last()) {
        (Some(a), Some(b)) if values.len() >= 2 => b / a,
        _ => 1.0,
    };
    let plateau = ratios.last().is_some_and(|r| (r - 1.0).abs() <= rule.plateau_tol);
    let diverges = growth >= rule.growth_factor;
    Trend { levels, values, ratios, growth, plateau, diverges }
}
