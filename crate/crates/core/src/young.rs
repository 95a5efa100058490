//! Young integration of a matrix-valued path against a vector-valued path.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::path::{p_variation_exact, SampledPath};

/// Point at which the integrand is read on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    /// `f(t_k) (g(t_{k+1}) - g(t_k))`.
    LeftPoint,
    /// `(f(t_k) + f(t_{k+1})) / 2 (g(t_{k+1}) - g(t_k))`: the exact integral of
    /// the linear interpolant of `f` against the linear interpolant of `g`.
    #[default]
    Trapezoid,
}

/// Result of [`young_integral_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct YoungIntegral {
    pub value: Vec<f64>,
    /// `q`-variation of the integrand over the interval.
    pub integrand_variation: f64,
    /// `p`-variation of the integrator over the interval.
    pub integrator_variation: f64,
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    /// `1 + zeta(theta)`.
    pub bound_constant: f64,
}

/// Riemann zeta for real `s > 1` (Euler-Maclaurin with 16 direct terms).
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta is evaluated only for s > 1");
    const N: f64 = 16.0;
    // B_{2j} / (2j)!
    const COEFFS: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let mut sum: f64 = (1..16).map(|k| (k as f64).powf(-s)).sum();
    sum += N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2), paired with N^{-s-2j+1}
    let mut rising = s;
    let mut power = N.powf(-s - 1.0);
    for (j, c) in COEFFS.iter().enumerate() {
        sum += c * rising * power;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        power /= N * N;
    }
    sum
}

fn check_pair(p: f64, q: f64) -> Result<f64> {
    let theta = 1.0 / p + 1.0 / q;
    if !(p >= 1.0 && q >= 1.0) || !(theta > 1.0) {
        return Err(Error::ExponentPair { p, q });
    }
    Ok(theta)
}

/// `(1 + zeta(1/p + 1/q)) * vq * vp`, Young's bound on the p-variation of an
/// indefinite integral whose integrand (of q-variation `vq`) starts at zero,
/// against an integrator of p-variation `vp`.
pub fn young_error_bound(p: f64, q: f64, vp: f64, vq: f64) -> Result<f64> {
    let theta = check_pair(p, q)?;
    if !(vp >= 0.0 && vq >= 0.0) {
        return Err(Error::InvalidParameter("variations must be nonnegative".into()));
    }
    Ok((1.0 + zeta(theta)) * vq * vp)
}

// Walks a path at nondecreasing query times, yielding (left, right) values.
struct Cursor<'a> {
    path: &'a SampledPath,
    row: usize,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a SampledPath) -> Self {
        Self { path, row: 0 }
    }

    /// Returns (left limit, value) at `u`, advancing past rows at or before `u`.
    fn at(&mut self, u: f64, left: &mut [f64], right: &mut [f64]) -> bool {
        let times = self.path.times();
        while self.row + 1 < times.len() && times[self.row + 1] < u {
            self.row += 1;
        }
        if times[self.row] < u && self.row + 1 < times.len() && times[self.row + 1] > u {
            let (t0, t1) = (times[self.row], times[self.row + 1]);
            let w = (u - t0) / (t1 - t0);
            let (a, b) = (self.path.point(self.row), self.path.point(self.row + 1));
            for k in 0..a.len() {
                left[k] = a[k] + w * (b[k] - a[k]);
            }
            right.copy_from_slice(left);
            return false;
        }
        let mut i = self.row;
        if times[i] < u {
            i += 1;
        }
        left.copy_from_slice(self.path.point(i));
        let jumps = i + 1 < times.len() && times[i + 1] == u;
        if jumps {
            i += 1;
        }
        right.copy_from_slice(self.path.point(i));
        self.row = i;
        jumps
    }
}

/// `int_s^t f dg` for `f` a `d x n`-matrix path and `g` an `n`-vector path.
///
/// The two paths are merged onto the union of their sample times. Jumps of
/// `g` contribute `f(u) (g(u) - g(u-))`; a jump of `f` at the same time is a
/// common discontinuity and is rejected. `exponents = (p, q)` are the declared
/// variation exponents of integrator and integrand.
pub fn young_integral(
    integrand: &SampledPath,
    integrator: &SampledPath,
    interval: (f64, f64),
    exponents: (f64, f64),
    rule: Rule,
) -> Result<Vec<f64>> {
    check_pair(exponents.0, exponents.1)?;
    let path = indefinite_integral(integrand, integrator, interval, rule)?;
    Ok(path.last().to_vec())
}

/// As [`young_integral`], also reporting the variations of both paths and
/// the bound constant.
pub fn young_integral_report(
    integrand: &SampledPath,
    integrator: &SampledPath,
    interval: (f64, f64),
    exponents: (f64, f64),
    rule: Rule,
) -> Result<YoungIntegral> {
    let (p, q) = exponents;
    let theta = check_pair(p, q)?;
    let value = young_integral(integrand, integrator, interval, exponents, rule)?;
    Ok(YoungIntegral {
        value,
        integrand_variation: p_variation_exact(integrand, q, interval)?.value,
        integrator_variation: p_variation_exact(integrator, p, interval)?.value,
        p,
        q,
        theta,
        bound_constant: 1.0 + zeta(theta),
    })
}

/// `u -> int_s^u f dg` on the merged grid of both paths, starting at zero.
pub fn indefinite_integral(
    integrand: &SampledPath,
    integrator: &SampledPath,
    interval: (f64, f64),
    rule: Rule,
) -> Result<SampledPath> {
    let n = integrator.dim();
    if integrand.dim() % n != 0 {
        return Err(Error::DimensionMismatch { expected: n, found: integrand.dim() });
    }
    let d = integrand.dim() / n;
    let (s, t) = interval;
    let f = integrand.restrict(s, t)?;
    let g = integrator.restrict(s, t)?;

    let mut grid: Vec<f64> = f.times().iter().chain(g.times()).copied().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    grid.dedup();

    let mut fc = Cursor::new(&f);
    let mut gc = Cursor::new(&g);
    let (mut f_left, mut f_right) = (vec![0.0; d * n], vec![0.0; d * n]);
    let (mut g_left, mut g_right) = (vec![0.0; n], vec![0.0; n]);
    let (mut f_prev, mut g_prev) = (vec![0.0; d * n], vec![0.0; n]);
    let mut acc = vec![0.0; d];

    let mut times = Vec::with_capacity(grid.len() + 8);
    let mut values = Vec::with_capacity((grid.len() + 8) * d);
    let mut jumped = false;

    for (idx, &u) in grid.iter().enumerate() {
        let f_jumps = fc.at(u, &mut f_left, &mut f_right);
        let g_jumps = gc.at(u, &mut g_left, &mut g_right);
        if idx > 0 {
            for i in 0..d {
                let mut inc = 0.0;
                for a in 0..n {
                    let fv = match rule {
                        Rule::LeftPoint => f_prev[i * n + a],
                        Rule::Trapezoid => 0.5 * (f_prev[i * n + a] + f_left[i * n + a]),
                    };
                    inc += fv * (g_left[a] - g_prev[a]);
                }
                acc[i] += inc;
            }
        }
        times.push(u);
        values.extend_from_slice(&acc);
        if g_jumps {
            if f_jumps {
                return Err(Error::CommonDiscontinuity(u));
            }
            for i in 0..d {
                acc[i] += (0..n).map(|a| f_right[i * n + a] * (g_right[a] - g_left[a])).sum::<f64>();
            }
            times.push(u);
            values.extend_from_slice(&acc);
            jumped = true;
        }
        f_prev.copy_from_slice(&f_right);
        g_prev.copy_from_slice(&g_right);
    }
    if jumped {
        // zero jumps (from f = 0 at a jump of g) are not valid cadlag rows
        SampledPath::cadlag_merging_null_jumps(times, values, d)
    } else {
        SampledPath::continuous(times, values, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn linear_grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn zeta_reference_values() {
        // zeta(1.5) from the standard tables
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-12);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn bound_values() {
        assert_eq!(young_error_bound(1.5, 1.5, 0.0, 3.0).unwrap(), 0.0);
        let c = young_error_bound(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((c - (1.0 + PI * PI / 6.0)).abs() < 1e-12);
        assert!((c - 2.6449).abs() < 1e-4);
        assert!(matches!(young_error_bound(2.0, 2.0, 1.0, 1.0), Err(Error::ExponentPair { .. })));
    }

    #[test]
    fn identity_integrand_gives_increment() {
        let times = linear_grid(7);
        let g = SampledPath::from_fn(times.clone(), 2, |t, x| {
            x[0] = (3.0 * t).sin();
            x[1] = t * t;
        })
        .unwrap();
        let f = SampledPath::from_fn(times, 4, |_, x| x.copy_from_slice(&[1.0, 0.0, 0.0, 1.0])).unwrap();
        let v = young_integral(&f, &g, (0.2, 0.9), (1.5, 1.5), Rule::LeftPoint).unwrap();
        let (a, b) = (g.value_at(0.2).unwrap(), g.value_at(0.9).unwrap());
        assert!((v[0] - (b[0] - a[0])).abs() < 1e-14);
        assert!((v[1] - (b[1] - a[1])).abs() < 1e-14);
    }

    #[test]
    fn linear_against_linear_is_one_half() {
        let id = SampledPath::scalar(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let v = young_integral(&id, &id, (0.0, 1.0), (1.0, 1.0), Rule::Trapezoid).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
        let left = young_integral(&id, &id, (0.0, 1.0), (1.0, 1.0), Rule::LeftPoint).unwrap();
        assert_eq!(left[0], 0.0);
    }

    #[test]
    fn jumps_of_integrator() {
        // g jumps by 2 at t = 0.5; f(u) = u
        let g = SampledPath::cadlag(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.0, 2.0, 2.0], 1).unwrap();
        let f = SampledPath::scalar(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let v = young_integral(&f, &g, (0.0, 1.0), (1.0, 1.0), Rule::Trapezoid).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        let both = SampledPath::cadlag(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(
            young_integral(&both, &g, (0.0, 1.0), (1.0, 1.0), Rule::Trapezoid),
            Err(Error::CommonDiscontinuity(0.5))
        );
    }

    #[test]
    fn rejects_rough_pairs() {
        let id = SampledPath::scalar(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            young_integral(&id, &id, (0.0, 1.0), (2.0, 2.5), Rule::Trapezoid),
            Err(Error::ExponentPair { .. })
        ));
        assert!(matches!(
            young_integral(&id, &id, (0.0, 2.0), (1.0, 1.0), Rule::Trapezoid),
            Err(Error::IntervalOutOfRange { .. })
        ));
    }
}
