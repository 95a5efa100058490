//! Vector fields `f: R^d -> Hom(R^n, R^d)` with analytic derivatives.
//!
//! Values are row-major `d x n` matrices: entry `(i, a)` sits at `i * n + a`.
//! Derivatives are `d x n x d` arrays: `d f_{ia} / d y_j` sits at
//! `(i * n + a) * d + j`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::path::euclidean_norm;

pub trait VectorField: Send + Sync {
    /// `d`, the dimension of the state.
    fn state_dim(&self) -> usize;
    /// `n`, the dimension of the driver.
    fn driver_dim(&self) -> usize;
    fn eval_into(&self, y: &[f64], out: &mut [f64]);
    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Axis-aligned box on which local statements (bounds, anchors) are made.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl WorkingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParameter("box bounds must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("box requires lo < hi in every coordinate".into()));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-r, r]^d`.
    pub fn cube(d: usize, r: f64) -> Self {
        Self { lo: vec![-r; d], hi: vec![r; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, a), b)| *v >= *a && *v <= *b)
    }

    /// Uniform lattice with `per_axis` points per coordinate (endpoints included).
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis = per_axis.max(1);
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|k| {
                        let i = idx % per_axis;
                        idx /= per_axis;
                        if per_axis == 1 {
                            0.5 * (self.lo[k] + self.hi[k])
                        } else {
                            self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (per_axis - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// A vector field with a declared `Lip(alpha)` regularity certificate.
#[derive(Clone)]
pub struct LipschitzField {
    name: String,
    inner: Arc<dyn VectorField>,
    alpha: f64,
    lip_norm: Option<f64>,
    // exponent the declared norm refers to; None when it does not depend on it
    norm_alpha: Option<f64>,
    domain: Option<WorkingBox>,
}

impl fmt::Debug for LipschitzField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzField")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim())
            .field("driver_dim", &self.driver_dim())
            .field("alpha", &self.alpha)
            .field("lip_norm", &self.lip_norm)
            .field("domain", &self.domain)
            .finish()
    }
}

impl LipschitzField {
    pub fn new(name: impl Into<String>, inner: Arc<dyn VectorField>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { name: name.into(), inner, alpha, lip_norm: None, norm_alpha: None, domain: None })
    }

    /// Declares `||f||_{Lip(alpha)}` for the current exponent.
    pub fn with_lip_norm(mut self, norm: f64) -> Self {
        self.lip_norm = Some(norm);
        self.norm_alpha = Some(self.alpha);
        self
    }

    /// Declares a norm that holds for every exponent (fields with constant derivative).
    pub fn with_exponent_free_norm(mut self, norm: f64) -> Self {
        self.lip_norm = Some(norm);
        self.norm_alpha = None;
        self
    }

    /// Records the box on which the regularity claim is meant to hold.
    pub fn with_domain(mut self, domain: WorkingBox) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Replaces the declared exponent. Smooth bounded fields are `Lip(alpha)`
    /// for every `alpha` in `(1, 2]`, so lowering it is always sound for them.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        if self.norm_alpha.is_some_and(|a| a != alpha) {
            self.lip_norm = None;
            self.norm_alpha = None;
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lip_norm(&self) -> Option<f64> {
        self.lip_norm
    }

    pub fn domain(&self) -> Option<&WorkingBox> {
        self.domain.as_ref()
    }

    pub fn inner(&self) -> &dyn VectorField {
        self.inner.as_ref()
    }

    pub fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    pub fn driver_dim(&self) -> usize {
        self.inner.driver_dim()
    }

    /// `f(x)` as a row-major `d x n` matrix.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.state_dim() * self.driver_dim()];
        self.inner.eval_into(x, &mut out);
        Ok(out)
    }

    /// `grad f(x)` as a `d x n x d` array.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let d = self.state_dim();
        let mut out = vec![0.0; d * self.driver_dim() * d];
        self.inner.grad_into(x, &mut out)?;
        Ok(out)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch { expected: self.state_dim(), found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

impl VectorField for LipschitzField {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn driver_dim(&self) -> usize {
        self.inner.driver_dim()
    }

    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.eval_into(y, out)
    }

    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.grad_into(y, out)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "regularity exponent must lie in (1, 2], got {alpha}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ZeroField {
    pub d: usize,
    pub n: usize,
}

impl VectorField for ZeroField {
    fn state_dim(&self) -> usize {
        self.d
    }
    fn driver_dim(&self) -> usize {
        self.n
    }
    fn eval_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn grad_into(&self, _y: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ConstantField {
    pub d: usize,
    pub n: usize,
    /// Row-major `d x n`.
    pub matrix: Vec<f64>,
}

impl VectorField for ConstantField {
    fn state_dim(&self) -> usize {
        self.d
    }
    fn driver_dim(&self) -> usize {
        self.n
    }
    fn eval_into(&self, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matrix);
    }
    fn grad_into(&self, _y: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// `f(y) e_a = A_a y`, one `d x d` matrix per driver coordinate.
#[derive(Debug, Clone)]
pub struct LinearField {
    pub d: usize,
    /// `n` row-major `d x d` matrices.
    pub matrices: Vec<Vec<f64>>,
}

impl VectorField for LinearField {
    fn state_dim(&self) -> usize {
        self.d
    }
    fn driver_dim(&self) -> usize {
        self.matrices.len()
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        let (d, n) = (self.d, self.matrices.len());
        for (a, m) in self.matrices.iter().enumerate() {
            for i in 0..d {
                out[i * n + a] = (0..d).map(|j| m[i * d + j] * y[j]).sum();
            }
        }
    }
    fn grad_into(&self, _y: &[f64], out: &mut [f64]) -> Result<()> {
        let (d, n) = (self.d, self.matrices.len());
        for (a, m) in self.matrices.iter().enumerate() {
            for i in 0..d {
                out[(i * n + a) * d..(i * n + a + 1) * d].copy_from_slice(&m[i * d..(i + 1) * d]);
            }
        }
        Ok(())
    }
}

/// Scalar `f(y) = amplitude * sin(frequency * y)`.
#[derive(Debug, Clone)]
pub struct SineField {
    pub amplitude: f64,
    pub frequency: f64,
}

impl VectorField for SineField {
    fn state_dim(&self) -> usize {
        1
    }
    fn driver_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out[0] = self.amplitude * (self.frequency * y[0]).sin();
    }
    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.amplitude * self.frequency * (self.frequency * y[0]).cos();
        Ok(())
    }
}

/// Planar rotation damped by a Gaussian envelope:
/// `f(y) = omega * exp(-|y|^2 / (2 width^2)) * (-y2, y1)`.
/// Divergence-free, so its flow preserves area.
#[derive(Debug, Clone)]
pub struct RotationField {
    pub omega: f64,
    pub width: f64,
}

impl RotationField {
    fn envelope(&self, y: &[f64]) -> f64 {
        let r2 = y[0] * y[0] + y[1] * y[1];
        self.omega * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    // 2x2 Jacobian of the rotation column, row-major.
    fn jacobian(&self, y: &[f64]) -> [f64; 4] {
        let g = self.envelope(y);
        let w2 = self.width * self.width;
        let (y1, y2) = (y[0], y[1]);
        [g * y1 * y2 / w2, -g + g * y2 * y2 / w2, g - g * y1 * y1 / w2, -g * y1 * y2 / w2]
    }
}

impl VectorField for RotationField {
    fn state_dim(&self) -> usize {
        2
    }
    fn driver_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        let g = self.envelope(y);
        out[0] = -g * y[1];
        out[1] = g * y[0];
    }
    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.jacobian(y));
        Ok(())
    }
}

/// Two driver coordinates on the plane: the damped rotation, and
/// `coupling * (sin y2, cos y1)`. The two columns do not commute.
#[derive(Debug, Clone)]
pub struct CoupledField {
    pub rotation: RotationField,
    pub coupling: f64,
}

impl VectorField for CoupledField {
    fn state_dim(&self) -> usize {
        2
    }
    fn driver_dim(&self) -> usize {
        2
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        let g = self.rotation.envelope(y);
        out[0] = -g * y[1];
        out[2] = g * y[0];
        out[1] = self.coupling * y[1].sin();
        out[3] = self.coupling * y[0].cos();
    }
    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let [a, b, c, e] = self.rotation.jacobian(y);
        // layout (i * 2 + a) * 2 + j
        out[0] = a;
        out[1] = b;
        out[4] = c;
        out[5] = e;
        out[2] = 0.0;
        out[3] = self.coupling * y[1].cos();
        out[6] = -self.coupling * y[0].sin();
        out[7] = 0.0;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    /// One exponent per state coordinate.
    pub powers: Vec<u32>,
}

/// Each matrix entry `f_{ia}` is a polynomial in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    pub d: usize,
    pub n: usize,
    /// `d * n` entries in row-major order.
    pub entries: Vec<Vec<Monomial>>,
}

impl PolynomialField {
    pub fn new(d: usize, n: usize, entries: Vec<Vec<Monomial>>) -> Result<Self> {
        if entries.len() != d * n {
            return Err(Error::DimensionMismatch { expected: d * n, found: entries.len() });
        }
        for m in entries.iter().flatten() {
            if m.powers.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.powers.len() });
            }
            if !m.coefficient.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { d, n, entries })
    }
}

fn monomial_value(m: &Monomial, y: &[f64]) -> f64 {
    m.powers.iter().zip(y).fold(m.coefficient, |acc, (&k, &v)| acc * v.powi(k as i32))
}

impl VectorField for PolynomialField {
    fn state_dim(&self) -> usize {
        self.d
    }
    fn driver_dim(&self) -> usize {
        self.n
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.entries) {
            *o = terms.iter().map(|m| monomial_value(m, y)).sum();
        }
    }
    fn grad_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.d;
        for (e, terms) in self.entries.iter().enumerate() {
            for j in 0..d {
                out[e * d + j] = terms
                    .iter()
                    .filter(|m| m.powers[j] > 0)
                    .map(|m| {
                        let k = m.powers[j];
                        m.powers.iter().zip(y).enumerate().fold(
                            m.coefficient * k as f64,
                            |acc, (i, (&pk, &v))| {
                                let pk = if i == j { pk - 1 } else { pk };
                                acc * v.powi(pk as i32)
                            },
                        )
                    })
                    .sum();
            }
        }
        Ok(())
    }
}

pub fn zero(d: usize, n: usize) -> LipschitzField {
    LipschitzField::new("zero", Arc::new(ZeroField { d, n }), 2.0)
        .expect("valid exponent")
        .with_exponent_free_norm(0.0)
}

pub fn constant(d: usize, n: usize, matrix: Vec<f64>) -> Result<LipschitzField> {
    if matrix.len() != d * n {
        return Err(Error::DimensionMismatch { expected: d * n, found: matrix.len() });
    }
    let norm = euclidean_norm(&matrix);
    Ok(LipschitzField::new("constant", Arc::new(ConstantField { d, n, matrix }), 2.0)?.with_exponent_free_norm(norm))
}

/// `f = I`, with state and driver of the same dimension.
pub fn identity(d: usize) -> LipschitzField {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    constant(d, d, m).expect("square identity")
}

/// Scalar `f(y) = c y`. Unbounded, so regularity only holds on a working box.
pub fn linear_scalar(c: f64) -> LipschitzField {
    LipschitzField::new(
        "linear",
        Arc::new(LinearField { d: 1, matrices: vec![vec![c]] }),
        2.0,
    )
    .expect("valid exponent")
}

pub fn linear(d: usize, matrices: Vec<Vec<f64>>) -> Result<LipschitzField> {
    if matrices.is_empty() || matrices.iter().any(|m| m.len() != d * d) {
        return Err(Error::InvalidParameter("linear field needs n >= 1 square d x d matrices".into()));
    }
    LipschitzField::new("linear", Arc::new(LinearField { d, matrices }), 2.0)
}

pub fn sine(amplitude: f64, frequency: f64) -> LipschitzField {
    let a = amplitude.abs();
    let w = frequency.abs();
    LipschitzField::new("sine", Arc::new(SineField { amplitude, frequency }), 2.0)
        .expect("valid exponent")
        .with_lip_norm(a + a * w + a * w * w)
}

pub fn rotation(omega: f64, width: f64) -> LipschitzField {
    LipschitzField::new("rotation", Arc::new(RotationField { omega, width }), 2.0)
        .expect("valid exponent")
}

pub fn coupled(omega: f64, width: f64, coupling: f64) -> LipschitzField {
    LipschitzField::new(
        "coupled",
        Arc::new(CoupledField { rotation: RotationField { omega, width }, coupling }),
        2.0,
    )
    .expect("valid exponent")
}

pub fn polynomial(field: PolynomialField, alpha: f64) -> Result<LipschitzField> {
    LipschitzField::new("polynomial", Arc::new(field), alpha)
}

/// Monte-Carlo lower estimate of the Stein norm
/// `sup|f| + sum_j (sup|d_j f| + sup |d_j f(x) - d_j f(y)| / |x - y|^(alpha - 1))`
/// from `probes` uniform points in `domain`. Matrix entries are measured in
/// the Frobenius norm.
pub fn estimate_lip_norm(
    field: &LipschitzField,
    alpha: f64,
    probes: usize,
    domain: &WorkingBox,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if probes < 2 {
        return Err(Error::InvalidParameter("need at least two probe points".into()));
    }
    let d = field.state_dim();
    if domain.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: domain.dim() });
    }
    let n = field.driver_dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..probes)
        .map(|_| {
            domain.lo.iter().zip(&domain.hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()
        })
        .collect();

    let mut sup_f = 0.0f64;
    let mut partials: Vec<Vec<Vec<f64>>> = Vec::with_capacity(probes);
    for x in &points {
        sup_f = sup_f.max(euclidean_norm(&field.eval(x)?));
        let g = field.grad(x)?;
        // split into d partial-derivative matrices, each d x n
        let per_j = (0..d)
            .map(|j| (0..d * n).map(|e| g[e * d + j]).collect::<Vec<f64>>())
            .collect();
        partials.push(per_j);
    }

    let mut total = sup_f;
    for j in 0..d {
        let sup_partial = partials.iter().map(|p| euclidean_norm(&p[j])).fold(0.0, f64::max);
        let mut quotient = 0.0f64;
        for a in 0..probes {
            for b in (a + 1)..probes {
                let dist = crate::path::distance(&points[a], &points[b]);
                if dist == 0.0 {
                    continue;
                }
                let diff = crate::path::distance(&partials[a][j], &partials[b][j]);
                quotient = quotient.max(diff / dist.powf(alpha - 1.0));
            }
        }
        total += sup_partial + quotient;
    }
    Ok(total)
}

/// The field `h(y, k) = (f(y), grad f(y) k)` on `R^d x M_{d x d}` driving the
/// state together with its spatial Jacobian. `k` is stored row-major after `y`.
#[derive(Clone, Debug)]
pub struct PairedField {
    base: LipschitzField,
}

/// Builds the paired field. Fails when the base field has no derivative.
pub fn make_paired_field(field: &LipschitzField) -> Result<PairedField> {
    let d = field.state_dim();
    let mut probe = vec![0.0; d * field.driver_dim() * d];
    field.inner().grad_into(&vec![0.0; d], &mut probe)?;
    Ok(PairedField { base: field.clone() })
}

impl PairedField {
    pub fn base(&self) -> &LipschitzField {
        &self.base
    }

    /// Regularity of `h` is one less than that of `f`.
    pub fn alpha(&self) -> f64 {
        self.base.alpha() - 1.0
    }

    /// `(x0, I)` flattened.
    pub fn initial_state(&self, x0: &[f64]) -> Vec<f64> {
        let d = self.base.state_dim();
        let mut z = vec![0.0; d + d * d];
        z[..d].copy_from_slice(x0);
        for i in 0..d {
            z[d + i * d + i] = 1.0;
        }
        z
    }
}

impl VectorField for PairedField {
    fn state_dim(&self) -> usize {
        let d = self.base.state_dim();
        d + d * d
    }

    fn driver_dim(&self) -> usize {
        self.base.driver_dim()
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        let d = self.base.state_dim();
        let n = self.base.driver_dim();
        let (y, k) = z.split_at(d);
        self.base.eval_into(y, &mut out[..d * n]);
        let len = d * n * d;
        let mut stack = [0.0; 64];
        let mut heap = Vec::new();
        let g: &mut [f64] = if len <= stack.len() {
            &mut stack[..len]
        } else {
            heap.resize(len, 0.0);
            &mut heap
        };
        self.base
            .grad_into(y, g)
            .expect("gradient availability checked at construction");
        // (grad f_a(y) k)_{rc} = sum_j d f_{ra} / d y_j * k_{jc}
        for r in 0..d {
            for c in 0..d {
                let row = d + r * d + c;
                for a in 0..n {
                    let base = (r * n + a) * d;
                    out[row * n + a] = (0..d).map(|j| g[base + j] * k[j * d + c]).sum();
                }
            }
        }
    }

    fn grad_into(&self, _z: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::NoGradient)
    }
}
