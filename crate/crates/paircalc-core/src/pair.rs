//! Two-component values and their bilinear products.
//!
//! A general product on pairs is an 8-coefficient tensor. Requiring
//! associativity and rejecting products in which one factor only acts
//! through a single linear functional leaves three classes, each with a
//! normal form reachable by a linear change of basis:
//!
//! * elliptic: complex multiplication, discriminant -1
//! * parabolic: dual-number multiplication, discriminant 0
//! * hyperbolic: split-complex multiplication, discriminant +1
//!
//! [`classify`] decides the class of an arbitrary tensor numerically;
//! [`polar`] gives each class its modulus/phase coordinates, under which
//! every class multiplies moduli and adds phases.

// Index loops over the fixed 2x2x2 tensor read better than iterator
// chains here.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Default tolerance for the numerical probes in this module.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default number of sampled triples for the associativity probe.
pub const DEFAULT_ASSOC_SAMPLES: usize = 256;
/// Seed used by [`classify`] for its internal associativity probe.
const CLASSIFY_SEED: u64 = 0x5eed_c1a5;

/// An ordered pair of real numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Pair {
    pub c1: f64,
    pub c2: f64,
}

impl Pair {
    pub const ZERO: Pair = Pair { c1: 0.0, c2: 0.0 };
    pub const ONE: Pair = Pair { c1: 1.0, c2: 0.0 };

    pub fn new(c1: f64, c2: f64) -> Pair {
        Pair { c1, c2 }
    }

    /// Pair with the given elliptic modulus and phase.
    pub fn from_polar(modulus: f64, phase: f64) -> Pair {
        Pair::new(modulus * phase.cos(), modulus * phase.sin())
    }

    /// Second component negated (elliptic conjugate).
    pub fn conj(self) -> Pair {
        Pair::new(self.c1, -self.c2)
    }

    pub fn scale(self, f: f64) -> Pair {
        Pair::new(self.c1 * f, self.c2 * f)
    }

    /// Euclidean norm of the pair viewed as a 2-vector.
    pub fn norm(self) -> f64 {
        self.c1.hypot(self.c2)
    }

    pub fn is_finite(self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }
}

impl From<[f64; 2]> for Pair {
    fn from(v: [f64; 2]) -> Pair {
        Pair::new(v[0], v[1])
    }
}

impl From<Pair> for [f64; 2] {
    fn from(p: Pair) -> [f64; 2] {
        [p.c1, p.c2]
    }
}

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, rhs: Pair) -> Pair {
        Pair::new(self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl std::ops::Sub for Pair {
    type Output = Pair;
    fn sub(self, rhs: Pair) -> Pair {
        Pair::new(self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.c1, self.c2)
    }
}

/// Component-wise sum of two pairs.
pub fn pair_sum(u: Pair, v: Pair) -> Pair {
    u + v
}

#[derive(Debug, Error)]
pub enum PairError {
    #[error("gamma coefficient {index} is not finite")]
    NonFiniteGamma { index: usize },
    #[error("polar coordinates need a nonzero pair")]
    ZeroPair,
    #[error("parabolic polar coordinates need c1 != 0")]
    ParabolicDomain,
    #[error("hyperbolic polar coordinates need c1^2 > c2^2, got ({c1}, {c2})")]
    HyperbolicDomain { c1: f64, c2: f64 },
    #[error("shear matrix is singular (det = {det:.3e})")]
    SingularShear { det: f64 },
    #[error("no identity element: best least-squares residual {residual:.3e} exceeds tolerance")]
    NoIdentity { residual: f64 },
}

/// The three associative, non-degenerate product classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl ProductKind {
    /// Discriminant sign of the class.
    pub fn mu(self) -> i8 {
        match self {
            ProductKind::Elliptic => -1,
            ProductKind::Parabolic => 0,
            ProductKind::Hyperbolic => 1,
        }
    }

    pub const ALL: [ProductKind; 3] = [
        ProductKind::Elliptic,
        ProductKind::Parabolic,
        ProductKind::Hyperbolic,
    ];
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductKind::Elliptic => write!(f, "Elliptic"),
            ProductKind::Parabolic => write!(f, "Parabolic"),
            ProductKind::Hyperbolic => write!(f, "Hyperbolic"),
        }
    }
}

/// Outcome of classifying a bilinear product tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductClass {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Degenerate,
    NonAssociative,
}

impl ProductClass {
    /// Discriminant sign for the three normal classes, `None` otherwise.
    pub fn mu(self) -> Option<i8> {
        match self {
            ProductClass::Elliptic => Some(-1),
            ProductClass::Parabolic => Some(0),
            ProductClass::Hyperbolic => Some(1),
            _ => None,
        }
    }

    pub fn kind(self) -> Option<ProductKind> {
        match self {
            ProductClass::Elliptic => Some(ProductKind::Elliptic),
            ProductClass::Parabolic => Some(ProductKind::Parabolic),
            ProductClass::Hyperbolic => Some(ProductKind::Hyperbolic),
            _ => None,
        }
    }
}

impl From<ProductKind> for ProductClass {
    fn from(k: ProductKind) -> ProductClass {
        match k {
            ProductKind::Elliptic => ProductClass::Elliptic,
            ProductKind::Parabolic => ProductClass::Parabolic,
            ProductKind::Hyperbolic => ProductClass::Hyperbolic,
        }
    }
}

impl fmt::Display for ProductClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductClass::Elliptic => write!(f, "Elliptic (mu = -1)"),
            ProductClass::Parabolic => write!(f, "Parabolic (mu = 0)"),
            ProductClass::Hyperbolic => write!(f, "Hyperbolic (mu = 1)"),
            ProductClass::Degenerate => write!(f, "Degenerate"),
            ProductClass::NonAssociative => write!(f, "NonAssociative"),
        }
    }
}

/// Normal-form product of two pairs in the given class.
pub fn product(kind: ProductKind, u: Pair, v: Pair) -> Pair {
    match kind {
        ProductKind::Elliptic => Pair::new(u.c1 * v.c1 - u.c2 * v.c2, u.c1 * v.c2 + u.c2 * v.c1),
        ProductKind::Parabolic => Pair::new(u.c1 * v.c1, u.c1 * v.c2 + u.c2 * v.c1),
        ProductKind::Hyperbolic => Pair::new(u.c1 * v.c1 + u.c2 * v.c2, u.c1 * v.c2 + u.c2 * v.c1),
    }
}

/// A candidate pair product: 8 coefficients `gamma[i][j][k]` defining
/// `(u ∘ v)_i = Σ_jk gamma_ijk u_j v_k`.
///
/// The flat layout is index order `g111, g112, g121, g122, g211, g212,
/// g221, g222` (all indices 1-based, slot order output/u/v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 8]", into = "[f64; 8]")]
pub struct BilinearProduct {
    gamma: [f64; 8],
}

fn flat(i: usize, j: usize, k: usize) -> usize {
    4 * i + 2 * j + k
}

impl BilinearProduct {
    pub fn new(gamma: [f64; 8]) -> Result<BilinearProduct, PairError> {
        if let Some(index) = gamma.iter().position(|g| !g.is_finite()) {
            return Err(PairError::NonFiniteGamma { index });
        }
        Ok(BilinearProduct { gamma })
    }

    /// Tensor of the class's normal form.
    pub fn normal_form(kind: ProductKind) -> BilinearProduct {
        let mut gamma = [0.0; 8];
        match kind {
            ProductKind::Elliptic => {
                gamma[flat(0, 0, 0)] = 1.0;
                gamma[flat(0, 1, 1)] = -1.0;
                gamma[flat(1, 0, 1)] = 1.0;
                gamma[flat(1, 1, 0)] = 1.0;
            }
            ProductKind::Parabolic => {
                gamma[flat(0, 0, 0)] = 1.0;
                gamma[flat(1, 0, 1)] = 1.0;
                gamma[flat(1, 1, 0)] = 1.0;
            }
            ProductKind::Hyperbolic => {
                gamma[flat(0, 0, 0)] = 1.0;
                gamma[flat(0, 1, 1)] = 1.0;
                gamma[flat(1, 0, 1)] = 1.0;
                gamma[flat(1, 1, 0)] = 1.0;
            }
        }
        BilinearProduct { gamma }
    }

    pub fn coefficients(&self) -> [f64; 8] {
        self.gamma
    }

    /// `gamma_ijk` with 0-based indices.
    pub fn coefficient(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[flat(i, j, k)]
    }

    /// Evaluate the general bilinear product `(u ∘ v)_i = Σ_jk g_ijk u_j v_k`.
    pub fn apply(&self, u: Pair, v: Pair) -> Pair {
        let uu = [u.c1, u.c2];
        let vv = [v.c1, v.c2];
        let mut out = [0.0; 2];
        for i in 0..2 {
            let mut acc = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    acc += self.gamma[flat(i, j, k)] * uu[j] * vv[k];
                }
            }
            out[i] = acc;
        }
        Pair::new(out[0], out[1])
    }

    /// Tensor of the same product expressed in a sheared basis: with
    /// `x' = T x`, the new product is `u' ∘' v' = T(T⁻¹u' ∘ T⁻¹v')`.
    pub fn sheared(&self, t: [[f64; 2]; 2]) -> Result<BilinearProduct, PairError> {
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        if det.abs() <= 1e-12 {
            return Err(PairError::SingularShear { det });
        }
        let inv = [
            [t[1][1] / det, -t[0][1] / det],
            [-t[1][0] / det, t[0][0] / det],
        ];
        let mut gamma = [0.0; 8];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                acc += t[i][a] * self.gamma[flat(a, b, c)] * inv[b][j] * inv[c][k];
                            }
                        }
                    }
                    gamma[flat(i, j, k)] = acc;
                }
            }
        }
        Ok(BilinearProduct { gamma })
    }

    /// Matrix of left multiplication by `u`: `(u ∘ x) = L_u x`.
    fn left_mul_matrix(&self, u: Pair) -> [[f64; 2]; 2] {
        let uu = [u.c1, u.c2];
        let mut l = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                l[i][k] = (0..2).map(|j| self.gamma[flat(i, j, k)] * uu[j]).sum();
            }
        }
        l
    }
}

impl From<[f64; 8]> for BilinearProduct {
    fn from(gamma: [f64; 8]) -> BilinearProduct {
        BilinearProduct { gamma }
    }
}

impl From<BilinearProduct> for [f64; 8] {
    fn from(b: BilinearProduct) -> [f64; 8] {
        b.gamma
    }
}

/// Result of the sampled associativity probe.
#[derive(Debug, Clone, Copy)]
pub struct AssociativityReport {
    pub associative: bool,
    /// Largest normalized residual `‖(u∘v)∘w − u∘(v∘w)‖ / (1 + ‖u‖‖v‖‖w‖)`
    /// over the sampled triples.
    pub max_residual: f64,
}

fn sample_unit_ball(rng: &mut impl Rng) -> Pair {
    loop {
        let p = Pair::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if p.norm() <= 1.0 {
            return p;
        }
    }
}

/// Probe associativity of `b` on `n_samples` seeded triples from the unit
/// ball; associative iff the largest normalized residual is at most `tol`.
pub fn is_associative(
    b: &BilinearProduct,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> AssociativityReport {
    let mut rng = rng::seeded(seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..n_samples.max(1) {
        let u = sample_unit_ball(&mut rng);
        let v = sample_unit_ball(&mut rng);
        let w = sample_unit_ball(&mut rng);
        let left = b.apply(b.apply(u, v), w);
        let right = b.apply(u, b.apply(v, w));
        let residual = (left - right).norm() / (1.0 + u.norm() * v.norm() * w.norm());
        max_residual = max_residual.max(residual);
    }
    AssociativityReport {
        associative: max_residual <= tol,
        max_residual,
    }
}

/// Singular values of a 4x2 matrix, via the eigenvalues of `AᵀA`.
fn singular_values_4x2(a: &[[f64; 2]; 4]) -> (f64, f64) {
    let mut g = [[0.0; 2]; 2];
    for r in a {
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    let tr = g[0][0] + g[1][1];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let hi = ((tr + disc) / 2.0).max(0.0).sqrt();
    let lo = ((tr - disc) / 2.0).max(0.0).sqrt();
    (hi, lo)
}

/// True iff one factor slot only enters through a single linear
/// functional, i.e. it operates as a scalar.
///
/// Detected as an effective-rank-1 flattening: the 4x2 matrix over the
/// v slot (rows indexed by `(i,j)`) or over the u slot (rows `(i,k)`)
/// has second singular value at most `tol` times its first. The zero
/// tensor is degenerate.
pub fn is_degenerate(b: &BilinearProduct, tol: f64) -> bool {
    let mut over_v = [[0.0; 2]; 4];
    let mut over_u = [[0.0; 2]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                over_v[2 * i + j][k] = b.coefficient(i, j, k);
                over_u[2 * i + k][j] = b.coefficient(i, j, k);
            }
        }
    }
    let (s1v, s2v) = singular_values_4x2(&over_v);
    let (s1u, s2u) = singular_values_4x2(&over_u);
    s2v <= tol * s1v || s2u <= tol * s1u
}

/// Two-sided identity element of an associative product, by least squares
/// over the four basis conditions `e ∘ b = b` and `b ∘ e = b`.
fn identity_element(b: &BilinearProduct, tol: f64) -> Result<Pair, PairError> {
    // Rows of the 8x2 system A e = rhs.
    let mut a = [[0.0; 2]; 8];
    let mut rhs = [0.0; 8];
    let basis = [Pair::new(1.0, 0.0), Pair::new(0.0, 1.0)];
    let mut row = 0;
    for (bi, bv) in basis.iter().enumerate() {
        let vv = [bv.c1, bv.c2];
        for i in 0..2 {
            // (e ∘ b)_i = Σ_j (Σ_k g_ijk b_k) e_j
            for j in 0..2 {
                a[row][j] = (0..2).map(|k| b.coefficient(i, j, k) * vv[k]).sum();
            }
            rhs[row] = if i == bi { 1.0 } else { 0.0 };
            row += 1;
            // (b ∘ e)_i = Σ_k (Σ_j g_ijk b_j) e_k
            for k in 0..2 {
                a[row][k] = (0..2).map(|j| b.coefficient(i, j, k) * vv[j]).sum();
            }
            rhs[row] = if i == bi { 1.0 } else { 0.0 };
            row += 1;
        }
    }
    // Normal equations (AᵀA) e = Aᵀ rhs.
    let mut ata = [[0.0; 2]; 2];
    let mut atb = [0.0; 2];
    for r in 0..8 {
        for i in 0..2 {
            for j in 0..2 {
                ata[i][j] += a[r][i] * a[r][j];
            }
            atb[i] += a[r][i] * rhs[r];
        }
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let scale = ata[0][0].abs() + ata[1][1].abs();
    if det.abs() <= f64::EPSILON * scale * scale {
        return Err(PairError::NoIdentity { residual: f64::INFINITY });
    }
    let e = Pair::new(
        (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det,
        (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det,
    );
    // Residual of the original system, relative to its scale.
    let a_scale: f64 = a
        .iter()
        .map(|r| r[0].abs() + r[1].abs())
        .fold(0.0, f64::max);
    let mut residual: f64 = 0.0;
    for r in 0..8 {
        let lhs = a[r][0] * e.c1 + a[r][1] * e.c2;
        residual = residual.max((lhs - rhs[r]).abs());
    }
    let relative = residual / (1.0 + a_scale * e.norm());
    if relative > tol {
        return Err(PairError::NoIdentity { residual: relative });
    }
    Ok(e)
}

fn frobenius_sq(m: &[[f64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

/// How far `m` is from a multiple of the identity, relative to its size.
fn non_scalar_part(m: &[[f64; 2]; 2]) -> f64 {
    let mean = (m[0][0] + m[1][1]) / 2.0;
    let dev = [[m[0][0] - mean, m[0][1]], [m[1][0], m[1][1] - mean]];
    let norm = frobenius_sq(m).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        frobenius_sq(&dev).sqrt() / norm
    }
}

/// Classify a bilinear product tensor.
///
/// Pipeline: sampled associativity probe, degeneracy probe, identity
/// location, then the sign of the discriminant of the characteristic
/// polynomial of left multiplication by a generic element. The generic
/// element is `e + w` for the deterministic candidate `w` (basis vectors,
/// then a fixed mixture) whose left-multiplication matrix is furthest
/// from scalar.
pub fn classify(b: &BilinearProduct, tol: f64) -> Result<ProductClass, PairError> {
    let report = is_associative(b, DEFAULT_ASSOC_SAMPLES, tol, CLASSIFY_SEED);
    if !report.associative {
        return Ok(ProductClass::NonAssociative);
    }
    if is_degenerate(b, tol) {
        return Ok(ProductClass::Degenerate);
    }
    let e = identity_element(b, tol)?;
    let candidates = [
        Pair::new(1.0, 0.0),
        Pair::new(0.0, 1.0),
        Pair::new(1.0, 0.5),
    ];
    let mut best: Option<([[f64; 2]; 2], f64)> = None;
    for w in candidates {
        // Skip directions parallel to e; e + w must be generic.
        let cross = e.c1 * w.c2 - e.c2 * w.c1;
        if cross.abs() <= 1e-12 * e.norm() * w.norm() {
            continue;
        }
        let l = b.left_mul_matrix(e + w);
        let ns = non_scalar_part(&l);
        if best.is_none_or(|(_, b_ns)| ns > b_ns) {
            best = Some((l, ns));
        }
    }
    // Non-degenerate algebras always leave at least one candidate.
    let (l, _) = best.expect("no generic element candidate");
    let trace = l[0][0] + l[1][1];
    let det = l[0][0] * l[1][1] - l[0][1] * l[1][0];
    let disc = trace * trace - 4.0 * det;
    let scale = frobenius_sq(&l);
    if disc < -tol * scale {
        Ok(ProductClass::Elliptic)
    } else if disc > tol * scale {
        Ok(ProductClass::Hyperbolic)
    } else {
        Ok(ProductClass::Parabolic)
    }
}

fn wrap_to_tau(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w >= TAU {
        w - TAU
    } else {
        w
    }
}

/// Modulus and phase of `x` in the given class.
///
/// Elliptic: `(√(c1²+c2²), atan2(c2,c1))` with the phase wrapped to
/// `[0, 2π)`. Parabolic: `(|c1|, c2/|c1|)`. Hyperbolic:
/// `(√(c1²−c2²), artanh(c2/c1))`.
pub fn polar(kind: ProductKind, x: Pair) -> Result<(f64, f64), PairError> {
    match kind {
        ProductKind::Elliptic => {
            if x.c1 == 0.0 && x.c2 == 0.0 {
                return Err(PairError::ZeroPair);
            }
            Ok((x.norm(), wrap_to_tau(x.c2.atan2(x.c1))))
        }
        ProductKind::Parabolic => {
            if x.c1 == 0.0 {
                return Err(PairError::ParabolicDomain);
            }
            Ok((x.c1.abs(), x.c2 / x.c1.abs()))
        }
        ProductKind::Hyperbolic => {
            if x.c1 * x.c1 <= x.c2 * x.c2 {
                return Err(PairError::HyperbolicDomain { c1: x.c1, c2: x.c2 });
            }
            Ok(((x.c1 * x.c1 - x.c2 * x.c2).sqrt(), (x.c2 / x.c1).atanh()))
        }
    }
}

/// `alpha·log|x| + beta·arg(x)` in elliptic coordinates.
pub fn log_valuation(x: Pair, alpha: f64, beta: f64) -> Result<f64, PairError> {
    let (modulus, phase) = polar(ProductKind::Elliptic, x)?;
    Ok(alpha * modulus.ln() + beta * phase)
}

/// The conjugate combination `beta·log|x| − alpha·arg(x)`, unconstrained
/// by rate observations.
pub fn conjugate_variable(x: Pair, alpha: f64, beta: f64) -> Result<f64, PairError> {
    let (modulus, phase) = polar(ProductKind::Elliptic, x)?;
    Ok(beta * modulus.ln() - alpha * phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())),
            "{a} != {b} (tol {tol})"
        );
    }

    #[test]
    fn normal_form_squares_of_second_unit() {
        let i = Pair::new(0.0, 1.0);
        assert_eq!(product(ProductKind::Elliptic, i, i), Pair::new(-1.0, 0.0));
        assert_eq!(product(ProductKind::Parabolic, i, i), Pair::new(0.0, 0.0));
        assert_eq!(product(ProductKind::Hyperbolic, i, i), Pair::new(1.0, 0.0));
    }

    #[test]
    fn general_product_matches_normal_form() {
        let b = BilinearProduct::normal_form(ProductKind::Elliptic);
        let u = Pair::new(0.0, 1.0);
        assert_eq!(b.apply(u, u), Pair::new(-1.0, 0.0));
        let u = Pair::new(1.5, -0.25);
        let v = Pair::new(-2.0, 3.0);
        let direct = product(ProductKind::Elliptic, u, v);
        let general = b.apply(u, v);
        assert_close(direct.c1, general.c1, 1e-15);
        assert_close(direct.c2, general.c2, 1e-15);
    }

    #[test]
    fn zero_tensor_maps_everything_to_zero() {
        let b = BilinearProduct::new([0.0; 8]).unwrap();
        assert_eq!(b.apply(Pair::new(2.0, 3.0), Pair::new(-1.0, 7.0)), Pair::ZERO);
    }

    #[test]
    fn degenerate_form_contraction() {
        // u ∘ v = (u1 v1, u2 v1)
        let mut gamma = [0.0; 8];
        gamma[flat(0, 0, 0)] = 1.0;
        gamma[flat(1, 1, 0)] = 1.0;
        let b = BilinearProduct::new(gamma).unwrap();
        assert_eq!(
            b.apply(Pair::new(2.0, 3.0), Pair::new(5.0, 7.0)),
            Pair::new(10.0, 15.0)
        );
    }

    #[test]
    fn non_finite_gamma_rejected() {
        let mut gamma = [0.0; 8];
        gamma[3] = f64::NAN;
        assert!(matches!(
            BilinearProduct::new(gamma),
            Err(PairError::NonFiniteGamma { index: 3 })
        ));
    }

    #[test]
    fn normal_forms_are_associative() {
        for kind in ProductKind::ALL {
            let b = BilinearProduct::normal_form(kind);
            let report = is_associative(&b, 256, 1e-9, 1);
            assert!(report.associative, "{kind}: residual {}", report.max_residual);
        }
    }

    #[test]
    fn single_coefficient_product_is_associative_but_degenerate() {
        // u ∘ v = (0, u1 v1): both triple products vanish.
        let mut gamma = [0.0; 8];
        gamma[flat(1, 0, 0)] = 1.0;
        let b = BilinearProduct::new(gamma).unwrap();
        let u = Pair::new(0.3, -0.8);
        let v = Pair::new(1.7, 0.4);
        let w = Pair::new(-0.6, 0.9);
        assert_eq!(b.apply(b.apply(u, v), w), Pair::ZERO);
        assert_eq!(b.apply(u, b.apply(v, w)), Pair::ZERO);
        assert!(is_associative(&b, 256, 1e-9, 1).associative);
        assert!(is_degenerate(&b, 1e-9));
    }

    #[test]
    fn dense_random_tensor_fails_associativity() {
        let mut rng = crate::rng::seeded(42);
        let mut gamma = [0.0; 8];
        for g in &mut gamma {
            *g = rng.random_range(-1.0..1.0);
        }
        let b = BilinearProduct::new(gamma).unwrap();
        let report = is_associative(&b, 256, 1e-9, 42);
        assert!(!report.associative);
        assert!(report.max_residual > 1e-3, "residual {}", report.max_residual);
    }

    #[test]
    fn degeneracy_of_the_two_rejected_forms() {
        // u ∘ v = (u1 v1, u2 v1): v acts through v1 only.
        let mut a = [0.0; 8];
        a[flat(0, 0, 0)] = 1.0;
        a[flat(1, 1, 0)] = 1.0;
        assert!(is_degenerate(&BilinearProduct::new(a).unwrap(), 1e-9));
        // u ∘ v = (u1 v1, u1 v2): u acts through u1 only.
        let mut b = [0.0; 8];
        b[flat(0, 0, 0)] = 1.0;
        b[flat(1, 0, 1)] = 1.0;
        assert!(is_degenerate(&BilinearProduct::new(b).unwrap(), 1e-9));
        // The zero tensor is degenerate too.
        assert!(is_degenerate(&BilinearProduct::new([0.0; 8]).unwrap(), 1e-9));
        // Normal forms are not.
        for kind in ProductKind::ALL {
            assert!(!is_degenerate(&BilinearProduct::normal_form(kind), 1e-9));
        }
    }

    #[test]
    fn classify_normal_forms() {
        for kind in ProductKind::ALL {
            let b = BilinearProduct::normal_form(kind);
            let class = classify(&b, 1e-9).unwrap();
            assert_eq!(class, ProductClass::from(kind));
            assert_eq!(class.mu(), Some(kind.mu()));
        }
    }

    #[test]
    fn classify_sheared_hyperbolic_form() {
        let b = BilinearProduct::normal_form(ProductKind::Hyperbolic);
        let sheared = b.sheared([[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(classify(&sheared, 1e-9).unwrap(), ProductClass::Hyperbolic);
    }

    #[test]
    fn classify_degenerate_and_random_dense() {
        let mut a = [0.0; 8];
        a[flat(0, 0, 0)] = 1.0;
        a[flat(1, 1, 0)] = 1.0;
        let b = BilinearProduct::new(a).unwrap();
        assert_eq!(classify(&b, 1e-9).unwrap(), ProductClass::Degenerate);

        let mut rng = crate::rng::seeded(42);
        let mut gamma = [0.0; 8];
        for g in &mut gamma {
            *g = rng.random_range(-1.0..1.0);
        }
        let dense = BilinearProduct::new(gamma).unwrap();
        assert_eq!(classify(&dense, 1e-9).unwrap(), ProductClass::NonAssociative);
    }

    #[test]
    fn shear_invariance_of_classification() {
        let mut rng = crate::rng::seeded(9);
        for kind in ProductKind::ALL {
            let b = BilinearProduct::normal_form(kind);
            for _ in 0..10 {
                let t = random_shear(&mut rng);
                let class = classify(&b.sheared(t).unwrap(), 1e-9).unwrap();
                assert_eq!(class, ProductClass::from(kind), "{kind} under {t:?}");
            }
        }
    }

    pub(crate) fn random_shear(rng: &mut impl Rng) -> [[f64; 2]; 2] {
        loop {
            let t: [[f64; 2]; 2] = [
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            ];
            let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
            if det.abs() >= 0.25 {
                return t;
            }
        }
    }

    #[test]
    fn sheared_by_identity_is_unchanged() {
        let b = BilinearProduct::normal_form(ProductKind::Elliptic);
        let same = b.sheared([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(b.coefficients(), same.coefficients());
        assert!(matches!(
            b.sheared([[1.0, 2.0], [2.0, 4.0]]),
            Err(PairError::SingularShear { .. })
        ));
    }

    #[test]
    fn polar_examples() {
        let (m, p) = polar(ProductKind::Elliptic, Pair::new(3.0, 4.0)).unwrap();
        assert_close(m, 5.0, 1e-15);
        assert_close(p, (4.0f64 / 3.0).atan(), 1e-15);

        let (m, p) = polar(ProductKind::Hyperbolic, Pair::new(5.0, 3.0)).unwrap();
        assert_close(m, 4.0, 1e-15);
        assert_close(p, 0.6f64.atanh(), 1e-15);

        let (m, p) = polar(ProductKind::Parabolic, Pair::new(2.0, 1.0)).unwrap();
        assert_close(m, 2.0, 1e-15);
        assert_close(p, 0.5, 1e-15);
    }

    #[test]
    fn polar_domain_errors() {
        assert!(matches!(
            polar(ProductKind::Elliptic, Pair::ZERO),
            Err(PairError::ZeroPair)
        ));
        assert!(matches!(
            polar(ProductKind::Parabolic, Pair::new(0.0, 1.0)),
            Err(PairError::ParabolicDomain)
        ));
        assert!(matches!(
            polar(ProductKind::Hyperbolic, Pair::new(1.0, 2.0)),
            Err(PairError::HyperbolicDomain { .. })
        ));
    }

    #[test]
    fn elliptic_phase_is_wrapped() {
        let (_, p) = polar(ProductKind::Elliptic, Pair::new(1.0, -1.0)).unwrap();
        assert_close(p, 7.0 * PI / 4.0, 1e-15);
        assert!((0.0..TAU).contains(&p));
    }

    #[test]
    fn log_valuation_and_conjugate() {
        let x = Pair::new(std::f64::consts::E, 0.0);
        assert_close(log_valuation(x, 2.0, 0.0).unwrap(), 2.0, 1e-15);
        assert_close(conjugate_variable(x, 2.0, 0.0).unwrap(), 0.0, 1e-15);

        let x = Pair::new(0.0, 1.0);
        assert_close(log_valuation(x, 2.0, 0.0).unwrap(), 0.0, 1e-15);
        assert_close(conjugate_variable(x, 2.0, 0.0).unwrap(), -PI, 1e-15);

        let x = Pair::new(1.0, 1.0);
        let expected = 0.5 * 2.0f64.ln() + PI / 4.0;
        assert_close(log_valuation(x, 1.0, 1.0).unwrap(), expected, 1e-15);
        assert!(matches!(
            log_valuation(Pair::ZERO, 2.0, 0.0),
            Err(PairError::ZeroPair)
        ));
    }

    #[test]
    fn pair_sum_examples() {
        assert_eq!(pair_sum(Pair::new(1.0, 0.0), Pair::new(0.0, 1.0)), Pair::new(1.0, 1.0));
        assert_eq!(pair_sum(Pair::new(2.5, -3.0), Pair::ZERO), Pair::new(2.5, -3.0));
        assert_eq!(pair_sum(Pair::new(1.0, 2.0), Pair::new(3.0, 4.0)), Pair::new(4.0, 6.0));
    }

    fn sample_in_domain(kind: ProductKind, rng: &mut impl Rng) -> Pair {
        match kind {
            ProductKind::Elliptic => loop {
                let p = Pair::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                if p.norm() > 1e-3 {
                    return p;
                }
            },
            // Positive leading component: the parabolic form is the
            // dominant-first-component limit.
            ProductKind::Parabolic => Pair::new(
                rng.random_range(0.1..2.0),
                rng.random_range(-2.0..2.0),
            ),
            ProductKind::Hyperbolic => {
                let c1: f64 = rng.random_range(0.2..2.0);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Pair::new(sign * c1, rng.random_range(-0.9..0.9) * c1)
            }
        }
    }

    #[test]
    fn moduli_multiply_and_phases_add() {
        let mut rng = crate::rng::seeded(17);
        for kind in ProductKind::ALL {
            for _ in 0..1000 {
                let u = sample_in_domain(kind, &mut rng);
                let v = sample_in_domain(kind, &mut rng);
                let (mu, pu) = polar(kind, u).unwrap();
                let (mv, pv) = polar(kind, v).unwrap();
                let (mp, pp) = polar(kind, product(kind, u, v)).unwrap();
                assert_close(mp, mu * mv, 1e-9);
                match kind {
                    ProductKind::Elliptic => {
                        let diff = (pp - wrap_to_tau(pu + pv)).abs();
                        let circle = diff.min(TAU - diff);
                        assert!(circle <= 1e-9 * (1.0 + pp.abs()), "{circle}");
                    }
                    _ => assert_close(pp, pu + pv, 1e-9),
                }
            }
        }
    }

    #[test]
    fn elliptic_modulus_squared_obeys_product_rule() {
        let mut rng = crate::rng::seeded(23);
        for _ in 0..1000 {
            let u = sample_in_domain(ProductKind::Elliptic, &mut rng);
            let v = sample_in_domain(ProductKind::Elliptic, &mut rng);
            let p = |x: Pair| x.c1 * x.c1 + x.c2 * x.c2;
            assert_close(p(product(ProductKind::Elliptic, u, v)), p(u) * p(v), 1e-12);
        }
    }

    #[test]
    fn normal_forms_distribute_over_sum() {
        let mut rng = crate::rng::seeded(31);
        for kind in ProductKind::ALL {
            let b = BilinearProduct::normal_form(kind);
            for _ in 0..1000 {
                let u = Pair::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let v = Pair::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let w = Pair::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let right = b.apply(u + v, w);
                let split = b.apply(u, w) + b.apply(v, w);
                assert_close(right.c1, split.c1, 1e-12);
                assert_close(right.c2, split.c2, 1e-12);
                let left = b.apply(w, u + v);
                let split = b.apply(w, u) + b.apply(w, v);
                assert_close(left.c1, split.c1, 1e-12);
                assert_close(left.c2, split.c2, 1e-12);
            }
        }
    }

    #[test]
    fn elliptic_phases_wrap_and_hyperbolic_phases_grow() {
        let mut rng = crate::rng::seeded(41);
        // Elliptic: any product of unit pairs stays on the circle with a
        // wrapped phase.
        for _ in 0..200 {
            let mut acc = Pair::ONE;
            for _ in 0..64 {
                let phase = rng.random_range(0.0..TAU);
                acc = product(ProductKind::Elliptic, acc, Pair::from_polar(1.0, phase));
            }
            let (_, p) = polar(ProductKind::Elliptic, acc).unwrap();
            assert!((0.0..TAU).contains(&p));
        }
        // Hyperbolic: phases add over the reals, so repeated products
        // escape any bound attained by a single factor. Per-factor phases
        // stay small enough that cosh and sinh of the accumulated phase
        // remain distinguishable in f64.
        let single_bound = 0.2;
        let mut max_single: f64 = 0.0;
        let mut max_product: f64 = 0.0;
        for _ in 0..200 {
            let mut acc = Pair::ONE;
            for _ in 0..64 {
                let m = rng.random_range(0.9..1.1);
                let xi = rng.random_range(0.05..single_bound);
                max_single = max_single.max(xi);
                let factor = Pair::new(m * xi.cosh(), m * xi.sinh());
                acc = product(ProductKind::Hyperbolic, acc, factor);
            }
            let (_, p) = polar(ProductKind::Hyperbolic, acc).unwrap();
            max_product = max_product.max(p.abs());
        }
        assert!(max_product > 1.0, "max product phase {max_product}");
        assert!(max_product > max_single);
    }

    proptest! {
        #[test]
        fn products_commute_in_every_class(
            a in -10.0..10.0f64, b in -10.0..10.0f64,
            c in -10.0..10.0f64, d in -10.0..10.0f64,
        ) {
            let u = Pair::new(a, b);
            let v = Pair::new(c, d);
            for kind in ProductKind::ALL {
                prop_assert_eq!(product(kind, u, v), product(kind, v, u));
            }
        }

        #[test]
        fn normal_form_products_associate(
            a in -4.0..4.0f64, b in -4.0..4.0f64,
            c in -4.0..4.0f64, d in -4.0..4.0f64,
            e in -4.0..4.0f64, f in -4.0..4.0f64,
        ) {
            let u = Pair::new(a, b);
            let v = Pair::new(c, d);
            let w = Pair::new(e, f);
            for kind in ProductKind::ALL {
                let lhs = product(kind, product(kind, u, v), w);
                let rhs = product(kind, u, product(kind, v, w));
                prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
            }
        }

        #[test]
        fn serde_pair_roundtrip(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let p = Pair::new(a, b);
            let json = serde_json::to_string(&p).unwrap();
            prop_assert_eq!(serde_json::from_str::<Pair>(&json).unwrap(), p);
        }
    }
}
