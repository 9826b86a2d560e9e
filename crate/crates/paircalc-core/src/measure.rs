//! n-tuple measures and the combination operator.
//!
//! A measure is an ordered list of real components, optionally labelled
//! with units. Combination is component-wise addition and only applies
//! to measures of the same dimension and labels. The only re-grading
//! that preserves addition is a non-singular linear shear.

use thiserror::Error;

/// Default relative tolerance for commensurability checks.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Shear matrices with |det| at or below this are treated as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("a measure needs at least one component")]
    Empty,
    #[error("component {index} is not finite")]
    NonFinite { index: usize },
    #[error("component {index} of a single-signed measure is negative ({value})")]
    NegativeComponent { index: usize, value: f64 },
    #[error("dimension mismatch: one measure has {left} component(s), the other {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unit mismatch: [{left}] vs [{right}]")]
    UnitMismatch { left: String, right: String },
    #[error("unit label count {labels} does not match {components} component(s)")]
    LabelCount { labels: usize, components: usize },
    #[error("shear matrix must be {n}x{n}, got {rows} row(s) with {cols} column(s)")]
    ShearShape { rows: usize, cols: usize, n: usize },
    #[error("shear matrix is singular (det = {det:.3e})")]
    SingularShear { det: f64 },
    #[error("commensurability is defined for scalar measures, got {n} component(s)")]
    NotScalar { n: usize },
    #[error("commensurability multipliers must be positive integers")]
    ZeroMultiplier,
}

/// An n-tuple of real components, optionally unit-labelled.
///
/// A measure flagged single-signed has all components non-negative and
/// keeps that property under combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    components: Vec<f64>,
    unit_labels: Option<Vec<String>>,
    single_signed: bool,
}

impl Measure {
    pub fn new(components: Vec<f64>, unit_labels: Option<Vec<String>>) -> Result<Measure, MeasureError> {
        Measure::build(components, unit_labels, false)
    }

    /// A measure whose components must be and stay non-negative.
    pub fn single_signed(
        components: Vec<f64>,
        unit_labels: Option<Vec<String>>,
    ) -> Result<Measure, MeasureError> {
        Measure::build(components, unit_labels, true)
    }

    pub fn scalar(value: f64) -> Result<Measure, MeasureError> {
        Measure::new(vec![value], None)
    }

    fn build(
        components: Vec<f64>,
        unit_labels: Option<Vec<String>>,
        single_signed: bool,
    ) -> Result<Measure, MeasureError> {
        if components.is_empty() {
            return Err(MeasureError::Empty);
        }
        for (index, &value) in components.iter().enumerate() {
            if !value.is_finite() {
                return Err(MeasureError::NonFinite { index });
            }
            if single_signed && value < 0.0 {
                return Err(MeasureError::NegativeComponent { index, value });
            }
        }
        if let Some(labels) = &unit_labels {
            if labels.len() != components.len() {
                return Err(MeasureError::LabelCount {
                    labels: labels.len(),
                    components: components.len(),
                });
            }
        }
        Ok(Measure {
            components,
            unit_labels,
            single_signed,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn unit_labels(&self) -> Option<&[String]> {
        self.unit_labels.as_deref()
    }

    pub fn is_single_signed(&self) -> bool {
        self.single_signed
    }
}

/// Component-wise combination of two measures of equal dimension and
/// units. The result is single-signed when both inputs are.
pub fn combine(a: &Measure, b: &Measure) -> Result<Measure, MeasureError> {
    if a.dim() != b.dim() {
        return Err(MeasureError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.unit_labels != b.unit_labels {
        let show = |m: &Measure| m.unit_labels().map_or("-".to_string(), |l| l.join(","));
        return Err(MeasureError::UnitMismatch {
            left: show(a),
            right: show(b),
        });
    }
    let components = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(x, y)| x + y)
        .collect();
    Ok(Measure {
        components,
        unit_labels: a.unit_labels.clone(),
        single_signed: a.single_signed && b.single_signed,
    })
}

/// Re-grade a measure by a non-singular n×n matrix (rows of `t`).
///
/// Shearing mixes components, so unit labels and the single-signed flag
/// do not carry over.
pub fn shear(a: &Measure, t: &[Vec<f64>]) -> Result<Measure, MeasureError> {
    let n = a.dim();
    if t.len() != n || t.iter().any(|row| row.len() != n) {
        return Err(MeasureError::ShearShape {
            rows: t.len(),
            cols: t.first().map_or(0, Vec::len),
            n,
        });
    }
    let det = determinant(t);
    if det.abs() <= SINGULAR_DET_TOL {
        return Err(MeasureError::SingularShear { det });
    }
    let components = t
        .iter()
        .map(|row| row.iter().zip(&a.components).map(|(m, x)| m * x).sum())
        .collect();
    Measure::new(components, None)
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(t: &[Vec<f64>]) -> f64 {
    let n = t.len();
    let mut m: Vec<Vec<f64>> = t.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            let (pivot_rows, rest) = m.split_at_mut(row);
            for (k, cell) in rest[0].iter_mut().enumerate().skip(col) {
                *cell -= factor * pivot_rows[col][k];
            }
        }
    }
    det
}

/// Whether `m` copies of scalar `x` can be deemed equivalent to `n`
/// copies of scalar `y`, at the default relative tolerance.
pub fn commensurable(x: &Measure, y: &Measure, m: u32, n: u32) -> Result<bool, MeasureError> {
    commensurable_with_tol(x, y, m, n, DEFAULT_REL_TOL)
}

/// [`commensurable`] with an explicit relative tolerance.
pub fn commensurable_with_tol(
    x: &Measure,
    y: &Measure,
    m: u32,
    n: u32,
    tol: f64,
) -> Result<bool, MeasureError> {
    for v in [x, y] {
        if v.dim() != 1 {
            return Err(MeasureError::NotScalar { n: v.dim() });
        }
    }
    if m == 0 || n == 0 {
        return Err(MeasureError::ZeroMultiplier);
    }
    let mx = f64::from(m) * x.components[0];
    let ny = f64::from(n) * y.components[0];
    let diff = (mx - ny).abs();
    Ok(diff <= tol * mx.abs().max(ny.abs()))
}
