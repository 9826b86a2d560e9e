//! Amplitude vectors over indexed base states.
//!
//! A sample object is a vector of independent unit-rate Gaussian pairs,
//! one per base state. Composites over an index subset are component
//! sums, selection zeroes the complement, bases rotate under unitary
//! pair matrices, and a confirmed single object is the vector scaled to
//! the unit sphere.

use std::collections::BTreeSet;

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::born::born;
use crate::pair::{product, Pair, ProductKind};
use crate::rng;

/// Largest allowed entry-wise deviation of `U†U` from the identity.
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("an amplitude vector needs at least one component")]
    Empty,
    #[error("component {index} is not finite")]
    NonFinite { index: usize },
    #[error("selection index {index} is out of range for {n} base state(s)")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: vector has {vector} component(s), argument expects {expected}")]
    DimensionMismatch { vector: usize, expected: usize },
    #[error("selection is empty; a composite needs at least one base state")]
    EmptySelection,
    #[error("matrix is not unitary: max |U†U - I| entry is {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("matrix rows must form a square {n}x{n} layout, got row of length {len}")]
    BadRow { n: usize, len: usize },
}

/// A vector of pairs over `n` orthonormal base states, indexed `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    components: Vec<Pair>,
}

impl AmplitudeVector {
    pub fn new(components: Vec<Pair>) -> Result<AmplitudeVector, HilbertError> {
        if components.is_empty() {
            return Err(HilbertError::Empty);
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(HilbertError::NonFinite { index });
        }
        Ok(AmplitudeVector { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Pair] {
        &self.components
    }

    pub fn get(&self, k: usize) -> Result<Pair, HilbertError> {
        self.components
            .get(k)
            .copied()
            .ok_or(HilbertError::IndexOutOfRange {
                index: k,
                n: self.dim(),
            })
    }

    /// Squared norm: the summed rates of all components.
    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|&c| born(c)).sum()
    }
}

/// A subset of the base-state indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    indices: BTreeSet<usize>,
    n: usize,
}

impl Selection {
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Selection, HilbertError> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(HilbertError::IndexOutOfRange { index, n });
        }
        Ok(Selection { indices, n })
    }

    pub fn full(n: usize) -> Selection {
        Selection {
            indices: (0..n).collect(),
            n,
        }
    }

    pub fn singleton(n: usize, k: usize) -> Result<Selection, HilbertError> {
        Selection::new(n, [k])
    }

    /// The remaining indices of `0..n`.
    pub fn complement(&self) -> Selection {
        Selection {
            indices: (0..self.n).filter(|i| !self.indices.contains(i)).collect(),
            n: self.n,
        }
    }

    pub fn intersect(&self, other: &Selection) -> Result<Selection, HilbertError> {
        if self.n != other.n {
            return Err(HilbertError::DimensionMismatch {
                vector: self.n,
                expected: other.n,
            });
        }
        Ok(Selection {
            indices: self.indices.intersection(&other.indices).copied().collect(),
            n: self.n,
        })
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.contains(&k)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn space_dim(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

fn check_dim(x: &AmplitudeVector, expected: usize) -> Result<(), HilbertError> {
    if x.dim() != expected {
        return Err(HilbertError::DimensionMismatch {
            vector: x.dim(),
            expected,
        });
    }
    Ok(())
}

/// Draw one object: `n` independent unit-rate Gaussian pairs.
pub fn sample_object(n: usize, seed: u64) -> Result<AmplitudeVector, HilbertError> {
    Ok(sample_objects(n, 1, seed)?.pop().expect("one draw"))
}

/// Draw `draws` objects from one seeded stream.
pub fn sample_objects(n: usize, draws: usize, seed: u64) -> Result<Vec<AmplitudeVector>, HilbertError> {
    if n == 0 {
        return Err(HilbertError::Empty);
    }
    // Unit rate per component: each real part has variance 1/2.
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("finite std dev");
    let mut rng = rng::seeded(seed);
    Ok((0..draws)
        .map(|_| AmplitudeVector {
            components: (0..n)
                .map(|_| Pair::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect(),
        })
        .collect())
}

/// Amplitude of the composite state over the selected base states:
/// the component sum `Σ_{k∈S} x_k`.
pub fn composite_amplitude(x: &AmplitudeVector, s: &Selection) -> Result<Pair, HilbertError> {
    check_dim(x, s.space_dim())?;
    if s.is_empty() {
        return Err(HilbertError::EmptySelection);
    }
    Ok(s.iter().fold(Pair::ZERO, |acc, k| acc + x.components[k]))
}

/// Apply the selection operator: components outside `s` are zeroed.
pub fn project(x: &AmplitudeVector, s: &Selection) -> Result<AmplitudeVector, HilbertError> {
    check_dim(x, s.space_dim())?;
    Ok(AmplitudeVector {
        components: x
            .components
            .iter()
            .enumerate()
            .map(|(k, &c)| if s.contains(k) { c } else { Pair::ZERO })
            .collect(),
    })
}

/// Rotate into a new orthonormal basis: `y = Ux` with elliptic pair
/// arithmetic. `U` must be unitary within [`UNITARY_TOL`].
pub fn rotate(x: &AmplitudeVector, u: &PairMatrix) -> Result<AmplitudeVector, HilbertError> {
    check_dim(x, u.dim())?;
    let deviation = u.max_unitarity_deviation();
    if deviation > UNITARY_TOL {
        return Err(HilbertError::NotUnitary { deviation });
    }
    Ok(u.apply(x))
}

/// Scale a confirmed single object to the unit sphere.
pub fn normalize_single_object(x: &AmplitudeVector) -> Result<AmplitudeVector, HilbertError> {
    let norm_sqr = x.norm_sqr();
    if norm_sqr <= 0.0 {
        return Err(HilbertError::ZeroVector);
    }
    let inv = 1.0 / norm_sqr.sqrt();
    Ok(AmplitudeVector {
        components: x.components.iter().map(|c| c.scale(inv)).collect(),
    })
}

/// A square matrix of pairs, multiplied with elliptic arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    data: Vec<Pair>,
}

impl PairMatrix {
    pub fn identity(n: usize) -> PairMatrix {
        let mut m = PairMatrix {
            n,
            data: vec![Pair::ZERO; n * n],
        };
        for i in 0..n {
            m.data[i * n + i] = Pair::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Pair>>) -> Result<PairMatrix, HilbertError> {
        let n = rows.len();
        if n == 0 {
            return Err(HilbertError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(HilbertError::BadRow { n, len: row.len() });
            }
            data.extend(row);
        }
        Ok(PairMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Pair {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, x: &AmplitudeVector) -> AmplitudeVector {
        let components = (0..self.n)
            .map(|i| {
                (0..self.n).fold(Pair::ZERO, |acc, j| {
                    acc + product(ProductKind::Elliptic, self.entry(i, j), x.components()[j])
                })
            })
            .collect();
        AmplitudeVector { components }
    }

    pub fn mul(&self, rhs: &PairMatrix) -> PairMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimensions must match");
        let n = self.n;
        let mut data = vec![Pair::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Pair::ZERO;
                for k in 0..n {
                    acc = acc + product(ProductKind::Elliptic, self.entry(i, k), rhs.entry(k, j));
                }
                data[i * n + j] = acc;
            }
        }
        PairMatrix { n, data }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> PairMatrix {
        let n = self.n;
        let mut data = vec![Pair::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.entry(j, i).conj();
            }
        }
        PairMatrix { n, data }
    }

    /// Largest entry-wise modulus of `U†U − I`.
    pub fn max_unitarity_deviation(&self) -> f64 {
        let gram = self.dagger().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let expected = if i == j { Pair::ONE } else { Pair::ZERO };
                worst = worst.max((gram.entry(i, j) - expected).norm());
            }
        }
        worst
    }

    /// Rotation acting on the two indices `i`, `j`: transmission
    /// `cos θ`, cross terms `±sin θ` with a relative phase.
    pub fn two_index_rotation(n: usize, i: usize, j: usize, theta: f64, phase: f64) -> PairMatrix {
        assert!(i < n && j < n && i != j);
        let mut m = PairMatrix::identity(n);
        let c = Pair::new(theta.cos(), 0.0);
        let s = Pair::from_polar(theta.sin(), phase);
        m.data[i * n + i] = c;
        m.data[j * n + j] = c;
        m.data[i * n + j] = s;
        m.data[j * n + i] = Pair::new(-s.c1, s.c2);
        m
    }

    /// Diagonal matrix of unit pairs with the given phases.
    pub fn phase_multiplier(phases: &[f64]) -> PairMatrix {
        let n = phases.len();
        let mut m = PairMatrix::identity(n);
        for (i, &phase) in phases.iter().enumerate() {
            m.data[i * n + i] = Pair::from_polar(1.0, phase);
        }
        m
    }

    /// Random unitary built constructively from two-index rotations and
    /// phase multipliers, so unitarity holds up to rounding.
    pub fn random_unitary(n: usize, seed: u64) -> PairMatrix {
        use rand::Rng;
        let mut rng = rng::seeded(seed);
        let mut m = PairMatrix::phase_multiplier(
            &(0..n)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect::<Vec<_>>(),
        );
        if n == 1 {
            return m;
        }
        for i in 0..n {
            for j in i + 1..n {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                m = PairMatrix::two_index_rotation(n, i, j, theta, phase).mul(&m);
            }
        }
        m
    }
}
