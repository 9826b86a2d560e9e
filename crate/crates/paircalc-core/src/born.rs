//! The rate map for pairs and its exponent.
//!
//! Two independently sourced unit-rate streams, carried by unit-modulus
//! pairs with uniform random phases, must combine to a mean rate of 2.
//! The mean rate of `|e^{iθ}+e^{iφ}|^α` has the closed form
//! `Γ(α+1)/Γ(α/2+1)²`, and the consistency condition pins the exponent
//! to α = 2: the observable rate of a pair is its squared modulus.
//!
//! The Gaussian pair prior of rate `r` makes that squared modulus
//! exponential with mean `r`, the rate of a Poisson stream of target
//! events.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::pair::Pair;
use crate::rng;

/// Default residual tolerance for [`solve_alpha`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;
/// Bisection bracket for [`solve_alpha`].
pub const SOLVE_BRACKET: (f64, f64) = (0.0, 8.0);

/// Samples per independently seeded chunk in the Monte Carlo loops.
/// Fixed so results do not depend on how many workers ran the chunks.
const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum BornError {
    #[error("alpha = {alpha} is out of range: the mean rate needs alpha > -1")]
    AlphaOutOfRange { alpha: f64 },
    #[error("target {target} is outside the attainable range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("mean rate is not monotone over the bracket; cannot bisect")]
    NotMonotone,
    #[error("bisection residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ToleranceNotMet { residual: f64, tol: f64 },
    #[error("rate must be positive and finite, got {rate}")]
    BadRate { rate: f64 },
    #[error("duration must be positive and finite, got {duration}")]
    BadDuration { duration: f64 },
    #[error("at least one sample is required")]
    EmptySample,
}

/// Observable rate of a pair: its squared modulus.
pub fn born(x: Pair) -> f64 {
    x.c1 * x.c1 + x.c2 * x.c2
}

/// Closed form of the two-source mean rate: `Γ(α+1)/Γ(α/2+1)²`.
pub fn mean_rate_closed(alpha: f64) -> Result<f64, BornError> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(BornError::AlphaOutOfRange { alpha });
    }
    Ok((libm::lgamma(alpha + 1.0) - 2.0 * libm::lgamma(alpha / 2.0 + 1.0)).exp())
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Monte Carlo mean of `|e^{iθ}+e^{iφ}|^α` over independent uniform
/// phases, using `|e^{iθ}+e^{iφ}|^α = (2+2cos(θ−φ))^{α/2}`.
///
/// Sampling is chunked over independent derived streams, so the result
/// is identical however many threads run the chunks.
pub fn mean_rate_mc(alpha: f64, n_samples: usize, seed: u64) -> McEstimate {
    let n = n_samples.max(1);
    let n_chunks = n.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, chunk as u64);
            let count = MC_CHUNK.min(n - chunk * MC_CHUNK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let theta: f64 = rng.random_range(0.0..TAU);
                let phi: f64 = rng.random_range(0.0..TAU);
                let value = (2.0 + 2.0 * (theta - phi).cos()).powf(alpha / 2.0);
                sum += value;
                sum_sq += value * value;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, q), (cs, cq)| (s + cs, q + cq));
    let nf = n as f64;
    let estimate = sum / nf;
    let std_error = if n > 1 {
        let variance = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
        (variance / nf).sqrt()
    } else {
        0.0
    };
    McEstimate { estimate, std_error }
}

/// Exponent at which the closed-form mean rate equals `target`, by
/// bisection over [`SOLVE_BRACKET`].
pub fn solve_alpha(target: f64, tol: f64) -> Result<f64, BornError> {
    let (lo, hi) = SOLVE_BRACKET;
    let f_lo = mean_rate_closed(lo)?;
    let f_hi = mean_rate_closed(hi)?;
    if !target.is_finite() || target < f_lo || target > f_hi {
        return Err(BornError::TargetOutOfRange {
            target,
            lo: f_lo,
            hi: f_hi,
        });
    }
    // The bisection relies on monotone growth over the bracket.
    let mut prev = f_lo;
    for i in 1..=32 {
        let value = mean_rate_closed(lo + (hi - lo) * f64::from(i) / 32.0)?;
        if value < prev {
            return Err(BornError::NotMonotone);
        }
        prev = value;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_rate_closed(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = if (mean_rate_closed(lo)? - target).abs() <= (mean_rate_closed(hi)? - target).abs()
    {
        lo
    } else {
        hi
    };
    let residual = (mean_rate_closed(alpha)? - target).abs();
    if residual > tol {
        return Err(BornError::ToleranceNotMet { residual, tol });
    }
    Ok(alpha)
}

/// Draw `n` pairs from the Gaussian prior of rate `r`: each component is
/// normal with mean 0 and variance `r/2`, so [`born`] of a draw is
/// exponential with mean `r` and phases are uniform.
pub fn sample_prior(r: f64, n: usize, seed: u64) -> Result<Vec<Pair>, BornError> {
    if !r.is_finite() || r <= 0.0 {
        return Err(BornError::BadRate { rate: r });
    }
    if n == 0 {
        return Err(BornError::EmptySample);
    }
    let normal = Normal::new(0.0, (r / 2.0).sqrt()).expect("finite standard deviation");
    let mut rng = rng::seeded(seed);
    Ok((0..n)
        .map(|_| Pair::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect())
}

/// Event times of a Poisson stream of rate `r` on `[0, duration)`,
/// generated by accumulating exponential inter-arrival times.
pub fn poisson_stream(r: f64, duration: f64, seed: u64) -> Result<Vec<f64>, BornError> {
    if !r.is_finite() || r <= 0.0 {
        return Err(BornError::BadRate { rate: r });
    }
    if !duration.is_finite() || duration <= 0.0 {
        return Err(BornError::BadDuration { duration });
    }
    let exp = Exp::new(r).expect("positive rate");
    let mut rng = rng::seeded(seed);
    let mut events = Vec::new();
    let mut t = exp.sample(&mut rng);
    while t < duration {
        events.push(t);
        t += exp.sample(&mut rng);
    }
    Ok(events)
}

/// Kolmogorov-Smirnov distance between `samples` in `[0, upper]` and the
/// uniform distribution on that interval.
pub fn ks_uniform_statistic(samples: &[f64], upper: f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic needs samples");
    let mut sorted: Vec<f64> = samples.iter().map(|s| s / upper).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - u).max(u - i as f64 / n);
    }
    d
}

/// Asymptotic two-sided Kolmogorov-Smirnov critical value at
/// significance level `level`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::{product, ProductKind};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn assert_rel(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{a} != {b}");
    }

    #[test]
    fn closed_form_values() {
        assert_rel(mean_rate_closed(2.0).unwrap(), 2.0, 1e-12);
        assert_rel(mean_rate_closed(0.0).unwrap(), 1.0, 1e-12);
        // Γ(5)/Γ(3)² = 24/4
        assert_rel(mean_rate_closed(4.0).unwrap(), 6.0, 1e-12);
        // Γ(2)/Γ(3/2)² = 4/π
        assert_rel(mean_rate_closed(1.0).unwrap(), 4.0 / PI, 1e-12);
    }

    #[test]
    fn closed_form_rejects_gamma_pole() {
        assert!(matches!(
            mean_rate_closed(-1.0),
            Err(BornError::AlphaOutOfRange { .. })
        ));
        assert!(matches!(
            mean_rate_closed(f64::NAN),
            Err(BornError::AlphaOutOfRange { .. })
        ));
        // Just inside the pole is fine.
        assert!(mean_rate_closed(-0.99).unwrap().is_finite());
    }

    #[test]
    fn mc_at_alpha_zero_is_exact() {
        let est = mean_rate_mc(0.0, 10_000, 3);
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn mc_matches_closed_form() {
        for (alpha, seed) in [(1.0, 10), (2.0, 11), (3.0, 12)] {
            let est = mean_rate_mc(alpha, 200_000, seed);
            let closed = mean_rate_closed(alpha).unwrap();
            assert!(
                est.covers(closed, 4.0),
                "alpha {alpha}: {} +- {} vs {closed}",
                est.estimate,
                est.std_error
            );
        }
    }

    #[test]
    fn mc_is_thread_count_independent() {
        let a = mean_rate_mc(2.0, 150_000, 99);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mean_rate_mc(2.0, 150_000, 99));
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn solve_alpha_examples() {
        let alpha = solve_alpha(2.0, 1e-10).unwrap();
        assert!((alpha - 2.0).abs() <= 1e-8, "{alpha}");
        assert!(solve_alpha(1.0, 1e-10).unwrap().abs() <= 1e-8);
        let alpha = solve_alpha(6.0, 1e-10).unwrap();
        assert!((alpha - 4.0).abs() <= 1e-8, "{alpha}");
    }

    #[test]
    fn solve_alpha_rejects_unreachable_targets() {
        assert!(matches!(
            solve_alpha(0.5, 1e-10),
            Err(BornError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            solve_alpha(1e6, 1e-10),
            Err(BornError::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn solve_alpha_round_trips_over_targets() {
        for target in [1.0, 1.2, 2.0, 3.5, 10.0, 42.0] {
            let alpha = solve_alpha(target, 1e-10).unwrap();
            assert_rel(mean_rate_closed(alpha).unwrap(), target, 1e-9);
        }
    }

    #[test]
    fn born_examples() {
        assert_eq!(born(Pair::new(3.0, 4.0)), 25.0);
        assert_eq!(born(Pair::ZERO), 0.0);
    }

    #[test]
    fn prior_rate_is_exponential() {
        let n = 200_000;
        let r = 1.0;
        let draws = sample_prior(r, n, 21).unwrap();
        let rates: Vec<f64> = draws.iter().map(|&x| born(x)).collect();
        let mean = rates.iter().sum::<f64>() / n as f64;
        // born is exponential with mean r, so its standard deviation is r.
        let se = r / (n as f64).sqrt();
        assert!((mean - r).abs() <= 4.0 * se, "mean {mean}");

        let phases: Vec<f64> = draws
            .iter()
            .map(|x| crate::pair::polar(ProductKind::Elliptic, *x).unwrap().1)
            .collect();
        let d = ks_uniform_statistic(&phases, TAU);
        assert!(d <= ks_critical_value(n, 0.01), "KS {d}");
    }

    #[test]
    fn prior_variance_matches_exponential_law() {
        let n = 200_000;
        let r = 4.0;
        let rates: Vec<f64> = sample_prior(r, n, 22)
            .unwrap()
            .iter()
            .map(|&x| born(x))
            .collect();
        let mean = rates.iter().sum::<f64>() / n as f64;
        let variance = rates.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((variance - r * r).abs() <= 0.05 * r * r, "variance {variance}");
    }

    #[test]
    fn prior_rejects_bad_arguments() {
        assert!(matches!(sample_prior(0.0, 1, 0), Err(BornError::BadRate { .. })));
        assert!(matches!(sample_prior(1.0, 0, 0), Err(BornError::EmptySample)));
    }

    #[test]
    fn poisson_count_and_spacing() {
        let r = 3.0;
        let duration = 1000.0;
        let events = poisson_stream(r, duration, 31).unwrap();
        let expected = r * duration;
        assert!(
            (events.len() as f64 - expected).abs() <= 4.0 * expected.sqrt(),
            "count {}",
            events.len()
        );
        assert!(events.windows(2).all(|w| w[0] < w[1]));
        assert!(events.iter().all(|&t| (0.0..duration).contains(&t)));

        let gaps: Vec<f64> = events.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let se = (1.0 / r) / (gaps.len() as f64).sqrt();
        assert!((mean_gap - 1.0 / r).abs() <= 4.0 * se, "gap {mean_gap}");
    }

    #[test]
    fn poisson_empty_stream_is_valid() {
        let events = poisson_stream(1e-6, 1e-6, 7).unwrap();
        assert!(events.is_empty());
        assert!(matches!(
            poisson_stream(-1.0, 1.0, 0),
            Err(BornError::BadRate { .. })
        ));
        assert!(matches!(
            poisson_stream(1.0, 0.0, 0),
            Err(BornError::BadDuration { .. })
        ));
    }

    #[test]
    fn rates_are_not_directly_additive() {
        // Aligned phases interfere constructively...
        let x1 = Pair::new(1.0, 0.0);
        let x2 = Pair::new(1.0, 0.0);
        assert_eq!(born(x1 + x2), 4.0);
        assert_ne!(born(x1 + x2), born(x1) + born(x2));
        // ...while a quarter-turn offset makes rates add exactly.
        let y2 = Pair::new(0.0, 1.0);
        assert_eq!(born(x1 + y2), born(x1) + born(y2));
    }

    #[test]
    fn ks_statistic_sanity() {
        let n = 10_000;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_uniform_statistic(&grid, 1.0) < 1e-3);
        let clumped = vec![0.5; n];
        assert!(ks_uniform_statistic(&clumped, 1.0) > 0.4);
    }

    proptest! {
        #[test]
        fn born_is_multiplicative_under_elliptic_product(
            a in -5.0..5.0f64, b in -5.0..5.0f64,
            c in -5.0..5.0f64, d in -5.0..5.0f64,
        ) {
            let u = Pair::new(a, b);
            let v = Pair::new(c, d);
            let lhs = born(product(ProductKind::Elliptic, u, v));
            let rhs = born(u) * born(v);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
