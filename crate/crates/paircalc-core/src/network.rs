//! Split/merge path networks evaluated under three calculi.
//!
//! A network is a DAG of sources, splitters, phase elements, combiners,
//! and detectors. Scalar mode propagates rates: splitters weight by
//! squared magnitudes and combiners add. Pair mode propagates
//! amplitudes: elements multiply by their complex coefficients,
//! combiners sum component-wise, and detectors report the squared
//! modulus. Stochastic mode redraws every source phase uniformly per
//! trial and averages the pair-mode detector rates, which exposes where
//! coherent and classical predictions part ways.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::born::born;
use crate::pair::{product, Pair, ProductKind};
use crate::rng;

/// Tolerance on a splitter's squared-magnitude weights summing to 1.
pub const SPLITTER_NORM_TOL: f64 = 1e-9;
/// Default trial count for stochastic mode.
pub const DEFAULT_TRIALS: usize = 100_000;

/// Trials per independently seeded chunk; fixed so stochastic results do
/// not depend on how many workers ran the chunks.
const TRIAL_CHUNK: usize = 4096;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("a network needs at least one element")]
    Empty,
    #[error("duplicate element id '{0}'")]
    DuplicateId(String),
    #[error("edge ('{from}', '{to}') references unknown element '{unknown}'")]
    UnknownElement {
        from: String,
        to: String,
        unknown: String,
    },
    #[error("network contains a cycle through '{0}'")]
    CycleDetected(String),
    #[error("{kind} '{id}' needs {expected} input edge(s), has {actual}")]
    BadInputArity {
        kind: &'static str,
        id: String,
        expected: &'static str,
        actual: usize,
    },
    #[error("{kind} '{id}' needs {expected} output edge(s), has {actual}")]
    BadOutputArity {
        kind: &'static str,
        id: String,
        expected: &'static str,
        actual: usize,
    },
    #[error("splitter '{id}' has {coefficients} coefficient(s) for {outputs} output edge(s)")]
    CoefficientCount {
        id: String,
        coefficients: usize,
        outputs: usize,
    },
    #[error("splitter '{id}' squared-magnitude weights sum to {sum}, expected 1")]
    UnnormalizedSplitter { id: String, sum: f64 },
    #[error("source '{id}' rate must be positive and finite, got {rate}")]
    BadSourceRate { id: String, rate: f64 },
    #[error("element '{id}' loss must be in (0, 1], got {loss}")]
    BadLoss { id: String, loss: f64 },
    #[error("element '{id}' has a non-finite parameter")]
    NonFiniteParam { id: String },
    #[error("stochastic mode needs a seed")]
    SeedRequired,
    #[error("stochastic mode needs at least one trial")]
    NoTrials,
    #[error("invalid network JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn one() -> f64 {
    1.0
}

/// Element behaviour and parameters. `loss` is an amplitude factor in
/// `(0, 1]` applied to everything the element emits (rates scale by its
/// square); lossy elements are excluded from conservation guarantees.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ElementKind {
    Source {
        rate: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        loss: f64,
    },
    Splitter {
        /// Complex branch coefficient per output edge, in the order the
        /// element's output edges appear in the edge list.
        coefficients: Vec<Pair>,
        #[serde(default = "one")]
        loss: f64,
    },
    Phase {
        delta: f64,
        #[serde(default = "one")]
        loss: f64,
    },
    Combiner {
        #[serde(default = "one")]
        loss: f64,
    },
    Detector {
        #[serde(default = "one")]
        loss: f64,
    },
}

impl ElementKind {
    fn name(&self) -> &'static str {
        match self {
            ElementKind::Source { .. } => "source",
            ElementKind::Splitter { .. } => "splitter",
            ElementKind::Phase { .. } => "phase",
            ElementKind::Combiner { .. } => "combiner",
            ElementKind::Detector { .. } => "detector",
        }
    }

    fn loss(&self) -> f64 {
        match self {
            ElementKind::Source { loss, .. }
            | ElementKind::Splitter { loss, .. }
            | ElementKind::Phase { loss, .. }
            | ElementKind::Combiner { loss }
            | ElementKind::Detector { loss } => *loss,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    #[serde(flatten)]
    pub kind: ElementKind,
}

impl Element {
    pub fn source(id: &str, rate: f64) -> Element {
        Element::source_with_phase(id, rate, 0.0)
    }

    pub fn source_with_phase(id: &str, rate: f64, phase: f64) -> Element {
        Element {
            id: id.to_string(),
            kind: ElementKind::Source {
                rate,
                phase,
                loss: 1.0,
            },
        }
    }

    pub fn splitter(id: &str, coefficients: Vec<Pair>) -> Element {
        Element {
            id: id.to_string(),
            kind: ElementKind::Splitter {
                coefficients,
                loss: 1.0,
            },
        }
    }

    pub fn phase(id: &str, delta: f64) -> Element {
        Element {
            id: id.to_string(),
            kind: ElementKind::Phase { delta, loss: 1.0 },
        }
    }

    pub fn combiner(id: &str) -> Element {
        Element {
            id: id.to_string(),
            kind: ElementKind::Combiner { loss: 1.0 },
        }
    }

    pub fn detector(id: &str) -> Element {
        Element {
            id: id.to_string(),
            kind: ElementKind::Detector { loss: 1.0 },
        }
    }

    pub fn with_loss(mut self, loss: f64) -> Element {
        match &mut self.kind {
            ElementKind::Source { loss: l, .. }
            | ElementKind::Splitter { loss: l, .. }
            | ElementKind::Phase { loss: l, .. }
            | ElementKind::Combiner { loss: l }
            | ElementKind::Detector { loss: l } => *l = loss,
        }
        self
    }
}

/// A network document: elements plus directed edges between element ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub elements: Vec<Element>,
    pub edges: Vec<(String, String)>,
}

impl NetworkSpec {
    pub fn new(elements: Vec<Element>, edges: &[(&str, &str)]) -> NetworkSpec {
        NetworkSpec {
            elements,
            edges: edges
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    pub fn from_json(json: &str) -> Result<NetworkSpec, NetworkError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        Compiled::build(self).map(|_| ())
    }
}

/// Evaluation mode for a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Scalar,
    Pair,
    Stochastic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Scalar => write!(f, "scalar"),
            Mode::Pair => write!(f, "pair"),
            Mode::Stochastic => write!(f, "stochastic"),
        }
    }
}

/// Detector readings from one evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub mode: Mode,
    pub detector_rates: BTreeMap<String, f64>,
    /// Per-detector standard error (stochastic mode only).
    pub std_error: Option<BTreeMap<String, f64>>,
}

struct Compiled<'a> {
    spec: &'a NetworkSpec,
    topo: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    /// Element indices of detectors, in element-list order.
    detectors: Vec<usize>,
    /// Element indices of sources, in element-list order.
    sources: Vec<usize>,
}

impl<'a> Compiled<'a> {
    fn build(spec: &'a NetworkSpec) -> Result<Compiled<'a>, NetworkError> {
        if spec.elements.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut index = HashMap::new();
        for (i, element) in spec.elements.iter().enumerate() {
            if index.insert(element.id.as_str(), i).is_some() {
                return Err(NetworkError::DuplicateId(element.id.clone()));
            }
        }

        let n = spec.elements.len();
        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for (edge_id, (from, to)) in spec.edges.iter().enumerate() {
            let unknown = |name: &String| NetworkError::UnknownElement {
                from: from.clone(),
                to: to.clone(),
                unknown: name.clone(),
            };
            let f = *index.get(from.as_str()).ok_or_else(|| unknown(from))?;
            let t = *index.get(to.as_str()).ok_or_else(|| unknown(to))?;
            out_edges[f].push(edge_id);
            in_edges[t].push(edge_id);
        }

        for (i, element) in spec.elements.iter().enumerate() {
            let kind = element.kind.name();
            let id = element.id.clone();
            let ins = in_edges[i].len();
            let outs = out_edges[i].len();
            let bad_in = |expected| NetworkError::BadInputArity {
                kind,
                id: id.clone(),
                expected,
                actual: ins,
            };
            let bad_out = |expected| NetworkError::BadOutputArity {
                kind,
                id: id.clone(),
                expected,
                actual: outs,
            };
            let loss = element.kind.loss();
            if !loss.is_finite() || loss <= 0.0 || loss > 1.0 {
                return Err(NetworkError::BadLoss { id, loss });
            }
            match &element.kind {
                ElementKind::Source { rate, phase, .. } => {
                    if ins != 0 {
                        return Err(bad_in("no"));
                    }
                    if outs != 1 {
                        return Err(bad_out("exactly 1"));
                    }
                    if !rate.is_finite() || *rate <= 0.0 {
                        return Err(NetworkError::BadSourceRate { id, rate: *rate });
                    }
                    if !phase.is_finite() {
                        return Err(NetworkError::NonFiniteParam { id });
                    }
                }
                ElementKind::Splitter { coefficients, .. } => {
                    if ins != 1 {
                        return Err(bad_in("exactly 1"));
                    }
                    if outs < 2 {
                        return Err(bad_out("at least 2"));
                    }
                    if coefficients.len() != outs {
                        return Err(NetworkError::CoefficientCount {
                            id,
                            coefficients: coefficients.len(),
                            outputs: outs,
                        });
                    }
                    if coefficients.iter().any(|c| !c.is_finite()) {
                        return Err(NetworkError::NonFiniteParam { id });
                    }
                    let sum: f64 = coefficients.iter().map(|&c| born(c)).sum();
                    if (sum - 1.0).abs() > SPLITTER_NORM_TOL {
                        return Err(NetworkError::UnnormalizedSplitter { id, sum });
                    }
                }
                ElementKind::Phase { delta, .. } => {
                    if ins != 1 {
                        return Err(bad_in("exactly 1"));
                    }
                    if outs != 1 {
                        return Err(bad_out("exactly 1"));
                    }
                    if !delta.is_finite() {
                        return Err(NetworkError::NonFiniteParam { id });
                    }
                }
                ElementKind::Combiner { .. } => {
                    if ins < 2 {
                        return Err(bad_in("at least 2"));
                    }
                    if outs != 1 {
                        return Err(bad_out("exactly 1"));
                    }
                }
                ElementKind::Detector { .. } => {
                    if ins != 1 {
                        return Err(bad_in("exactly 1"));
                    }
                    if outs != 0 {
                        return Err(bad_out("no"));
                    }
                }
            }
        }

        // Kahn's algorithm over element dependencies.
        let mut remaining: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| remaining[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        let edge_target: Vec<usize> = spec
            .edges
            .iter()
            .map(|(_, to)| *index.get(to.as_str()).expect("validated above"))
            .collect();
        while let Some(i) = ready.pop() {
            topo.push(i);
            for &edge in &out_edges[i] {
                let t = edge_target[edge];
                remaining[t] -= 1;
                if remaining[t] == 0 {
                    ready.push(t);
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| remaining[i] > 0).expect("cycle member");
            return Err(NetworkError::CycleDetected(spec.elements[stuck].id.clone()));
        }

        let detectors = (0..n)
            .filter(|&i| matches!(spec.elements[i].kind, ElementKind::Detector { .. }))
            .collect();
        let sources = (0..n)
            .filter(|&i| matches!(spec.elements[i].kind, ElementKind::Source { .. }))
            .collect();
        Ok(Compiled {
            spec,
            topo,
            in_edges,
            out_edges,
            detectors,
            sources,
        })
    }

    /// Classical rate propagation. Returns detector rates in
    /// `self.detectors` order.
    fn eval_scalar(&self) -> Vec<f64> {
        let mut edge_values = vec![0.0; self.spec.edges.len()];
        let mut readings = vec![0.0; self.detectors.len()];
        for &i in &self.topo {
            let element = &self.spec.elements[i];
            let input: f64 = self.in_edges[i].iter().map(|&e| edge_values[e]).sum();
            let weight = element.kind.loss() * element.kind.loss();
            match &element.kind {
                ElementKind::Source { rate, .. } => {
                    edge_values[self.out_edges[i][0]] = rate * weight;
                }
                ElementKind::Splitter { coefficients, .. } => {
                    for (&edge, &c) in self.out_edges[i].iter().zip(coefficients) {
                        edge_values[edge] = input * born(c) * weight;
                    }
                }
                ElementKind::Phase { .. } => {
                    edge_values[self.out_edges[i][0]] = input * weight;
                }
                ElementKind::Combiner { .. } => {
                    edge_values[self.out_edges[i][0]] = input * weight;
                }
                ElementKind::Detector { .. } => {
                    let slot = self.detectors.iter().position(|&d| d == i).expect("detector");
                    readings[slot] = input * weight;
                }
            }
        }
        readings
    }

    /// Coherent amplitude propagation. `phase_override` replaces the
    /// source phases (in `self.sources` order) when given. Returns
    /// detector rates in `self.detectors` order.
    fn eval_pair(&self, phase_override: Option<&[f64]>) -> Vec<f64> {
        let mut edge_values = vec![Pair::ZERO; self.spec.edges.len()];
        let mut readings = vec![0.0; self.detectors.len()];
        for &i in &self.topo {
            let element = &self.spec.elements[i];
            let input = self.in_edges[i]
                .iter()
                .fold(Pair::ZERO, |acc, &e| acc + edge_values[e]);
            let loss = element.kind.loss();
            match &element.kind {
                ElementKind::Source { rate, phase, .. } => {
                    let phase = phase_override
                        .map(|phases| {
                            let slot =
                                self.sources.iter().position(|&s| s == i).expect("source");
                            phases[slot]
                        })
                        .unwrap_or(*phase);
                    edge_values[self.out_edges[i][0]] =
                        Pair::from_polar(rate.sqrt() * loss, phase);
                }
                ElementKind::Splitter { coefficients, .. } => {
                    for (&edge, &c) in self.out_edges[i].iter().zip(coefficients) {
                        edge_values[edge] = product(ProductKind::Elliptic, c, input).scale(loss);
                    }
                }
                ElementKind::Phase { delta, .. } => {
                    let rotor = Pair::from_polar(loss, *delta);
                    edge_values[self.out_edges[i][0]] =
                        product(ProductKind::Elliptic, rotor, input);
                }
                ElementKind::Combiner { .. } => {
                    edge_values[self.out_edges[i][0]] = input.scale(loss);
                }
                ElementKind::Detector { .. } => {
                    let slot = self.detectors.iter().position(|&d| d == i).expect("detector");
                    readings[slot] = born(input) * loss * loss;
                }
            }
        }
        readings
    }

    /// Pair evaluation with uniform random source phases, averaged over
    /// `trials`. Chunked over derived seed streams; the result is
    /// identical for any worker count. Returns `(mean, std_error)` per
    /// detector in `self.detectors` order.
    fn eval_stochastic(&self, seed: u64, trials: usize) -> (Vec<f64>, Vec<f64>) {
        let n_det = self.detectors.len();
        let n_chunks = trials.div_ceil(TRIAL_CHUNK);
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = rng::stream(seed, chunk as u64);
                let count = TRIAL_CHUNK.min(trials - chunk * TRIAL_CHUNK);
                let mut sums = vec![0.0; n_det];
                let mut sums_sq = vec![0.0; n_det];
                let mut phases = vec![0.0; self.sources.len()];
                for _ in 0..count {
                    for phase in &mut phases {
                        *phase = rng.random_range(0.0..TAU);
                    }
                    let readings = self.eval_pair(Some(&phases));
                    for (d, &value) in readings.iter().enumerate() {
                        sums[d] += value;
                        sums_sq[d] += value * value;
                    }
                }
                (sums, sums_sq)
            })
            .collect();
        let mut sums = vec![0.0; n_det];
        let mut sums_sq = vec![0.0; n_det];
        for (chunk_sums, chunk_sums_sq) in &partials {
            for d in 0..n_det {
                sums[d] += chunk_sums[d];
                sums_sq[d] += chunk_sums_sq[d];
            }
        }
        let nf = trials as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / nf).collect();
        let errors = sums
            .iter()
            .zip(&sums_sq)
            .map(|(&s, &q)| {
                if trials > 1 {
                    (((q - s * s / nf) / (nf - 1.0)).max(0.0) / nf).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        (means, errors)
    }

    fn detector_map(&self, values: &[f64]) -> BTreeMap<String, f64> {
        self.detectors
            .iter()
            .zip(values)
            .map(|(&d, &v)| (self.spec.elements[d].id.clone(), v))
            .collect()
    }
}

/// Evaluate a network with the default stochastic trial count.
pub fn simulate(spec: &NetworkSpec, mode: Mode, seed: Option<u64>) -> Result<SimResult, NetworkError> {
    simulate_with_trials(spec, mode, seed, DEFAULT_TRIALS)
}

/// Evaluate a network; `trials` only applies to stochastic mode.
pub fn simulate_with_trials(
    spec: &NetworkSpec,
    mode: Mode,
    seed: Option<u64>,
    trials: usize,
) -> Result<SimResult, NetworkError> {
    let compiled = Compiled::build(spec)?;
    match mode {
        Mode::Scalar => Ok(SimResult {
            mode,
            detector_rates: compiled.detector_map(&compiled.eval_scalar()),
            std_error: None,
        }),
        Mode::Pair => Ok(SimResult {
            mode,
            detector_rates: compiled.detector_map(&compiled.eval_pair(None)),
            std_error: None,
        }),
        Mode::Stochastic => {
            let seed = seed.ok_or(NetworkError::SeedRequired)?;
            if trials == 0 {
                return Err(NetworkError::NoTrials);
            }
            let (means, errors) = compiled.eval_stochastic(seed, trials);
            Ok(SimResult {
                mode,
                detector_rates: compiled.detector_map(&means),
                std_error: Some(compiled.detector_map(&errors)),
            })
        }
    }
}

/// Side-by-side run of all three modes.
#[derive(Debug, Clone, Serialize)]
pub struct ModeComparison {
    pub scalar: SimResult,
    pub pair: SimResult,
    pub stochastic: SimResult,
    /// Coherent minus classical rate per detector.
    pub interference: BTreeMap<String, f64>,
    /// Whether the stochastic mean lies within four standard errors of
    /// the scalar rate. Guaranteed to hold when every interfering path
    /// pair traces back to distinct sources (independent uniform phases);
    /// single-source interferometers keep their coherence and may
    /// legitimately disagree.
    pub stochastic_matches_scalar: BTreeMap<String, bool>,
}

impl ModeComparison {
    pub fn all_match(&self) -> bool {
        self.stochastic_matches_scalar.values().all(|&ok| ok)
    }
}

pub fn compare_modes(spec: &NetworkSpec, seed: u64) -> Result<ModeComparison, NetworkError> {
    compare_modes_with_trials(spec, seed, DEFAULT_TRIALS)
}

pub fn compare_modes_with_trials(
    spec: &NetworkSpec,
    seed: u64,
    trials: usize,
) -> Result<ModeComparison, NetworkError> {
    let scalar = simulate_with_trials(spec, Mode::Scalar, None, trials)?;
    let pair = simulate_with_trials(spec, Mode::Pair, None, trials)?;
    let stochastic = simulate_with_trials(spec, Mode::Stochastic, Some(seed), trials)?;
    let interference = scalar
        .detector_rates
        .iter()
        .map(|(id, &s)| (id.clone(), pair.detector_rates[id] - s))
        .collect();
    let errors = stochastic.std_error.as_ref().expect("stochastic errors");
    let stochastic_matches_scalar = scalar
        .detector_rates
        .iter()
        .map(|(id, &s)| {
            let diff = (stochastic.detector_rates[id] - s).abs();
            let band = 4.0 * errors[id];
            (id.clone(), diff <= band.max(1e-12))
        })
        .collect();
    Ok(ModeComparison {
        scalar,
        pair,
        stochastic,
        interference,
        stochastic_matches_scalar,
    })
}

/// A Mach-Zehnder interferometer with unit input rate and an internal
/// phase of `delta` on the transmitted arm.
///
/// Both beam splitters use transmission `1/√2` and reflection `i/√2`,
/// so the detectors read `cos²(δ/2)` (at `d0`) and `sin²(δ/2)` (at
/// `d1`) in pair mode.
pub fn mach_zehnder(delta: f64) -> NetworkSpec {
    let t = Pair::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let r = Pair::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    NetworkSpec::new(
        vec![
            Element::source("src", 1.0),
            Element::splitter("bs1", vec![t, r]),
            Element::phase("arm", delta),
            Element::splitter("bs2a", vec![r, t]),
            Element::splitter("bs2b", vec![t, r]),
            Element::combiner("c0"),
            Element::combiner("c1"),
            Element::detector("d0"),
            Element::detector("d1"),
        ],
        &[
            ("src", "bs1"),
            ("bs1", "arm"),
            ("bs1", "bs2b"),
            ("arm", "bs2a"),
            ("bs2a", "c0"),
            ("bs2a", "c1"),
            ("bs2b", "c0"),
            ("bs2b", "c1"),
            ("c0", "d0"),
            ("c1", "d1"),
        ],
    )
}
