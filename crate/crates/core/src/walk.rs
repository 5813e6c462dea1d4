//! Lazy random walks and the random-walk verifier for clean components.
//!
//! A lazy walk stays put with probability 1/2 and otherwise moves to a
//! uniformly chosen neighbor. The verifier starts `n * q2` independent walks
//! of `q1` steps at the claimed vertex and rejects iff one of them meets a
//! marked vertex, where
//!
//! ```text
//! q1 = ceil((16 d^2 / eps^2) * (n + ln(2d / eps)))
//! q2 = ceil(4d / eps)
//! ```
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): trial `i` uses the stream
//! `i` of the generator keyed by `seed_from_u64(seed)`, so each trial's
//! randomness depends only on `(seed, i)`. Per step the walk draws one
//! `u32`; its low bit decides whether to stay (`0`) or move (`1`), and a move
//! draws the neighbor index with `gen_range(0..deg)` on `u32`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::acac::{materialize, AcacInstance, ExplicitGraph};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::oracle::min_boundary_ratio;
use crate::rational::{self, BigRational, Rational};

/// Instances up to this many bits are materialised before walking.
const MATERIALIZE_FOR_WALKS: usize = 20;

/// Largest explicit graph handled by the exact hitting-probability DP.
pub const MAX_DP_VERTICES: usize = 1 << 14;

/// Trials are run in blocks of this size; a block with a hit ends the run.
const TRIAL_BLOCK: u64 = 64;

/// `ceil((16 d^2 / delta^2) * (n + ln(2d / delta)))`.
pub fn walk_length(d: usize, delta: Rational, n: usize) -> Result<u64> {
    if *delta.numer() == 0 {
        return Err(Error::Config(
            "walk length needs a positive parameter".into(),
        ));
    }
    let d = d.max(1) as f64;
    let inv = *delta.denom() as f64 / *delta.numer() as f64;
    let steps = 16.0 * d * d * inv * inv * (n as f64 + (2.0 * d * inv).ln());
    if !steps.is_finite() || steps > u64::MAX as f64 / 2.0 {
        return Err(Error::Config(format!(
            "walk length {steps} is not representable"
        )));
    }
    Ok(steps.ceil().max(1.0) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifierParams {
    pub epsilon: Rational,
    pub degree_bound: usize,
    pub bits: usize,
    pub q1: u64,
    pub q2: u64,
}

impl VerifierParams {
    /// A degree bound of 0 (an edgeless graph) is treated as 1.
    pub fn new(epsilon: Rational, degree_bound: usize, bits: usize) -> Result<Self> {
        if *epsilon.numer() == 0 || epsilon >= Rational::one() {
            return Err(Error::Config(format!(
                "epsilon {} is not in (0,1)",
                rational::format(&epsilon)
            )));
        }
        let d = degree_bound.max(1) as u64;
        let q1 = walk_length(degree_bound, epsilon, bits)?;
        let q2 = Rational::from_integer(4 * d) / epsilon;
        Ok(Self {
            epsilon,
            degree_bound,
            bits,
            q1,
            q2: q2.ceil().to_integer(),
        })
    }

    /// Uses `epsilon` if given, else the instance's own promise parameter.
    pub fn for_instance(acac: &AcacInstance, epsilon: Option<Rational>) -> Result<Self> {
        let eps = epsilon.or(acac.epsilon()).ok_or_else(|| {
            Error::Config("the instance carries no epsilon; pass one explicitly".into())
        })?;
        Self::new(eps, acac.degree_bound(), acac.bits())
    }

    /// `n * q2`.
    pub fn trials(&self) -> u64 {
        self.bits.max(1) as u64 * self.q2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkConfig {
    pub steps: u64,
    pub trials: u64,
    pub seed: u64,
    /// Run every trial even after a hit.
    pub audit: bool,
}

impl WalkConfig {
    pub fn from_params(params: &VerifierParams, seed: u64) -> Self {
        Self {
            steps: params.q1,
            trials: params.trials(),
            seed,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.trials == 0 {
            return Err(Error::Config("steps and trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// The random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkOutcome {
    /// First marked vertex met and the step it was reached (0 = start).
    Hit {
        vertex: u64,
        step: u64,
    },
    Clean {
        vertex: u64,
    },
}

impl WalkOutcome {
    pub fn is_hit(&self) -> bool {
        matches!(self, WalkOutcome::Hit { .. })
    }
}

/// Where a walk gets its neighbors from.
enum Walker<'a> {
    Oracle(&'a AcacInstance),
    Explicit(ExplicitGraph),
}

impl Walker<'_> {
    fn step<R: RngCore>(&self, v: u64, rng: &mut R) -> Result<u64> {
        if rng.next_u32() & 1 == 0 {
            return Ok(v);
        }
        match self {
            Walker::Oracle(acac) => {
                let nb = acac.neighbors(v)?;
                if nb.is_empty() {
                    return Ok(v);
                }
                Ok(nb[rng.gen_range(0..nb.len() as u32) as usize])
            }
            Walker::Explicit(g) => {
                let nb = g.adjacency(v as usize);
                if nb.is_empty() {
                    return Ok(v);
                }
                Ok(nb[rng.gen_range(0..nb.len() as u32) as usize] as u64)
            }
        }
    }

    fn is_marked(&self, v: u64) -> Result<bool> {
        match self {
            Walker::Oracle(acac) => acac.is_marked(v),
            Walker::Explicit(g) => Ok(g.is_marked(v as usize)),
        }
    }

    fn walk<R: RngCore>(&self, start: u64, steps: u64, rng: &mut R) -> Result<WalkOutcome> {
        if self.is_marked(start)? {
            return Ok(WalkOutcome::Hit {
                vertex: start,
                step: 0,
            });
        }
        let mut v = start;
        for step in 1..=steps {
            let next = self.step(v, rng)?;
            if next != v {
                v = next;
                if self.is_marked(v)? {
                    return Ok(WalkOutcome::Hit { vertex: v, step });
                }
            }
        }
        Ok(WalkOutcome::Clean { vertex: v })
    }
}

/// One lazy walk of `steps` steps from `start` on the instance's oracles.
pub fn lazy_walk<R: RngCore>(
    acac: &AcacInstance,
    start: &BitString,
    steps: u64,
    rng: &mut R,
) -> Result<WalkOutcome> {
    let v = vertex_of(acac, start)?;
    Walker::Oracle(acac).walk(v, steps, rng)
}

fn vertex_of(acac: &AcacInstance, x: &BitString) -> Result<u64> {
    if x.len() != acac.bits() {
        return Err(Error::validation(format!(
            "vertex {x} has {} bits, the instance uses {}",
            x.len(),
            acac.bits()
        )));
    }
    if x.value() >= acac.graph().vertex_count() {
        return Err(Error::validation(format!("vertex {x} is out of range")));
    }
    Ok(x.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    /// Trials actually run.
    pub trials: u64,
    pub steps: u64,
    pub first_hit_trial: Option<u64>,
    pub first_hit_step: Option<u64>,
    /// Number of hitting trials; exact only in audit mode.
    pub hits: u64,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "verdict": if self.accepted { "accept" } else { "reject" },
            "trials": self.trials,
            "steps": self.steps,
            "first_hit_trial": self.first_hit_trial,
            "first_hit_step": self.first_hit_step,
            "hits": self.hits,
        })
    }
}

/// Runs the walk verifier from `witness`. Rejects iff some walk hits a marked
/// vertex; the verdict depends only on the inputs and `config.seed`.
pub fn ma_verify(acac: &AcacInstance, witness: &BitString, config: &WalkConfig) -> Result<Verdict> {
    config.validate()?;
    let start = vertex_of(acac, witness)?;
    let walker = if acac.bits() <= MATERIALIZE_FOR_WALKS {
        Walker::Explicit(materialize(acac)?)
    } else {
        Walker::Oracle(acac)
    };

    let mut first: Option<(u64, u64)> = None;
    let mut hits = 0u64;
    let mut run = 0u64;
    let mut block_start = 0u64;
    while block_start < config.trials {
        let block_end = (block_start + TRIAL_BLOCK).min(config.trials);
        let outcomes: Vec<(u64, WalkOutcome)> = (block_start..block_end)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.seed, t);
                walker.walk(start, config.steps, &mut rng).map(|o| (t, o))
            })
            .collect::<Result<_>>()?;
        for (t, o) in outcomes {
            if let WalkOutcome::Hit { step, .. } = o {
                hits += 1;
                if first.is_none() {
                    first = Some((t, step));
                }
            }
        }
        run = block_end;
        if first.is_some() && !config.audit {
            break;
        }
        block_start = block_end;
    }
    let trials = match (first, config.audit) {
        (Some((t, _)), false) => t + 1,
        _ => run,
    };
    if !config.audit {
        hits = first.is_some() as u64;
    }
    Ok(Verdict {
        accepted: first.is_none(),
        trials,
        steps: config.steps,
        first_hit_trial: first.map(|f| f.0),
        first_hit_step: first.map(|f| f.1),
        hits,
    })
}

/// Exact hitting probabilities by backward dynamic programming.
///
/// After `s` steps, `numer[v] / denom` is the probability that an `s`-step
/// lazy walk from `v` visits a target vertex, with `denom = (2L)^s` for `L`
/// the lcm of the degrees of non-target vertices.
struct HittingDp<'a> {
    g: &'a ExplicitGraph,
    target: Vec<bool>,
    lcm: BigUint,
    step_factor: BigUint,
    numer: Vec<BigUint>,
    denom: BigUint,
    steps: u64,
}

impl<'a> HittingDp<'a> {
    fn new(g: &'a ExplicitGraph, target: Vec<bool>) -> Result<Self> {
        if g.vertex_count() > MAX_DP_VERTICES {
            return Err(Error::scope(format!(
                "hitting-probability DP on {} vertices (limit {MAX_DP_VERTICES})",
                g.vertex_count()
            )));
        }
        if g.is_weighted() {
            return Err(Error::Unsupported("walks on weighted graphs".into()));
        }
        let lcm = (0..g.vertex_count())
            .filter(|&v| !target[v] && g.degree(v) > 0)
            .fold(1u64, |acc, v| acc.lcm(&(g.degree(v) as u64)));
        let numer = target
            .iter()
            .map(|&t| if t { BigUint::one() } else { BigUint::zero() })
            .collect();
        Ok(Self {
            g,
            target,
            lcm: BigUint::from(lcm),
            step_factor: BigUint::from(2 * lcm),
            numer,
            denom: BigUint::one(),
            steps: 0,
        })
    }

    fn advance(&mut self) {
        let next_denom = &self.denom * &self.step_factor;
        let next: Vec<BigUint> = (0..self.g.vertex_count())
            .into_par_iter()
            .map(|v| {
                if self.target[v] {
                    return next_denom.clone();
                }
                let nb = self.g.adjacency(v);
                if nb.is_empty() {
                    return &self.numer[v] * &self.step_factor;
                }
                let share = &self.lcm / BigUint::from(nb.len());
                let sum: BigUint = nb.iter().map(|&u| &self.numer[u as usize]).sum();
                &self.numer[v] * &self.lcm + sum * share
            })
            .collect();
        self.numer = next;
        self.denom = next_denom;
        self.steps += 1;
    }

    fn probability(&self, v: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.numer[v].clone()),
            BigInt::from(self.denom.clone()),
        )
    }

    /// `numer[v] / denom >= r`.
    fn at_least(&self, v: usize, r: &Rational) -> bool {
        &self.numer[v] * BigUint::from(*r.denom()) >= &self.denom * BigUint::from(*r.numer())
    }
}

/// Exact probability, for every start vertex, that a `steps`-step lazy walk
/// visits a marked vertex.
pub fn hitting_probabilities(g: &ExplicitGraph, steps: u64) -> Result<Vec<BigRational>> {
    let target = (0..g.vertex_count()).map(|v| g.is_marked(v)).collect();
    let mut dp = HittingDp::new(g, target)?;
    for _ in 0..steps {
        dp.advance();
    }
    Ok((0..g.vertex_count()).map(|v| dp.probability(v)).collect())
}

pub fn hitting_probability(g: &ExplicitGraph, start: u32, steps: u64) -> Result<BigRational> {
    if start as usize >= g.vertex_count() {
        return Err(Error::validation(format!(
            "start vertex {start} out of range"
        )));
    }
    Ok(hitting_probabilities(g, steps)?.swap_remove(start as usize))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EscapeStatus {
    /// Every start in `A` reached `B` with probability at least the
    /// threshold within `step` steps (`step` <= the budget).
    Holds {
        step: u64,
        worst_start: u32,
        worst_probability: BigRational,
    },
    /// Some start stays below the threshold after the full budget.
    Violated {
        start: u32,
        probability: BigRational,
    },
    /// The graph or set does not satisfy the escape bound's hypotheses.
    HypothesisUnmet(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EscapeReport {
    /// `min |boundary(A')| / |A'|` over nonempty `A'` inside `A`.
    pub boundary_ratio: Rational,
    /// The parameter used: `boundary_ratio` capped at 1/2.
    pub delta: Rational,
    pub degree_bound: usize,
    pub bits: usize,
    pub step_budget: u64,
    /// `delta / (4d)`.
    pub threshold: Rational,
    pub status: EscapeStatus,
}

impl EscapeReport {
    pub fn holds(&self) -> bool {
        matches!(self.status, EscapeStatus::Holds { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let status = match &self.status {
            EscapeStatus::Holds {
                step,
                worst_start,
                worst_probability,
            } => serde_json::json!({
                "result": "holds",
                "certified_at_step": step,
                "worst_start": worst_start,
                "worst_probability": rational::format_big(worst_probability),
            }),
            EscapeStatus::Violated { start, probability } => serde_json::json!({
                "result": "violated",
                "start": start,
                "probability": rational::format_big(probability),
            }),
            EscapeStatus::HypothesisUnmet(why) => serde_json::json!({
                "result": "hypothesis-unmet",
                "reason": why,
            }),
        };
        serde_json::json!({
            "boundary_ratio": rational::format(&self.boundary_ratio),
            "delta": rational::format(&self.delta),
            "degree_bound": self.degree_bound,
            "bits": self.bits,
            "step_budget": self.step_budget,
            "threshold": rational::format(&self.threshold),
            "status": status,
        })
    }
}

/// Checks the escape bound on an explicit graph: from every vertex of `a`,
/// a lazy walk of `walk_length(d, delta, n)` steps reaches the complement
/// `B` with probability at least `delta / (4d)`, where `delta` is the
/// smallest boundary ratio inside `a` and `n = ceil(log2 |V|)`.
///
/// If the ratio is at least 1/2, the hypothesis holds for every
/// `delta < 1/2`; checking at `delta = 1/2` (fewer steps, larger threshold)
/// covers all of them. Probabilities are exact. Since they only grow with
/// the step count, the check stops at the first step where every start
/// clears the threshold.
pub fn check_escape_lemma(g: &ExplicitGraph, a: &[u32], d: usize) -> Result<EscapeReport> {
    let inside = g.membership(a)?;
    let members: Vec<u32> = (0..g.vertex_count() as u32)
        .filter(|&v| inside[v as usize])
        .collect();
    let boundary_ratio = min_boundary_ratio(g, &members)?;
    let half = Rational::new(1, 2);
    let delta = boundary_ratio.min(half);
    let bits = g.bits();
    let dd = d.max(1);
    let threshold = delta / Rational::from_integer(4 * dd as u64);
    let mut report = EscapeReport {
        boundary_ratio,
        delta,
        degree_bound: d,
        bits,
        step_budget: 0,
        threshold,
        status: EscapeStatus::HypothesisUnmet(String::new()),
    };

    let unmet = if members.len() == g.vertex_count() {
        Some("the complement of A is empty".to_string())
    } else if !g.is_connected() {
        Some("the graph is not connected".to_string())
    } else if let Some(&v) = members.iter().find(|&&v| g.degree(v as usize) > d) {
        Some(format!(
            "vertex {v} has degree {} > d = {d}",
            g.degree(v as usize)
        ))
    } else if *delta.numer() == 0 {
        Some("some subset of A has empty boundary (delta = 0)".to_string())
    } else {
        None
    };
    if let Some(why) = unmet {
        report.status = EscapeStatus::HypothesisUnmet(why);
        return Ok(report);
    }

    report.step_budget = walk_length(dd, delta, bits)?;
    let target: Vec<bool> = inside.iter().map(|&i| !i).collect();
    let mut dp = HittingDp::new(g, target)?;
    loop {
        if members.iter().all(|&v| dp.at_least(v as usize, &threshold)) {
            let (worst_start, worst_probability) = members
                .iter()
                .map(|&v| (v, dp.probability(v as usize)))
                .min_by(|x, y| x.1.cmp(&y.1))
                .expect("A is nonempty");
            report.status = EscapeStatus::Holds {
                step: dp.steps,
                worst_start,
                worst_probability,
            };
            return Ok(report);
        }
        if dp.steps >= report.step_budget {
            let (start, probability) = members
                .iter()
                .map(|&v| (v, dp.probability(v as usize)))
                .min_by(|x, y| x.1.cmp(&y.1))
                .expect("A is nonempty");
            report.status = EscapeStatus::Violated { start, probability };
            return Ok(report);
        }
        dp.advance();
    }
}
