//! The single-flip Markov chain over valid plans.
//!
//! Proposals are drawn uniformly from the fixed universe of all
//! `(ward, district)` pairs. Pairs that are not valid boundary flips are
//! rejected and the chain holds. Because the proposal kernel does not depend
//! on the current state, it is symmetric and the stationary distribution is
//! uniform over the valid plans reachable from the seed.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{check_seed, is_valid_flip, Flip, ValidityConfig};
use crate::election::label;
use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::outlier::{ConfigEcho, EpsilonAccumulator, EpsilonReport};
use crate::plan::Plan;

pub type ChainRng = ChaCha8Rng;

/// Identifier of the generator recorded in every report. Stream 0 drives
/// the chain, stream 1 the label reservoir.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(rand_chacha 0.9, seed_from_u64, stream 0)";

pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub steps: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub lazy: bool,
    #[serde(default = "one")]
    pub record_every: u64,
}

fn one() -> u64 {
    1
}

impl ChainConfig {
    pub fn new(steps: u64, rng_seed: u64) -> Self {
        ChainConfig { steps, rng_seed, lazy: false, record_every: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// `None` when the lazy coin skipped the step.
    pub proposal: Option<Flip>,
    pub accepted: bool,
    /// Label of the plan after the step, accepted or not.
    pub label: f64,
}

/// Uniform draw from all `(ward, district)` pairs.
#[inline]
pub fn propose<R: Rng + ?Sized>(rng: &mut R, graph: &DualGraph) -> Flip {
    let d = graph.num_districts();
    let k = rng.random_range(0..graph.num_wards() * d);
    Flip { ward: k / d, to: k % d }
}

/// One chain transition. `current_label` must be the label of `plan`.
pub fn step<R: Rng + ?Sized>(
    plan: &mut Plan,
    graph: &DualGraph,
    cfg: &ValidityConfig,
    seed_score: f64,
    rng: &mut R,
    lazy: bool,
    current_label: f64,
) -> Result<StepOutcome> {
    if lazy && rng.random::<bool>() {
        return Ok(StepOutcome { proposal: None, accepted: false, label: current_label });
    }
    let flip = propose(rng, graph);
    if is_valid_flip(plan, graph, cfg, seed_score, flip) {
        plan.apply_flip(graph, flip.ward, flip.to)?;
        Ok(StepOutcome { proposal: Some(flip), accepted: true, label: label(plan)? })
    } else {
        Ok(StepOutcome { proposal: Some(flip), accepted: false, label: current_label })
    }
}

/// One row of the trajectory trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub accepted: bool,
    pub ward: Option<usize>,
    pub to_district: Option<usize>,
    pub label: f64,
}

pub trait TraceSink {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()>;
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// `step,accepted,ward,to_district,label` rows. Step 0 is the seed state
/// and has empty ward and district cells.
pub struct CsvTrace<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(out: W) -> Self {
        CsvTrace { writer: csv::Writer::from_writer(out) }
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<W: Write> TraceSink for CsvTrace<W> {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        Ok(self.writer.serialize(rec)?)
    }

    fn finish(&mut self) -> Result<()> {
        Ok(self.writer.flush()?)
    }
}

impl TraceSink for Vec<TrajectoryRecord> {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Optional outputs of a run.
#[derive(Default)]
pub struct Sinks<'a> {
    pub trace: Option<&'a mut dyn TraceSink>,
    /// Keep a uniform sample of this many labels for a histogram.
    pub reservoir: Option<usize>,
}

pub struct TrajectoryOutcome {
    pub report: EpsilonReport,
    pub accumulator: EpsilonAccumulator,
    pub final_plan: Plan,
}

/// Runs `ccfg.steps` transitions from `seed_plan`, feeding every state's
/// label (the seed included) into the epsilon accumulator.
pub fn run_trajectory(
    graph: &DualGraph,
    seed_plan: Plan,
    vcfg: &ValidityConfig,
    ccfg: &ChainConfig,
    sinks: Sinks<'_>,
) -> Result<TrajectoryOutcome> {
    ccfg.validate()?;
    let seed_score = check_seed(&seed_plan, graph, vcfg)?;
    let mut plan = seed_plan;
    let mut rng = chain_rng(ccfg.rng_seed, 0);
    let mut current = label(&plan)?;
    let mut acc = match sinks.reservoir {
        Some(cap) => EpsilonAccumulator::with_reservoir(current, cap, chain_rng(ccfg.rng_seed, 1))?,
        None => EpsilonAccumulator::new(current)?,
    };
    let mut trace = sinks.trace;
    if let Some(t) = trace.as_deref_mut() {
        t.record(&TrajectoryRecord { step: 0, accepted: false, ward: None, to_district: None, label: current })?;
    }

    let mut accepted_steps = 0;
    for s in 1..=ccfg.steps {
        let out = step(&mut plan, graph, vcfg, seed_score, &mut rng, ccfg.lazy, current)?;
        current = out.label;
        accepted_steps += u64::from(out.accepted);
        acc.observe(current)?;
        if s % ccfg.record_every == 0 {
            if let Some(t) = trace.as_deref_mut() {
                t.record(&TrajectoryRecord {
                    step: s,
                    accepted: out.accepted,
                    ward: out.proposal.map(|f| f.ward),
                    to_district: out.proposal.map(|f| f.to),
                    label: current,
                })?;
            }
        }
    }
    if let Some(t) = trace.as_deref_mut() {
        t.finish()?;
    }

    let report = acc.finalize(ConfigEcho {
        mode: vcfg.compactness_mode,
        enforce_counties: vcfg.enforce_counties,
        enforce_mm: vcfg.enforce_mm,
        rng_seed: ccfg.rng_seed,
        steps: ccfg.steps,
        pop_tolerance_wards: vcfg.pop_tolerance_wards,
        compactness_budget: vcfg.compactness_budget,
        lazy: ccfg.lazy,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        accepted_steps,
        graph_hash: None,
    })?;
    Ok(TrajectoryOutcome { report, accumulator: acc, final_plan: plan })
}
