//! Top-level coloring driver.
//!
//! Ten recursion levels (x = 0.0, 0.1, ..., 0.9) each run the trial /
//! subsample / bucket pipeline on the current residual; the subsampled
//! set recurses at the next exponent, and the leftover sets (small
//! palettes and trial failures) are colored greedily while unwinding.
//! The round schedule is oblivious: every level charges its full fixed
//! program whether or not any nodes remain, so the ledger total depends
//! only on the configuration, never on the input.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::Seed;
use crate::bucket::{self, BucketError, IterationStat};
use crate::derand::{
    derandomize_exact, derandomize_sampled, DerandError, DerandMode, DerandResult, SplitMix64,
};
use crate::hash::{HashError, HashFamily};
use crate::instance::{ApplyError, GreedyError, Instance, VerificationReport};
use crate::ledger::{LedgerError, Pattern, Phase, RoundLedger};
use crate::subsample;
use crate::trial;

#[derive(Clone, Debug)]
pub enum RunError {
    MaxDegreeExceeded { max_degree: usize, cap: usize },
    Hash(HashError),
    Apply(ApplyError),
    Greedy(GreedyError),
    Bucket(BucketError),
    Ledger(LedgerError),
    Derand(DerandError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::MaxDegreeExceeded { max_degree, cap } => {
                write!(f, "max degree {max_degree} exceeds the model bound {cap}")
            }
            RunError::Hash(e) => write!(f, "hash family: {e}"),
            RunError::Apply(e) => write!(f, "coloring commit: {e}"),
            RunError::Greedy(e) => write!(f, "greedy coloring: {e}"),
            RunError::Bucket(e) => write!(f, "bucket descent: {e}"),
            RunError::Ledger(e) => write!(f, "round ledger: {e}"),
            RunError::Derand(e) => write!(f, "derandomization: {e}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DerandPolicy {
    /// Exhaustive conditional-expectation descent, falling back to the
    /// sampled search when the seed space exceeds the enumeration cap.
    Exact,
    /// Always sample the given number of seeds.
    Sampled(u32),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// C: nodes holding fewer palette colors are deferred to greedy
    /// cleanup.
    pub palette_floor: usize,
    /// κ: a residual with at most κ·n edges is collected and colored
    /// greedily instead of running the pipeline.
    pub base_kappa: f64,
    /// c: inputs must satisfy Δ ≤ c·√n.
    pub max_degree_constant: f64,
    /// Bucket descent iterations.
    pub descent_iterations: u32,
    /// Hash family independence k.
    pub independence: u32,
    /// Hash output width for the trial and subsample families.
    pub range_bits: u32,
    pub derand: DerandPolicy,
    /// Largest seed space swept exhaustively.
    pub exact_cap: u64,
    /// Sample count when exact mode falls back.
    pub sample_fallback: u32,
    /// Base seed for the sampled searches.
    pub rng_seed: u64,
    /// Rounds charged per unit of routing load.
    pub routing_constant: u64,
    /// Per-node bandwidth cap as a multiple of n (c² for the two-hop
    /// exchanges the degree bound guarantees schedulable).
    pub load_cap: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            palette_floor: 16,
            base_kappa: 4.0,
            max_degree_constant: 4.0,
            descent_iterations: 20,
            independence: 4,
            range_bits: 20,
            derand: DerandPolicy::Exact,
            exact_cap: 1 << 18,
            sample_fallback: 64,
            rng_seed: 0x6c1d5eed,
            routing_constant: 2,
            load_cap: 16,
        }
    }
}

/// Shared per-run state handed to each stage: configuration, the round
/// ledger, and a counter making sampled seed streams per-call distinct.
pub struct StageCtx<'a> {
    pub cfg: &'a RunConfig,
    pub ledger: &'a mut RoundLedger,
    derand_calls: u64,
}

impl<'a> StageCtx<'a> {
    pub fn new(cfg: &'a RunConfig, ledger: &'a mut RoundLedger) -> StageCtx<'a> {
        StageCtx { cfg, ledger, derand_calls: 0 }
    }

    pub fn charge(&mut self, label: &str, pattern: Pattern) -> Result<u64, RunError> {
        self.ledger.charge(label, pattern).map_err(RunError::Ledger)
    }

    pub fn charge_capacity(&mut self, label: &str, pattern: Pattern) -> Result<u64, RunError> {
        self.ledger.charge_capacity(label, pattern).map_err(RunError::Ledger)
    }

    /// Selects a seed under the configured policy and charges the
    /// agreement schedule: one aggregate-and-broadcast exchange per
    /// polynomial coefficient (the exact descent fixes exactly one
    /// coefficient chunk per exchange).
    pub fn derandomize(
        &mut self,
        label: &str,
        family: &HashFamily,
        cost: &mut dyn FnMut(&Seed) -> f64,
    ) -> Result<DerandResult, RunError> {
        let n = self.ledger.n();
        for _ in 0..family.k() {
            self.charge(label, Pattern::Route { max_sender: n, max_receiver: n })?;
            self.charge(label, Pattern::Broadcast)?;
        }
        self.derand_calls += 1;
        let call = self.derand_calls;
        let sampled = |cost: &mut dyn FnMut(&Seed) -> f64, samples: u32| {
            let stream = SplitMix64::new(self.cfg.rng_seed ^ call.wrapping_mul(0x9e3779b9)).next_u64();
            derandomize_sampled(family, cost, samples, stream)
        };
        let result = match self.cfg.derand {
            DerandPolicy::Exact => {
                match derandomize_exact(family, cost, family.chunk_bits(), self.cfg.exact_cap) {
                    Ok(r) => r,
                    Err(DerandError::TooLargeToEnumerate { .. }) => {
                        sampled(cost, self.cfg.sample_fallback).map_err(RunError::Derand)?
                    }
                    Err(e) => return Err(RunError::Derand(e)),
                }
            }
            DerandPolicy::Sampled(samples) => {
                sampled(cost, samples).map_err(RunError::Derand)?
            }
        };
        Ok(result)
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerandSummary {
    pub label: String,
    pub mode: DerandMode,
    pub achieved_cost: f64,
    pub family_mean: f64,
    pub evaluations: u64,
    pub seed_hex: String,
}

impl DerandSummary {
    fn new(label: &str, r: &DerandResult) -> DerandSummary {
        DerandSummary {
            label: String::from(label),
            mode: r.mode,
            achieved_cost: r.achieved_cost,
            family_mean: r.family_mean,
            evaluations: r.evaluations,
            seed_hex: r.seed.to_hex(),
        }
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LevelReport {
    pub x_tenths: u32,
    pub live_at_entry: usize,
    pub edges_at_entry: usize,
    /// The whole residual was collected and colored greedily.
    pub base_case: bool,
    pub l0_size: usize,
    pub failed_size: usize,
    pub failed_edges: usize,
    pub survivors: usize,
    pub g2_size: usize,
    pub gprime_size: usize,
    pub gbad_size: usize,
    pub gbad_edges: usize,
    pub palette_demotions: usize,
    pub slack_demotions: usize,
    pub potential_before: f64,
    pub potential_after: f64,
    /// C·n + 2·potential_before, the deferral bound.
    pub potential_bound: f64,
    /// Recount: every G₂ node passed the slack disjunction.
    pub slack_ok: bool,
    pub derand: Vec<DerandSummary>,
    pub bucket_iterations: Vec<IterationStat>,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunReport {
    pub levels: Vec<LevelReport>,
    /// Number of levels entered with live content (≤ 10, the residual
    /// beyond the last level is greedy by construction).
    pub depth: u32,
    /// Nodes still live after the last level; always handled by the
    /// collect-and-greedy path.
    pub residual_size: usize,
    pub total_rounds: u64,
    pub phases: Vec<Phase>,
    pub verification: VerificationReport,
}

/// A completed run: the colored instance plus its report.
#[derive(Clone, Debug)]
pub struct ColorRun {
    pub instance: Instance,
    pub report: RunReport,
}

const LEVELS: u32 = 10;

/// Published round budget: the fixed schedule charges the same total on
/// every input, and that total never exceeds this constant.
pub const ROUND_BUDGET: u64 = 5000;

/// Colors `input` completely, or reports why it cannot.
pub fn color(input: &Instance, cfg: &RunConfig) -> Result<ColorRun, RunError> {
    let mut master = input.clone();
    let n = master.n();
    let degree_cap =
        libm::floor(cfg.max_degree_constant * libm::sqrt(n as f64)) as usize;
    let max_degree = master.max_degree();
    if max_degree > degree_cap {
        return Err(RunError::MaxDegreeExceeded { max_degree, cap: degree_cap });
    }

    let mut ledger = RoundLedger::new(n, cfg.routing_constant, cfg.load_cap);
    let mut ctx = StageCtx::new(cfg, &mut ledger);
    let mut levels: Vec<LevelReport> = Vec::new();
    // leftover sets colored while unwinding, deepest level first
    let mut cleanup: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();

    let mut active = master.live_nodes();
    let mut depth = 0u32;
    for x_tenths in 0..LEVELS {
        let g = master.induced(&active);
        let live_at_entry = g.live_count();
        let edges_at_entry = g.edge_count();
        if live_at_entry > 0 {
            depth = x_tenths + 1;
        }

        // base-case slot: scheduled every level, taken when the
        // residual is small enough
        let base_case =
            (edges_at_entry as f64) <= cfg.base_kappa * n as f64 && live_at_entry > 0;
        ctx.charge_capacity(
            "level/base-collect",
            Pattern::Collect {
                words: if base_case { (edges_at_entry + live_at_entry) as u64 } else { 0 },
            },
        )?;
        if base_case {
            let asg = g.greedy_assign().map_err(RunError::Greedy)?;
            master.apply_colors(&asg).map_err(RunError::Apply)?;
        }

        let g = master.induced(&active);
        let l0: Vec<u32> =
            g.live_nodes().into_iter().filter(|&v| g.palette(v).len() < cfg.palette_floor).collect();
        let mut body_nodes = g.live_nodes();
        body_nodes.retain(|v| !l0.contains(v));
        let g0 = master.induced(&body_nodes);

        let trial_out = trial::run(&g0, &mut ctx)?;
        master.apply_colors(&trial_out.newly_colored).map_err(RunError::Apply)?;

        let g1 = master.induced(&trial_out.survivors);
        let sub = subsample::run(&g1, x_tenths, &mut ctx)?;
        let slack_ok = sub.g2.live_nodes().iter().all(|&v| sub.g2.has_slack(v));

        let mut g2 = sub.g2.clone();
        g2.trim_palettes();
        let bucket_out = bucket::run(&g2, n, &mut ctx)?;
        master.apply_colors(&bucket_out.coloring).map_err(RunError::Apply)?;

        let failed = master.induced(&trial_out.failed);
        levels.push(LevelReport {
            x_tenths,
            live_at_entry,
            edges_at_entry,
            base_case,
            l0_size: l0.len(),
            failed_size: trial_out.failed.len(),
            failed_edges: failed.edge_count(),
            survivors: trial_out.survivors.len(),
            g2_size: sub.g2.live_count(),
            gprime_size: sub.gprime.live_count(),
            gbad_size: bucket_out.bad.len(),
            gbad_edges: bucket_out.bad_edges,
            palette_demotions: trial_out.palette_demotions.len(),
            slack_demotions: sub.slack_demoted.len(),
            potential_before: sub.potential_before,
            potential_after: sub.potential_after,
            potential_bound: cfg.palette_floor as f64 * n as f64 + 2.0 * sub.potential_before,
            slack_ok,
            derand: alloc::vec![
                DerandSummary::new("trial/nominate", &trial_out.nomination),
                DerandSummary::new("trial/color", &trial_out.coloring),
                DerandSummary::new("subsample/join", &sub.derand),
                DerandSummary::new("bucket/assign", &bucket_out.derand),
            ],
            bucket_iterations: bucket_out.iterations,
        });
        cleanup.push((l0, trial_out.failed));
        active = sub.gprime.live_nodes();
    }

    // the level-10 residual always takes the greedy path
    let residual = master.induced(&active);
    let residual_size = residual.live_count();
    ctx.charge_capacity(
        "residual/collect",
        Pattern::Collect { words: (residual.edge_count() + residual.live_count()) as u64 },
    )?;
    let asg = residual.greedy_assign().map_err(RunError::Greedy)?;
    master.apply_colors(&asg).map_err(RunError::Apply)?;

    // unwind: greedy-color each level's small-palette and failed sets,
    // deepest first
    for (l0, failed) in cleanup.into_iter().rev() {
        for (label, set) in [("unwind/low-palette", l0), ("unwind/failed", failed)] {
            let sub = master.induced(&set);
            ctx.charge_capacity(
                label,
                Pattern::Collect { words: (sub.edge_count() + sub.live_count()) as u64 },
            )?;
            let asg = sub.greedy_assign().map_err(RunError::Greedy)?;
            master.apply_colors(&asg).map_err(RunError::Apply)?;
        }
    }

    let verification = master.verify();
    let report = RunReport {
        levels,
        depth,
        residual_size,
        total_rounds: ledger.total_rounds(),
        phases: ledger.phases().to_vec(),
        verification,
    };
    Ok(ColorRun { instance: master, report })
}
