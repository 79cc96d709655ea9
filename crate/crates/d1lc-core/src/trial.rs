//! One round of randomized color trial.
//!
//! A quarter of the nodes nominate themselves via a hash bit pair; each
//! nominated node tries a hash-selected palette color and keeps it when
//! no nominated neighbor picked the same color.  Nodes whose hash
//! outcome misses the concentration bounds below are declared failed and
//! set aside; the point of the stage is that every surviving node either
//! lost enough neighbors or gained enough palette slack.  Both hash
//! seeds are chosen by conditional expectation against the cost
//! `sum of deg(v) over failed v`.

use alloc::vec::Vec;

use crate::bits::Seed;
use crate::derand::DerandResult;
use crate::driver::{RunError, StageCtx};
use crate::hash::HashFamily;
use crate::instance::Instance;
use crate::ledger::Pattern;
use crate::mathx;

/// Self-nominated nodes: the two leading hash bits are zero.
pub fn nominate(g: &Instance, fam: &HashFamily, seed: &Seed) -> Vec<u32> {
    g.live_nodes()
        .into_iter()
        .filter(|&v| fam.eval_bits(seed, v as u64, 2).map(|b| b.value()) == Ok(0))
        .collect()
}

/// Nodes failing the nomination concentration bounds: success requires
/// at most `deg/4 + p^0.7` nominated neighbors and, among neighbors of
/// at least triple degree, at least `|N*|/4 - p^0.7` nominations.
pub fn nomination_failures(g: &Instance, nominated: &[u32]) -> Vec<u32> {
    let mut is_nom = alloc::vec![false; g.n()];
    for &v in nominated {
        is_nom[v as usize] = true;
    }
    let mut failed = Vec::new();
    for v in g.live_nodes() {
        let d = g.degree(v) as f64;
        let slack = mathx::powf(g.palette(v).len() as f64, 0.7);
        let mut nom = 0usize;
        let mut heavy = 0usize;
        let mut heavy_nom = 0usize;
        for u in g.live_neighbors(v) {
            let nominated = is_nom[u as usize];
            if nominated {
                nom += 1;
            }
            if g.degree(u) >= 3 * g.degree(v) {
                heavy += 1;
                if nominated {
                    heavy_nom += 1;
                }
            }
        }
        let ok = mathx::le(nom as f64, d / 4.0 + slack)
            && mathx::ge(heavy_nom as f64, heavy as f64 / 4.0 - slack);
        if !ok {
            failed.push(v);
        }
    }
    failed
}

/// Hash-selected palette candidates for the nominated nodes.
pub fn candidate_colors(
    g: &Instance,
    fam: &HashFamily,
    seed: &Seed,
    nominated: &[u32],
) -> Vec<(u32, u32)> {
    nominated
        .iter()
        .map(|&v| {
            let palette = g.palette(v);
            let i = fam.eval(seed, v as u64) as usize % palette.len();
            (v, palette[i])
        })
        .collect()
}

/// Candidates surviving the conflict check: kept unless some nominated
/// neighbor picked the same color.
pub fn kept_colors(g: &Instance, candidates: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut pick: Vec<Option<u32>> = alloc::vec![None; g.n()];
    for &(v, c) in candidates {
        pick[v as usize] = Some(c);
    }
    candidates
        .iter()
        .copied()
        .filter(|&(v, c)| g.live_neighbors(v).all(|u| pick[u as usize] != Some(c)))
        .collect()
}

/// Nodes (uncolored, not already failed) missing every slack source:
/// a surviving node succeeds if its palette already exceeds `1.1 deg`,
/// its triple-degree neighborhood is small, enough neighbors failed
/// nomination, or enough neighbors took colors outside its palette.
pub fn coloring_failures(
    g: &Instance,
    nom_failed: &[u32],
    kept: &[(u32, u32)],
) -> Vec<u32> {
    let mut is_failed = alloc::vec![false; g.n()];
    for &v in nom_failed {
        is_failed[v as usize] = true;
    }
    let mut kept_color: Vec<Option<u32>> = alloc::vec![None; g.n()];
    for &(v, c) in kept {
        kept_color[v as usize] = Some(c);
    }
    let mut failed = Vec::new();
    for v in g.live_nodes() {
        if is_failed[v as usize] || kept_color[v as usize].is_some() {
            continue;
        }
        let d = g.degree(v) as f64;
        let p = g.palette(v).len() as f64;
        if mathx::ge(p, 1.1 * d) {
            continue;
        }
        let mut heavy = 0usize;
        let mut failed_nbrs = 0usize;
        let mut foreign = 0usize;
        for u in g.live_neighbors(v) {
            if g.degree(u) >= 3 * g.degree(v) {
                heavy += 1;
            }
            if is_failed[u as usize] {
                failed_nbrs += 1;
            }
            if let Some(c) = kept_color[u as usize] {
                if g.palette(v).binary_search(&c).is_err() {
                    foreign += 1;
                }
            }
        }
        let ok = (heavy as f64) < d / 3.0 - mathx::EPS
            || mathx::ge(failed_nbrs as f64, 0.03 * d)
            || mathx::ge(foreign as f64, 0.01 * p);
        if !ok {
            failed.push(v);
        }
    }
    failed
}

/// Cost of a nomination seed: total degree of nomination failures.
pub fn nomination_cost(g: &Instance, fam: &HashFamily, seed: &Seed) -> f64 {
    nomination_failures(g, &nominate(g, fam, seed))
        .iter()
        .map(|&v| g.degree(v) as f64)
        .sum()
}

/// Cost of a coloring seed given a fixed nomination outcome.
pub fn coloring_cost(
    g: &Instance,
    fam: &HashFamily,
    seed: &Seed,
    nominated: &[u32],
    nom_failed: &[u32],
) -> f64 {
    let kept = kept_colors(g, &candidate_colors(g, fam, seed, nominated));
    coloring_failures(g, nom_failed, &kept)
        .iter()
        .map(|&v| g.degree(v) as f64)
        .sum()
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    /// Colors committed by the trial (already conflict-free).
    pub newly_colored: Vec<(u32, u32)>,
    /// Surviving uncolored nodes.
    pub survivors: Vec<u32>,
    /// Failed nodes, set aside for later greedy treatment.
    pub failed: Vec<u32>,
    /// Survivors demoted to failed because the trial cost them more
    /// than a third of their palette.
    pub palette_demotions: Vec<u32>,
    pub nomination: DerandResult,
    pub coloring: DerandResult,
}

/// Runs the full trial against `g` (a snapshot; the caller commits
/// `newly_colored` to its master instance).
pub fn run(g: &Instance, ctx: &mut StageCtx) -> Result<TrialOutcome, RunError> {
    let fam = HashFamily::new(ctx.cfg.independence, g.n().max(1) as u64, ctx.cfg.range_bits)
        .map_err(RunError::Hash)?;

    let nomination =
        ctx.derandomize("trial/nominate", &fam, &mut |s| nomination_cost(g, &fam, s))?;
    let nominated = nominate(g, &fam, &nomination.seed);
    let nom_failed = nomination_failures(g, &nominated);

    // picking colors needs each node to know its two-hop palette picks;
    // provisioned as one full-bandwidth exchange
    let (s2, r2) = two_hop_loads(g);
    ctx.charge_capacity("trial/two-hop", Pattern::Route { max_sender: s2, max_receiver: r2 })?;
    let coloring = ctx.derandomize("trial/color", &fam, &mut |s| {
        coloring_cost(g, &fam, s, &nominated, &nom_failed)
    })?;
    let kept = kept_colors(g, &candidate_colors(g, &fam, &coloring.seed, &nominated));
    let col_failed = coloring_failures(g, &nom_failed, &kept);
    ctx.charge("trial/announce", Pattern::Broadcast)?;

    // survivors keep only if the committed colors did not consume more
    // than a third of their palette
    let mut snapshot = g.clone();
    snapshot.apply_colors(&kept).map_err(RunError::Apply)?;
    let mut failed: Vec<u32> = nom_failed;
    failed.extend_from_slice(&col_failed);
    let mut is_failed = alloc::vec![false; g.n()];
    for &v in &failed {
        is_failed[v as usize] = true;
    }
    let mut survivors = Vec::new();
    let mut palette_demotions = Vec::new();
    for v in snapshot.live_nodes() {
        if is_failed[v as usize] {
            continue;
        }
        if 3 * snapshot.palette(v).len() < 2 * g.palette(v).len() {
            palette_demotions.push(v);
            failed.push(v);
        } else {
            survivors.push(v);
        }
    }
    failed.sort_unstable();
    failed.dedup();
    Ok(TrialOutcome {
        newly_colored: kept,
        survivors,
        failed,
        palette_demotions,
        nomination,
        coloring,
    })
}

fn two_hop_loads(g: &Instance) -> (u64, u64) {
    let mut sender = 0u64;
    let mut receiver = 0u64;
    for v in g.live_nodes() {
        let d = g.degree(v) as u64;
        sender = sender.max(d * d);
        let sum: u64 = g.live_neighbors(v).map(|u| g.degree(u) as u64).sum();
        receiver = receiver.max(sum);
    }
    (sender, receiver)
}
