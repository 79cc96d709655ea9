//! Bucket-tree coloring of the slack-rich subgraph.
//!
//! Nodes and palette colors hash to short bit strings; a bucket is a
//! (level, string) pair and buckets form a tree under string-prefix
//! ancestry.  Nodes whose hash outcome concentrates badly are set aside
//! (G_bad) and colored greedily; every other node starts in the bucket
//! of its level with strictly fewer higher-degree subtree neighbors than
//! subtree palette colors, and 20 rounds of descending into a feasible
//! child bucket shrink that to one color and zero contenders.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::{BitStr, Seed};
use crate::derand::DerandResult;
use crate::driver::{RunError, StageCtx};
use crate::hash::HashFamily;
use crate::instance::Instance;
use crate::ledger::Pattern;
use crate::mathx;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BucketError {
    /// A good node found no child bucket with fewer contenders than
    /// colors; impossible while the descent invariant holds.
    NoFeasibleChild { node: u32, iteration: u32 },
    /// A good node ended the descent without a unique private color.
    ResidualConflict { node: u32, colors: usize, contenders: usize },
    /// A good node violated the descent invariant.
    GoodNodeInfeasible { node: u32, iteration: u32 },
}

impl fmt::Display for BucketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BucketError::NoFeasibleChild { node, iteration } => {
                write!(f, "no feasible child bucket for node {node} in iteration {iteration}")
            }
            BucketError::ResidualConflict { node, colors, contenders } => write!(
                f,
                "node {node} finished descent with {colors} colors and {contenders} contenders"
            ),
            BucketError::GoodNodeInfeasible { node, iteration } => {
                write!(f, "good node {node} infeasible at iteration {iteration}")
            }
        }
    }
}

/// Bucket string width at level `i`: `floor(0.7 * 1.1^i)` bits.
/// Computed as `7 * 11^i / 10^(i+1)` in decimal digits, so the result
/// is exact for every level (the power-of-ten division is a digit
/// shift, never a rounding step).
pub fn bucket_width(i: u32) -> u32 {
    assert!(i <= 300, "level out of range");
    let mut digits = alloc::vec![7u32]; // little-endian decimal
    for _ in 0..i {
        let mut carry = 0u32;
        for d in digits.iter_mut() {
            let t = *d * 11 + carry;
            *d = t % 10;
            carry = t / 10;
        }
        while carry > 0 {
            digits.push(carry % 10);
            carry /= 10;
        }
    }
    let mut val = 0u64;
    for &d in digits.iter().skip(i as usize + 1).rev() {
        val = val * 10 + d as u64;
    }
    val as u32
}

/// Starting level of a degree-`d` node: `max(floor(log_1.1 log_2 d), 0)`.
pub fn level_of(d: usize) -> u32 {
    if d < 2 {
        return 0;
    }
    let t = mathx::log2(d as f64);
    if t <= 1.0 {
        return 0;
    }
    let l = libm::floor(libm::log(t) / libm::log(1.1));
    if l < 0.0 {
        0
    } else {
        l as u32
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct BucketAddress {
    pub level: u32,
    pub bits: BitStr,
}

impl BucketAddress {
    /// `other` lies in the subtree rooted at `self`.
    pub fn contains(&self, other: &BucketAddress) -> bool {
        self.level <= other.level && self.bits.is_prefix_of(&other.bits)
    }
}

/// Initial hash placement of nodes and palette colors.
#[derive(Clone, Debug)]
pub struct Assignment {
    pub node_addr: BTreeMap<u32, BucketAddress>,
    pub color_string: BTreeMap<u32, BitStr>,
    /// Full-length node strings, recorded for reproducibility.
    pub node_full: BTreeMap<u32, BitStr>,
    pub l_max: u32,
    /// Color string length, `b(l_max + 20)`.
    pub color_len: u32,
}

/// Union of live palettes, ascending.
pub fn color_universe(g: &Instance) -> Vec<u32> {
    let mut colors: Vec<u32> = Vec::new();
    for v in g.live_nodes() {
        colors.extend_from_slice(g.palette(v));
    }
    colors.sort_unstable();
    colors.dedup();
    colors
}

/// Hashes nodes (domain slot `v`) and colors (slot `offset + c`) to
/// their initial strings.
pub fn assign(g: &Instance, fam: &HashFamily, seed: &Seed, color_offset: u64) -> Assignment {
    let l_max = level_of(g.max_degree());
    let color_len = bucket_width(l_max + 20);
    let mut node_addr = BTreeMap::new();
    let mut node_full = BTreeMap::new();
    for v in g.live_nodes() {
        let level = level_of(g.degree(v));
        let full = fam.eval_bits(seed, v as u64, color_len).expect("range covers color_len");
        node_addr.insert(v, BucketAddress { level, bits: full.prefix(bucket_width(level)) });
        node_full.insert(v, full);
    }
    let mut color_string = BTreeMap::new();
    for c in color_universe(g) {
        let s = fam.eval_bits(seed, color_offset + c as u64, color_len).expect("in range");
        color_string.insert(c, s);
    }
    Assignment { node_addr, color_string, node_full, l_max, color_len }
}

/// Live neighbors strictly above `v` in the (degree, id) order; the
/// lower endpoint owns the edge in the reduced instances.
fn ups(g: &Instance, v: u32) -> Vec<u32> {
    let dv = g.degree(v);
    g.live_neighbors(v)
        .filter(|&u| (g.degree(u), u) > (dv, v))
        .collect()
}

/// Fresh recount of a node's subtree contenders and subtree palette:
/// `d⁺_h` counts good up-neighbors in the subtree of v's bucket, `p_h`
/// the palette colors whose string extends v's bucket string.
pub fn subtree_counts(
    g: &Instance,
    good: &[bool],
    addr: &BTreeMap<u32, BucketAddress>,
    color_string: &BTreeMap<u32, BitStr>,
    v: u32,
) -> (usize, usize) {
    let a = &addr[&v];
    let d_up = ups(g, v)
        .into_iter()
        .filter(|&u| good[u as usize] && a.contains(&addr[&u]))
        .count();
    let p_h = g
        .palette(v)
        .iter()
        .filter(|c| a.bits.is_prefix_of(&color_string[c]))
        .count();
    (d_up, p_h)
}

/// Nodes with a bad hash outcome, per the four concentration conditions.
pub fn classify_bad(g: &Instance, asg: &Assignment, n_net: usize) -> Vec<u32> {
    let nodes = g.live_nodes();
    let mut bucket_sizes: BTreeMap<&BucketAddress, usize> = BTreeMap::new();
    for v in &nodes {
        *bucket_sizes.entry(&asg.node_addr[v]).or_insert(0) += 1;
    }
    let mut bad = Vec::new();
    for &v in &nodes {
        let a = &asg.node_addr[&v];
        let d = g.degree(v);
        let p = g.palette(v).len();
        let b = a.bits.len();
        let shrink = mathx::powf(2.0, -(b as f64));
        let d_up: usize = ups(g, v).len();
        let d_up_h = ups(g, v)
            .into_iter()
            .filter(|u| a.contains(&asg.node_addr[u]))
            .count();
        let p_h = g
            .palette(v)
            .iter()
            .filter(|c| a.bits.is_prefix_of(&asg.color_string[c]))
            .count();
        let margin = 0.125 * mathx::deg_pow(d, 0.9);
        // (1) too many contenders landed in the subtree
        if mathx::ge(d_up_h as f64, (d_up as f64 + margin) * shrink) {
            bad.push(v);
            continue;
        }
        // (2) too few palette colors landed in the subtree
        if mathx::le(p_h as f64, (p as f64 - margin) * shrink) {
            bad.push(v);
            continue;
        }
        // (3) two palette colors collide 20 levels down
        let deep = bucket_width(level_of(d) + 20);
        let mut seen: Vec<BitStr> = Vec::new();
        let mut collide = false;
        for c in g.palette(v) {
            let s = &asg.color_string[c];
            if a.bits.is_prefix_of(s) {
                let t = s.prefix(deep);
                if seen.contains(&t) {
                    collide = true;
                    break;
                }
                seen.push(t);
            }
        }
        if collide {
            bad.push(v);
            continue;
        }
        // (4) overfull bucket
        if (bucket_sizes[a] as f64) > 2.0 * n_net as f64 * shrink + mathx::EPS {
            bad.push(v);
        }
    }
    bad
}

/// Seed cost for the derandomizer: total degree of bad nodes.
pub fn seed_cost(
    g: &Instance,
    fam: &HashFamily,
    seed: &Seed,
    color_offset: u64,
    n_net: usize,
) -> f64 {
    classify_bad(g, &assign(g, fam, seed, color_offset), n_net)
        .iter()
        .map(|&v| g.degree(v) as f64)
        .sum()
}

/// Per-bucket reduced instance: each good node sits in its own bucket;
/// each good edge is owned by its (degree, id)-lower endpoint and
/// appears there iff the other endpoint lies in the owner's subtree.
pub fn reduced_instances(
    g: &Instance,
    good: &[bool],
    addr: &BTreeMap<u32, BucketAddress>,
) -> BTreeMap<BucketAddress, (Vec<u32>, Vec<(u32, u32)>)> {
    let mut out: BTreeMap<BucketAddress, (Vec<u32>, Vec<(u32, u32)>)> = BTreeMap::new();
    for (&v, a) in addr {
        if !good[v as usize] {
            continue;
        }
        let entry = out.entry(a.clone()).or_default();
        entry.0.push(v);
        for u in ups(g, v) {
            if good[u as usize] && a.contains(&addr[&u]) {
                entry.1.push((v, u));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationStat {
    pub max_bucket_nodes: usize,
    pub max_bucket_edges: usize,
}

/// Moves every good node one level down into a child bucket that keeps
/// contenders strictly below colors.  Nodes are processed in
/// non-increasing (degree, id) order so each node's up-neighbors in its
/// own bucket have already moved; neighbors that started deeper are
/// read at their iteration-start address, exactly matching the
/// synchronous schedule.
pub fn descend_iteration(
    g: &Instance,
    good: &[bool],
    color_string: &BTreeMap<u32, BitStr>,
    addr: &mut BTreeMap<u32, BucketAddress>,
    iteration: u32,
) -> Result<IterationStat, BucketError> {
    let start = addr.clone();
    let mut order: Vec<u32> = start.keys().copied().filter(|&v| good[v as usize]).collect();
    order.sort_by_key(|&v| (usize::MAX - g.degree(v), u32::MAX - v));

    let stat = {
        let sizes = reduced_instances(g, good, &start);
        IterationStat {
            max_bucket_nodes: sizes.values().map(|e| e.0.len()).max().unwrap_or(0),
            max_bucket_edges: sizes.values().map(|e| e.1.len()).max().unwrap_or(0),
        }
    };

    for v in order {
        let here = start[&v].clone();
        let child_width = bucket_width(here.level + 1);
        let ext = child_width - here.bits.len();
        let neighbors = ups(g, v);
        let mut chosen = None;
        for e in 0..(1u64 << ext) {
            let cand = BucketAddress { level: here.level + 1, bits: here.bits.extend(e, ext) };
            let d_up = neighbors
                .iter()
                .filter(|&&u| {
                    if !good[u as usize] {
                        return false;
                    }
                    // same bucket: the neighbor has already moved; deeper
                    // buckets: use the iteration-start snapshot
                    let at = if start[&u] == here { &addr[&u] } else { &start[&u] };
                    cand.contains(at)
                })
                .count();
            let p = g
                .palette(v)
                .iter()
                .filter(|c| cand.bits.is_prefix_of(&color_string[c]))
                .count();
            if d_up < p {
                chosen = Some(cand);
                break;
            }
        }
        match chosen {
            Some(cand) => {
                addr.insert(v, cand);
            }
            None => return Err(BucketError::NoFeasibleChild { node: v, iteration }),
        }
    }
    Ok(stat)
}

/// After the descent each good node's bucket holds exactly one of its
/// palette colors and no contenders; returns that coloring.
pub fn finalize(
    g: &Instance,
    good: &[bool],
    color_string: &BTreeMap<u32, BitStr>,
    addr: &BTreeMap<u32, BucketAddress>,
) -> Result<Vec<(u32, u32)>, BucketError> {
    let mut out = Vec::new();
    for (&v, a) in addr {
        if !good[v as usize] {
            continue;
        }
        let (d_up, p_h) = subtree_counts(g, good, addr, color_string, v);
        if d_up != 0 || p_h != 1 {
            return Err(BucketError::ResidualConflict { node: v, colors: p_h, contenders: d_up });
        }
        let c = g
            .palette(v)
            .iter()
            .copied()
            .find(|c| a.bits.is_prefix_of(&color_string[c]))
            .expect("p_h = 1");
        out.push((v, c));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BucketOutcome {
    /// Conflict-free colors for all of g2 (good and bad nodes).
    pub coloring: Vec<(u32, u32)>,
    pub bad: Vec<u32>,
    pub bad_edges: usize,
    pub derand: DerandResult,
    pub iterations: Vec<IterationStat>,
    pub l_max: u32,
}

/// Full bucket stage: derandomized assignment, 20 descent iterations,
/// finalization, and greedy cleanup of the bad set.
pub fn run(g2: &Instance, n_net: usize, ctx: &mut StageCtx) -> Result<BucketOutcome, RunError> {
    let color_offset = n_net as u64;
    let max_color = g2.max_palette_color().map_or(0, |c| c as u64 + 1);
    let l_max = level_of(g2.max_degree());
    let color_len = bucket_width(l_max + 20);
    let fam = HashFamily::new(
        ctx.cfg.independence,
        (color_offset + max_color).max(1),
        color_len.max(1),
    )
    .map_err(RunError::Hash)?;

    let derand = ctx.derandomize("bucket/assign", &fam, &mut |s| {
        seed_cost(g2, &fam, s, color_offset, n_net)
    })?;
    let asg = assign(g2, &fam, &derand.seed, color_offset);
    let bad = classify_bad(g2, &asg, n_net);
    let mut good = alloc::vec![false; g2.n()];
    for v in g2.live_nodes() {
        good[v as usize] = true;
    }
    for &v in &bad {
        good[v as usize] = false;
    }

    let mut addr = asg.node_addr.clone();
    let mut iterations = Vec::with_capacity(ctx.cfg.descent_iterations as usize);
    for it in 0..ctx.cfg.descent_iterations {
        for (&v, _) in &addr {
            if good[v as usize] {
                let (d_up, p_h) = subtree_counts(g2, &good, &addr, &asg.color_string, v);
                if d_up >= p_h {
                    return Err(RunError::Bucket(BucketError::GoodNodeInfeasible {
                        node: v,
                        iteration: it,
                    }));
                }
            }
        }
        let stat = descend_iteration(g2, &good, &asg.color_string, &mut addr, it)
            .map_err(RunError::Bucket)?;
        let words = (stat.max_bucket_nodes + stat.max_bucket_edges) as u64;
        ctx.charge_capacity("bucket/iterate", Pattern::Collect { words })?;
        ctx.charge("bucket/iterate-announce", Pattern::Broadcast)?;
        iterations.push(stat);
    }
    let mut coloring =
        finalize(g2, &good, &asg.color_string, &addr).map_err(RunError::Bucket)?;

    // bad nodes: withdraw the committed colors, then collect and color
    // sequentially
    let mut snapshot = g2.clone();
    snapshot.apply_colors(&coloring).map_err(RunError::Apply)?;
    let bad_sub = snapshot.induced(&bad);
    let bad_edges = bad_sub.edge_count();
    ctx.charge_capacity(
        "bucket/collect-bad",
        Pattern::Collect { words: (bad.len() + bad_edges) as u64 },
    )?;
    let cleanup = bad_sub.greedy_assign().map_err(RunError::Greedy)?;
    snapshot.apply_colors(&cleanup).map_err(RunError::Apply)?;
    coloring.extend_from_slice(&cleanup);

    Ok(BucketOutcome { coloring, bad, bad_edges, derand, iterations, l_max })
}
