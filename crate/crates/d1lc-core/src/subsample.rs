//! Degree-based subsampling between the trial and bucket stages.
//!
//! Every node joins a deferred set S with probability `deg^-0.1`; nodes
//! with small palettes (L) or without enough post-sampling slack (F₁)
//! are deferred too.  The remainder G₂ is colored right away by bucket
//! descent, while G' = S ∪ F₁ ∪ L recurses with the potential exponent
//! advanced by 0.1, so ten levels always suffice.

use alloc::vec::Vec;

use crate::bits::Seed;
use crate::derand::DerandResult;
use crate::driver::{RunError, StageCtx};
use crate::hash::HashFamily;
use crate::instance::Instance;
use crate::mathx;

/// Join threshold on the hash value: `round(R * d^-0.1)` out of
/// `R = 2^range_bits`.  Degree-0 nodes never join.
pub fn join_threshold(range_bits: u32, d: usize) -> u64 {
    if d == 0 {
        return 0;
    }
    let r = (1u64 << range_bits) as f64;
    libm::round(r * mathx::powf(d as f64, -0.1)) as u64
}

/// Nodes of `g` joining S under `seed`.
pub fn sample_s(g: &Instance, fam: &HashFamily, seed: &Seed) -> Vec<u32> {
    g.live_nodes()
        .into_iter()
        .filter(|&v| fam.eval(seed, v as u64) < join_threshold(fam.range_bits(), g.degree(v)))
        .collect()
}

/// Nodes failing the sampling slack test: success requires palette
/// `>= 1.1 deg`, or a small similar-degree neighborhood, or at least
/// `p^0.9 / 4` neighbors joining S.
pub fn classify_failures(g: &Instance, s_set: &[u32]) -> Vec<u32> {
    let mut in_s = alloc::vec![false; g.n()];
    for &v in s_set {
        in_s[v as usize] = true;
    }
    let mut failed = Vec::new();
    for v in g.live_nodes() {
        let d = g.degree(v) as f64;
        let p = g.palette(v).len() as f64;
        if mathx::ge(p, 1.1 * d) {
            continue;
        }
        let similar = g
            .live_neighbors(v)
            .filter(|&u| {
                let du = g.degree(u);
                2 * du >= g.degree(v) && du <= 6 * g.degree(v)
            })
            .count();
        if mathx::le(similar as f64, d / 3.0) {
            continue;
        }
        let joined = g.live_neighbors(v).filter(|&u| in_s[u as usize]).count();
        if mathx::ge(joined as f64, 0.25 * mathx::powf(p, 0.9)) {
            continue;
        }
        failed.push(v);
    }
    failed
}

/// Seed cost: `sum of deg^(x+0.1)` over nodes that fail or join.
pub fn seed_cost(g: &Instance, fam: &HashFamily, seed: &Seed, x_tenths: u32) -> f64 {
    let e = (x_tenths as f64 + 1.0) / 10.0;
    let s = sample_s(g, fam, seed);
    let mut charged = alloc::vec![false; g.n()];
    for &v in s.iter().chain(classify_failures(g, &s).iter()) {
        charged[v as usize] = true;
    }
    g.live_nodes()
        .into_iter()
        .filter(|&v| charged[v as usize])
        .map(|v| mathx::deg_pow(g.degree(v), e))
        .sum()
}

#[derive(Clone, Debug)]
pub struct SubsampleOutcome {
    /// Nodes colored now by bucket descent.
    pub g2: Instance,
    /// Deferred nodes, recursed at exponent x + 0.1.
    pub gprime: Instance,
    pub s_set: Vec<u32>,
    pub f1_set: Vec<u32>,
    /// Small-palette nodes (fewer than C colors), always deferred.
    pub l_set: Vec<u32>,
    /// Nodes demoted from G₂ to F₁ by the residual slack check.
    pub slack_demoted: Vec<u32>,
    pub derand: DerandResult,
    /// `sum of deg^x` over the input.
    pub potential_before: f64,
    /// `sum of deg^(x+0.1)` over the deferred nodes (input degrees).
    pub potential_after: f64,
}

/// Runs subsampling on `g1` at recursion exponent `x = x_tenths / 10`.
pub fn run(g1: &Instance, x_tenths: u32, ctx: &mut StageCtx) -> Result<SubsampleOutcome, RunError> {
    debug_assert!(x_tenths <= 9);
    let l_set: Vec<u32> = g1
        .live_nodes()
        .into_iter()
        .filter(|&v| g1.palette(v).len() < ctx.cfg.palette_floor)
        .collect();
    let body = {
        let mut keep = g1.live_nodes();
        keep.retain(|v| !l_set.contains(v));
        g1.induced(&keep)
    };

    let fam = HashFamily::new(ctx.cfg.independence, g1.n().max(1) as u64, ctx.cfg.range_bits)
        .map_err(RunError::Hash)?;
    let derand =
        ctx.derandomize("subsample/join", &fam, &mut |s| seed_cost(&body, &fam, s, x_tenths))?;
    let s_set = sample_s(&body, &fam, &derand.seed);
    let mut f1_set = classify_failures(&body, &s_set);

    let mut g2_nodes: Vec<u32> = body.live_nodes();
    g2_nodes.retain(|v| !s_set.contains(v) && !f1_set.contains(v));

    // residual slack: every G₂ node must satisfy the palette-excess or
    // small-N⁻ disjunct within G₂ itself; violators defer instead
    let mut slack_demoted = Vec::new();
    loop {
        let g2 = g1.induced(&g2_nodes);
        let violators: Vec<u32> =
            g2_nodes.iter().copied().filter(|&v| !g2.has_slack(v)).collect();
        if violators.is_empty() {
            break;
        }
        g2_nodes.retain(|v| !violators.contains(v));
        f1_set.extend_from_slice(&violators);
        slack_demoted.extend_from_slice(&violators);
    }
    f1_set.sort_unstable();

    let mut gprime_nodes: Vec<u32> = s_set.clone();
    gprime_nodes.extend_from_slice(&f1_set);
    gprime_nodes.extend_from_slice(&l_set);
    gprime_nodes.sort_unstable();
    gprime_nodes.dedup();

    let e_before = x_tenths as f64 / 10.0;
    let e_after = e_before + 0.1;
    let potential_before: f64 =
        g1.live_nodes().iter().map(|&v| mathx::deg_pow(g1.degree(v), e_before)).sum();
    let potential_after: f64 =
        gprime_nodes.iter().map(|&v| mathx::deg_pow(g1.degree(v), e_after)).sum();

    Ok(SubsampleOutcome {
        g2: g1.induced(&g2_nodes),
        gprime: g1.induced(&gprime_nodes),
        s_set,
        f1_set,
        l_set,
        slack_demoted,
        derand,
        potential_before,
        potential_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_half_range_at_degree_1024() {
        assert_eq!(join_threshold(20, 1024), 1u64 << 19);
        assert_eq!(join_threshold(12, 1024), 1u64 << 11);
    }

    #[test]
    fn degree_one_always_joins_and_degree_zero_never() {
        assert_eq!(join_threshold(8, 1), 256); // every hash value is below
        assert_eq!(join_threshold(8, 0), 0);
        let g = Instance::build(
            3,
            &[(0, 1)],
            alloc::vec![alloc::vec![0, 1], alloc::vec![0, 1], alloc::vec![0]],
        )
        .unwrap();
        let fam = HashFamily::new(2, 3, 8).unwrap();
        for idx in [0u64, 1, 99, 511] {
            let seed = Seed::from_index(fam.seed_bits(), idx);
            let s = sample_s(&g, &fam, &seed);
            assert!(s.contains(&0) && s.contains(&1));
            assert!(!s.contains(&2));
        }
    }

    #[test]
    fn empirical_join_rate_tracks_degree() {
        // star: center degree 8, leaves degree 1
        let edges: Vec<(u32, u32)> = (1..9).map(|v| (0u32, v)).collect();
        let palettes: Vec<Vec<u32>> = (0..9).map(|_| (0..9).collect()).collect();
        let g = Instance::build(9, &edges, palettes).unwrap();
        let fam = HashFamily::new(2, 9, 6).unwrap(); // p = 67, 14 seed bits
        let total = 1u64 << fam.seed_bits();
        let joins = (0..total)
            .filter(|&i| sample_s(&g, &fam, &Seed::from_index(fam.seed_bits(), i)).contains(&0))
            .count() as f64;
        let expect = mathx::powf(8.0, -0.1);
        // quantization error 1/R plus the fold bias of p=67 into 6 bits
        assert!((joins / total as f64 - expect).abs() < 0.06);
    }

    #[test]
    fn boundary_classification() {
        // v with similar-degree neighborhood exactly a third of its
        // degree succeeds regardless of S
        // p(0) = 4 >= 1.1 * 3, so node 0 succeeds on the palette clause
        let edges = [(0u32, 1u32), (0, 2), (0, 3)];
        let palettes: Vec<Vec<u32>> = (0..4).map(|_| (0..4).collect()).collect();
        let g = Instance::build(4, &edges, palettes).unwrap();
        assert!(classify_failures(&g, &[]).is_empty());
    }
}
