//! Acceptance gate: one test per shipped guarantee.  Each test prints a
//! single pass line; a failed assertion is the corresponding red line.
//!
//! Criteria 1, 3, 4, 5 and 6 share one instance grid (576 runs) built
//! once in `suite()`.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use d1lc_cli::gen::{generate, GenSpec, Model, PaletteModel};
use d1lc_core::bits::Seed;
use d1lc_core::bucket;
use d1lc_core::derand::{derandomize_exact, DerandMode, SplitMix64};
use d1lc_core::driver::{color, DerandPolicy, RunConfig, RunReport, ROUND_BUDGET};
use d1lc_core::hash::HashFamily;
use d1lc_core::instance::Instance;
use d1lc_core::{subsample, trial};

struct SuiteRun {
    label: String,
    report: RunReport,
}

struct Suite {
    runs: Vec<SuiteRun>,
    elapsed: Duration,
}

fn grid_models(n: usize) -> Vec<(String, Model)> {
    vec![
        (format!("gnp,p=4/{n}"), Model::Gnp { p: 4.0 / n as f64 }),
        (format!("gnp,p=8/{n}"), Model::Gnp { p: 8.0 / n as f64 }),
        ("gnp,p=0.1".into(), Model::Gnp { p: 0.1 }),
        ("dregular,d=3".into(), Model::DRegular { d: 3 }),
        ("dregular,d=5".into(), Model::DRegular { d: 5 }),
        ("dregular,d=8".into(), Model::DRegular { d: 8 }),
    ]
}

/// 6 sizes x 6 models x 2 palette models x 2 base-case thresholds x
/// 4 seeds = 576 runs, all under the default exact-first policy.
fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let mut runs = Vec::new();
        for &n in &[16usize, 32, 64, 128, 256, 512] {
            for (model_tag, model) in grid_models(n) {
                for shared in [false, true] {
                    let palette = if shared {
                        PaletteModel::Shared { universe: n as u32 }
                    } else {
                        PaletteModel::Fresh
                    };
                    for &kappa in &[4.0f64, 0.5] {
                        for seed in 0..4u64 {
                            let spec = GenSpec {
                                n,
                                model: model.clone(),
                                palette: palette.clone(),
                                seed: seed * 1000 + n as u64,
                            };
                            let g = generate(&spec)
                                .expect("generator")
                                .to_instance()
                                .expect("well-formed instance");
                            let cfg = RunConfig { base_kappa: kappa, ..RunConfig::default() };
                            let label = format!(
                                "n={n},{model_tag},shared={shared},kappa={kappa},seed={seed}"
                            );
                            let run = color(&g, &cfg)
                                .unwrap_or_else(|e| panic!("{label}: {e:?}"));
                            runs.push(SuiteRun { label, report: run.report });
                        }
                    }
                }
            }
        }
        Suite { runs, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_01_correctness_suite() {
    let s = suite();
    assert!(s.runs.len() >= 500, "grid too small: {}", s.runs.len());
    for r in &s.runs {
        assert!(
            r.report.verification.ok,
            "{}: {:?}",
            r.label,
            r.report.verification.violations.first()
        );
    }
    assert!(
        s.elapsed <= Duration::from_secs(300),
        "suite took {:?}, budget is 5 minutes",
        s.elapsed
    );
    println!(
        "criterion 01 correctness: pass ({} runs verified in {:?})",
        s.runs.len(),
        s.elapsed
    );
}

/// Random instance for the derandomization contract: small enough that
/// a k=2, 6-bit-output family has a 14-bit seed space (p = 67).
fn contract_instance(seed: u64, regular: bool) -> Instance {
    let n = 8 + 2 * (seed as usize % 13); // 8..=32, even for d-regular
    let spec = GenSpec {
        n,
        model: if regular { Model::DRegular { d: 3 } } else { Model::Gnp { p: 0.25 } },
        palette: PaletteModel::Fresh,
        seed: 0xc0ffee ^ seed,
    };
    generate(&spec).unwrap().to_instance().unwrap()
}

/// Exhaustive family mean computed independently of the derandomizer.
fn oracle_mean(bits: u32, cost: &mut dyn FnMut(&Seed) -> f64) -> f64 {
    let total = 1u64 << bits;
    (0..total).map(|i| cost(&Seed::from_index(bits, i))).sum::<f64>() / total as f64
}

fn assert_beats_mean(fam: &HashFamily, cost: &mut dyn FnMut(&Seed) -> f64, what: &str) {
    assert!(fam.seed_bits() <= 18, "{what}: seed space too large");
    let r = derandomize_exact(fam, cost, fam.chunk_bits(), 1 << 18).unwrap();
    assert_eq!(r.mode, DerandMode::Exact);
    let mean = oracle_mean(fam.seed_bits(), cost);
    assert!(
        (r.family_mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()),
        "{what}: reported mean {} vs oracle {mean}",
        r.family_mean
    );
    assert!(
        r.achieved_cost <= mean + 1e-9,
        "{what}: chosen cost {} above family mean {mean}",
        r.achieved_cost
    );
}

#[test]
fn criterion_02_derandomization_contract() {
    for i in 0..50u64 {
        let g = contract_instance(i, false);
        let n = g.n() as u64;
        let fam = HashFamily::new(2, n, 6).unwrap();

        assert_beats_mean(&fam, &mut |s| trial::nomination_cost(&g, &fam, s), "nomination");

        let nom_seed = derandomize_exact(
            &fam,
            &mut |s| trial::nomination_cost(&g, &fam, s),
            fam.chunk_bits(),
            1 << 18,
        )
        .unwrap()
        .seed;
        let nominated = trial::nominate(&g, &fam, &nom_seed);
        let nom_failed = trial::nomination_failures(&g, &nominated);
        assert_beats_mean(
            &fam,
            &mut |s| trial::coloring_cost(&g, &fam, s, &nominated, &nom_failed),
            "coloring",
        );

        assert_beats_mean(&fam, &mut |s| subsample::seed_cost(&g, &fam, s, 0), "subsample");

        // buckets use their own family: domain covers node ids plus the
        // shifted color universe, output width is the full color string
        let gb = contract_instance(i, true);
        let nb = gb.n();
        let color_len =
            bucket::bucket_width(bucket::level_of(gb.max_degree()) + 20).max(1);
        let domain = nb as u64 + gb.max_palette_color().map_or(0, |c| c as u64 + 1);
        let famb = HashFamily::new(2, domain.max(1), color_len).unwrap();
        assert_beats_mean(
            &famb,
            &mut |s| bucket::seed_cost(&gb, &famb, s, nb as u64, nb),
            "bucket",
        );
    }
    println!("criterion 02 derandomization contract: pass (50 instances x 4 cost functions)");
}

#[test]
fn criterion_03_subsample_slack() {
    let s = suite();
    let mut levels = 0usize;
    for r in &s.runs {
        for l in &r.report.levels {
            assert!(l.slack_ok, "{}: slack violation at level x={}", r.label, l.x_tenths);
            levels += 1;
        }
    }
    println!("criterion 03 subsample slack: pass ({levels} levels recounted)");
}

#[test]
fn criterion_04_bucket_invariants() {
    // feasibility of good nodes and child existence are asserted inside
    // every descent iteration, and the terminal p_h = 1, d+_h = 0 state
    // is asserted on finalization; any breach aborts the run.  The grid
    // completing error-free with 20 recorded iterations per level is
    // therefore the zero-exception certificate.
    let s = suite();
    let mut iterations = 0usize;
    for r in &s.runs {
        for l in &r.report.levels {
            if !l.base_case {
                assert_eq!(
                    l.bucket_iterations.len(),
                    20,
                    "{}: level x={} ran a short descent",
                    r.label,
                    l.x_tenths
                );
                iterations += l.bucket_iterations.len();
            }
        }
    }
    println!("criterion 04 bucket invariants: pass ({iterations} iterations, zero exceptions)");
}

#[test]
fn criterion_05_subsample_potential() {
    let s = suite();
    let mut levels = 0usize;
    for r in &s.runs {
        for l in &r.report.levels {
            assert!(
                l.potential_after <= l.potential_bound + 1e-6,
                "{}: level x={} deferred potential {} exceeds bound {}",
                r.label,
                l.x_tenths,
                l.potential_after,
                l.potential_bound
            );
            levels += 1;
        }
    }
    println!("criterion 05 subsample potential: pass ({levels} levels)");
}

#[test]
fn criterion_06_recursion_depth() {
    let s = suite();
    let max_depth = s.runs.iter().map(|r| r.report.depth).max().unwrap();
    for r in &s.runs {
        assert!(r.report.depth <= 10, "{}: depth {}", r.label, r.report.depth);
    }
    println!("criterion 06 recursion depth: pass (max depth {max_depth} <= 10)");
}

#[test]
fn criterion_07_round_constancy() {
    let cfg = RunConfig {
        palette_floor: 16,
        base_kappa: 0.5,
        independence: 4,
        derand: DerandPolicy::Exact,
        ..RunConfig::default()
    };
    let mut totals = Vec::new();
    for &n in &[64usize, 128, 256, 512] {
        let spec = GenSpec {
            n,
            model: Model::Gnp { p: 8.0 / n as f64 },
            palette: PaletteModel::Fresh,
            seed: 7 + n as u64,
        };
        let g = generate(&spec).unwrap().to_instance().unwrap();
        let run = color(&g, &cfg).unwrap();
        assert!(run.report.verification.ok);
        totals.push((n, run.report.total_rounds));
    }
    let rounds = totals[0].1;
    for &(n, t) in &totals {
        assert_eq!(t, rounds, "n={n} diverged from the fixed schedule");
    }
    assert!(rounds <= ROUND_BUDGET, "{rounds} rounds exceed budget {ROUND_BUDGET}");
    println!("criterion 07 round constancy: pass ({rounds} rounds for n=64..512, budget {ROUND_BUDGET})");
}

#[test]
fn criterion_08_hash_exactness() {
    // (k, p, range_bits) with p forced by domain = p
    for &(k, p, range_bits) in &[(2u32, 5u64, 2u32), (2, 7, 2), (3, 11, 3)] {
        let fam = HashFamily::new(k, p, range_bits).unwrap();
        assert_eq!(fam.prime(), p);
        let inputs: Vec<u64> = (0..p).collect();
        let report = fam.independence_test(&inputs, 1 << 22).unwrap();
        assert!(report.exact, "k={k} p={p}: tuple distribution not uniform");
        assert_eq!(report.coefficient_space, p.pow(k));
        // analytic residue counts for the fold v -> v mod 2^range_bits
        let mut expect = vec![0u64; 1 << range_bits];
        for v in 0..p {
            expect[(v % (1 << range_bits)) as usize] += 1;
        }
        assert_eq!(report.bit_histogram, expect, "k={k} p={p}: fold histogram");
    }
    println!("criterion 08 hash exactness: pass (k-wise uniform, fold bias analytic)");
}

fn bucket_width_ref(i: u32) -> u32 {
    // floor(0.7 * 1.1^i) = floor(7 * 11^i / 10^(i+1)), exactly
    let num = BigUint::from(7u32) * BigUint::from(11u32).pow(i);
    let den = BigUint::from(10u32).pow(i + 1);
    u32::try_from(num / den).unwrap()
}

fn level_of_ref(d: usize) -> u32 {
    if d < 2 {
        return 0;
    }
    let l = ((d as f64).log2()).ln() / 1.1f64.ln();
    if l < 0.0 {
        0
    } else {
        l.floor() as u32
    }
}

#[test]
fn criterion_09_schedule_tables() {
    for i in 0..=60u32 {
        assert_eq!(bucket::bucket_width(i), bucket_width_ref(i), "width at i={i}");
    }
    let mut rng = SplitMix64::new(0x5eed_7ab1e);
    for _ in 0..10_000 {
        let d = (rng.next_u64() % (1 << 20)) as usize;
        assert_eq!(bucket::level_of(d), level_of_ref(d), "level at d={d}");
    }
    for d in 0..64usize {
        assert_eq!(bucket::level_of(d), level_of_ref(d), "level at d={d}");
    }
    println!("criterion 09 schedule tables: pass (widths 0..=60, 10^4 sampled levels)");
}

/// All graphs on up to `n_max` nodes, one representative per
/// isomorphism class (canonical = lexicographically smallest edge mask
/// under relabeling).
fn unlabeled_graphs(n_max: usize) -> Vec<(usize, Vec<(u32, u32)>)> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        heap_permutations(&mut idx, n, &mut perms);
        let slot = |i: usize, j: usize| {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            pairs.iter().position(|&p| p == (a, b)).unwrap()
        };
        for mask in 0u32..1 << pairs.len() {
            let canonical = perms
                .iter()
                .map(|perm| {
                    let mut m = 0u32;
                    for (s, &(i, j)) in pairs.iter().enumerate() {
                        if mask >> s & 1 == 1 {
                            m |= 1 << slot(perm[i], perm[j]);
                        }
                    }
                    m
                })
                .min()
                .unwrap();
            if canonical == mask {
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| mask >> s & 1 == 1)
                    .map(|(_, &(i, j))| (i as u32, j as u32))
                    .collect();
                out.push((n, edges));
            }
        }
    }
    out
}

fn heap_permutations(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(idx.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(idx, k - 1, out);
        if k % 2 == 0 {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Every complete proper coloring from the original palettes, by
/// backtracking.  Feasible by self-reducibility, tiny for n <= 6.
fn brute_force_colorings(g: &Instance) -> Vec<Vec<u32>> {
    let n = g.n();
    let adj: Vec<Vec<usize>> = (0..n as u32)
        .map(|v| g.live_neighbors(v).map(|u| u as usize).collect())
        .collect();
    let mut chosen = vec![u32::MAX; n];
    let mut out = Vec::new();
    fn go(
        v: usize,
        g: &Instance,
        adj: &[Vec<usize>],
        chosen: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if v == g.n() {
            out.push(chosen.clone());
            return;
        }
        for &c in g.original_palette(v as u32) {
            if adj[v].iter().all(|&u| u >= v || chosen[u] != c) {
                chosen[v] = c;
                go(v + 1, g, adj, chosen, out);
            }
        }
        chosen[v] = u32::MAX;
    }
    go(0, g, &adj, &mut chosen, &mut out);
    out
}

#[test]
fn criterion_10_micro_oracle() {
    let graphs = unlabeled_graphs(6);
    assert_eq!(graphs.len(), 1 + 2 + 4 + 11 + 34 + 156, "graph census");
    // force the full pipeline on every input: no greedy floor, no base
    // case, sampled seed search, full 20-iteration descent
    let cfg = RunConfig {
        palette_floor: 1,
        base_kappa: 0.0,
        derand: DerandPolicy::Sampled(4),
        ..RunConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xdecade);
    let universe: Vec<u32> = (0..12).collect();
    let mut case = 0usize;
    let mut cross_checked = 0usize;
    for (n, edges) in &graphs {
        let mut deg = vec![0usize; *n];
        for &(u, v) in edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        for _ in 0..200 {
            let palettes: Vec<Vec<u32>> = deg
                .iter()
                .map(|&d| {
                    let size = d + 1 + rng.gen_range(0..=2);
                    let mut pool = universe.clone();
                    pool.shuffle(&mut rng);
                    let mut p: Vec<u32> = pool[..size].to_vec();
                    p.sort_unstable();
                    p
                })
                .collect();
            let g = Instance::build(*n, edges, palettes).unwrap();
            let run = color(&g, &cfg).unwrap();
            assert!(
                run.report.verification.ok,
                "n={n} edges={edges:?}: {:?}",
                run.report.verification.violations.first()
            );
            if case % 97 == 0 {
                let produced: Vec<u32> = (0..*n as u32)
                    .map(|v| run.instance.color_of(v).unwrap())
                    .collect();
                let all: BTreeSet<Vec<u32>> =
                    brute_force_colorings(&g).into_iter().collect();
                assert!(
                    all.contains(&produced),
                    "n={n} edges={edges:?}: output not among the {} proper colorings",
                    all.len()
                );
                cross_checked += 1;
            }
            case += 1;
        }
    }
    println!(
        "criterion 10 micro oracle: pass ({case} runs, {cross_checked} cross-checked against brute force)"
    );
}
