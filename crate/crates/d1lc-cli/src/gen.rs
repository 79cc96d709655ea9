//! Deterministic instance generators for benchmarks and tests.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::InstanceFile;

#[derive(Clone, Debug, PartialEq)]
pub enum GenError {
    InvalidSpec(String),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::InvalidSpec(why) => write!(f, "invalid generator spec: {why}"),
        }
    }
}

impl std::error::Error for GenError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// G(n, p): each pair independently an edge.
    Gnp { p: f64 },
    /// Random d-regular graph (configuration model with retries).
    DRegular { d: usize },
    /// Chung–Lu power-law degrees with the given exponent and target
    /// average degree.
    PowerLaw { exponent: f64, avg_degree: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PaletteModel {
    /// Node v receives colors {0, ..., deg(v)}.
    Fresh,
    /// Node v receives deg(v)+1 distinct colors from a shared universe.
    Shared { universe: u32 },
}

#[derive(Clone, Copy, Debug)]
pub struct GenSpec {
    pub n: usize,
    pub model: Model,
    pub palette: PaletteModel,
    pub seed: u64,
}

impl GenSpec {
    /// Parses a compact spec like `gnp,n=64,p=0.1,palette=shared:128`.
    pub fn parse(text: &str, seed: u64) -> Result<GenSpec, GenError> {
        let mut parts = text.split(',');
        let model_name = parts.next().unwrap_or("").trim();
        let mut n = None;
        let mut p = None;
        let mut d = None;
        let mut exponent = None;
        let mut avg = None;
        let mut palette = PaletteModel::Fresh;
        for kv in parts {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| GenError::InvalidSpec(format!("expected key=value, got {kv:?}")))?;
            macro_rules! parsed {
                () => {
                    value.parse().map_err(|_| {
                        GenError::InvalidSpec(format!("bad value for {key}: {value:?}"))
                    })?
                };
            }
            match key.trim() {
                "n" => n = Some(parsed!()),
                "p" => p = Some(parsed!()),
                "d" => d = Some(parsed!()),
                "exponent" => exponent = Some(parsed!()),
                "avg" => avg = Some(parsed!()),
                "palette" => {
                    palette = match value.split_once(':') {
                        None if value == "fresh" => PaletteModel::Fresh,
                        Some(("shared", u)) => PaletteModel::Shared {
                            universe: u.parse().map_err(|_| {
                                GenError::InvalidSpec(format!("bad universe size {u:?}"))
                            })?,
                        },
                        _ => {
                            return Err(GenError::InvalidSpec(format!(
                                "unknown palette model {value:?}"
                            )))
                        }
                    }
                }
                other => return Err(GenError::InvalidSpec(format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| GenError::InvalidSpec("missing n".into()))?;
        let model = match model_name {
            "gnp" => Model::Gnp { p: p.ok_or_else(|| GenError::InvalidSpec("gnp needs p".into()))? },
            "dregular" => Model::DRegular {
                d: d.ok_or_else(|| GenError::InvalidSpec("dregular needs d".into()))?,
            },
            "powerlaw" => Model::PowerLaw {
                exponent: exponent
                    .ok_or_else(|| GenError::InvalidSpec("powerlaw needs exponent".into()))?,
                avg_degree: avg.unwrap_or(4.0),
            },
            other => return Err(GenError::InvalidSpec(format!("unknown model {other:?}"))),
        };
        Ok(GenSpec { n, model, palette, seed })
    }
}

pub fn generate(spec: &GenSpec) -> Result<InstanceFile, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = match spec.model {
        Model::Gnp { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::InvalidSpec(format!("p = {p} outside [0, 1]")));
            }
            gnp(spec.n, p, &mut rng)
        }
        Model::DRegular { d } => dregular(spec.n, d, &mut rng)?,
        Model::PowerLaw { exponent, avg_degree } => {
            if exponent <= 1.0 {
                return Err(GenError::InvalidSpec(format!("exponent {exponent} must exceed 1")));
            }
            powerlaw(spec.n, exponent, avg_degree, &mut rng)
        }
    };
    let mut degrees = vec![0u32; spec.n];
    for &(u, v) in &edges {
        degrees[u as usize] += 1;
        degrees[v as usize] += 1;
    }
    let palettes = palettes(&degrees, spec.palette, &mut rng)?;
    Ok(InstanceFile { n: spec.n, edges, palettes })
}

fn gnp(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

fn dregular(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(u32, u32)>, GenError> {
    if d >= n || n * d % 2 != 0 {
        return Err(GenError::InvalidSpec(format!("no {d}-regular graph on {n} nodes")));
    }
    // circulant start, then randomize by degree-preserving 2-switches
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * d / 2);
    for k in 1..=(d / 2) as u32 {
        for v in 0..n as u32 {
            edges.push((v, (v + k) % n as u32));
        }
    }
    if d % 2 == 1 {
        // n is even here (n·d is even)
        for v in 0..(n / 2) as u32 {
            edges.push((v, v + (n / 2) as u32));
        }
    }
    let norm = |u: u32, v: u32| (u.min(v), u.max(v));
    let mut seen: std::collections::BTreeSet<(u32, u32)> =
        edges.iter().map(|&(u, v)| norm(u, v)).collect();
    if seen.len() != edges.len() {
        return Err(GenError::InvalidSpec(format!("no simple circulant for n={n}, d={d}")));
    }
    for _ in 0..10 * edges.len() {
        let i = rng.gen_range(0..edges.len());
        let j = rng.gen_range(0..edges.len());
        let (a, b) = edges[i];
        let (c, e) = edges[j];
        if a == c || a == e || b == c || b == e {
            continue;
        }
        let x = norm(a, e);
        let y = norm(c, b);
        if seen.contains(&x) || seen.contains(&y) {
            continue;
        }
        seen.remove(&norm(a, b));
        seen.remove(&norm(c, e));
        seen.insert(x);
        seen.insert(y);
        edges[i] = x;
        edges[j] = y;
    }
    Ok(edges)
}

fn powerlaw(n: usize, exponent: f64, avg: f64, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    // Chung–Lu: edge probability proportional to the endpoint weights
    let alpha = 1.0 / (exponent - 1.0);
    let raw: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-alpha)).collect();
    let sum: f64 = raw.iter().sum();
    let cap = 2.0 * (n as f64).sqrt();
    let weights: Vec<f64> = raw.iter().map(|w| (w * avg * n as f64 / sum).min(cap)).collect();
    let total: f64 = weights.iter().sum();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = (weights[u] * weights[v] / total).min(1.0);
            if rng.gen_bool(p) {
                edges.push((u as u32, v as u32));
            }
        }
    }
    edges
}

fn palettes(
    degrees: &[u32],
    model: PaletteModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<u32>>, GenError> {
    match model {
        PaletteModel::Fresh => Ok(degrees.iter().map(|&d| (0..=d).collect()).collect()),
        PaletteModel::Shared { universe } => {
            let need = degrees.iter().max().copied().unwrap_or(0) + 1;
            if universe < need {
                return Err(GenError::InvalidSpec(format!(
                    "shared universe of {universe} colors cannot cover degree {}",
                    need - 1
                )));
            }
            Ok(degrees
                .iter()
                .map(|&d| {
                    let mut pool: Vec<u32> = (0..universe).collect();
                    pool.partial_shuffle(rng, d as usize + 1);
                    let mut picked: Vec<u32> = pool[..d as usize + 1].to_vec();
                    picked.sort_unstable();
                    picked
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec::parse("gnp,n=64,p=0.1", 7).unwrap();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn dregular_degrees_and_palettes() {
        let spec = GenSpec::parse("dregular,n=10,d=3", 3).unwrap();
        let inst = generate(&spec).unwrap();
        let mut deg = vec![0usize; 10];
        for &(u, v) in &inst.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        assert!(deg.iter().all(|&d| d == 3));
        assert!(inst.palettes.iter().all(|p| p.len() == 4));
    }

    #[test]
    fn shared_universe_too_small_is_rejected() {
        let spec = GenSpec::parse("dregular,n=8,d=6,palette=shared:6", 1).unwrap();
        assert!(matches!(generate(&spec), Err(GenError::InvalidSpec(_))));
    }

    #[test]
    fn generated_instances_are_valid() {
        for (text, seed) in [
            ("gnp,n=40,p=0.1,palette=shared:64", 5u64),
            ("powerlaw,n=40,exponent=2.5,avg=3", 9),
            ("dregular,n=20,d=5", 2),
        ] {
            let inst = generate(&GenSpec::parse(text, seed).unwrap()).unwrap();
            inst.to_instance().unwrap(); // build validates p >= d + 1
        }
    }
}
