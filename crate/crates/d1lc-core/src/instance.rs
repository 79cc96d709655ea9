//! Graph instances with per-node color palettes.
//!
//! An instance is self-reducible: every uncolored node always holds at
//! least `deg + 1` palette colors, where `deg` counts its uncolored,
//! in-instance neighbors.  Coloring a node removes that color from the
//! palettes of its neighbors, which preserves the invariant.

use alloc::vec::Vec;
use core::fmt;

use crate::mathx;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuildError {
    NodeOutOfRange { node: u32, n: usize },
    SelfLoop { node: u32 },
    PaletteTooSmall { node: u32, palette: usize, degree: usize },
    PaletteCountMismatch { expected: usize, got: usize },
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::NodeOutOfRange { node, n } => {
                write!(f, "node {node} out of range for n={n}")
            }
            BuildError::SelfLoop { node } => write!(f, "self loop at node {node}"),
            BuildError::PaletteTooSmall { node, palette, degree } => {
                write!(f, "node {node} has palette {palette} < degree {degree} + 1")
            }
            BuildError::PaletteCountMismatch { expected, got } => {
                write!(f, "expected {expected} palettes, got {got}")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ApplyError {
    NotLive { node: u32 },
    ColorNotInPalette { node: u32, color: u32 },
    ConflictingAssignment { a: u32, b: u32, color: u32 },
    DuplicateNode { node: u32 },
}

impl fmt::Display for ApplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApplyError::NotLive { node } => {
                write!(f, "node {node} is already colored or not in the instance")
            }
            ApplyError::ColorNotInPalette { node, color } => {
                write!(f, "color {color} not in the palette of node {node}")
            }
            ApplyError::ConflictingAssignment { a, b, color } => {
                write!(f, "adjacent nodes {a} and {b} both assigned color {color}")
            }
            ApplyError::DuplicateNode { node } => {
                write!(f, "node {node} assigned twice in one batch")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GreedyError {
    /// A node ran out of palette colors; cannot happen while the
    /// self-reducibility invariant holds.
    NoColorLeft { node: u32 },
}

impl fmt::Display for GreedyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreedyError::NoColorLeft { node } => write!(f, "no free color for node {node}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Violation {
    Uncolored { node: u32 },
    ColorOutsidePalette { node: u32, color: u32 },
    MonochromaticEdge { a: u32, b: u32, color: u32 },
}

/// Result of checking a (partial) coloring against the original palettes.
#[derive(Clone, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerificationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Split of a node's live neighborhood by relative degree.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NeighborPartition {
    /// Neighbors `u` with `deg(u) >= deg(v)`.
    pub up: Vec<u32>,
    /// Neighbors `u` with `deg(u) < deg(v)`.
    pub down: Vec<u32>,
    /// Neighbors `u` with `deg(u) >= 3 deg(v)`.
    pub heavy: Vec<u32>,
    /// Neighbors `u` with `deg(v)/2 <= deg(u) <= 6 deg(v)`.
    pub similar: Vec<u32>,
}

/// A list-coloring instance over nodes `0..n`.
///
/// Sub-instances produced by [`Instance::induced`] keep the global node
/// ids and simply deactivate the rest; degrees and edge counts always
/// refer to live (active, uncolored) nodes.
#[derive(Clone, Debug)]
pub struct Instance {
    n: usize,
    adj: Vec<Vec<u32>>,
    palettes: Vec<Vec<u32>>,
    original_palettes: Vec<Vec<u32>>,
    colors: Vec<Option<u32>>,
    active: Vec<bool>,
}

impl Instance {
    pub fn build(
        n: usize,
        edges: &[(u32, u32)],
        palettes: Vec<Vec<u32>>,
    ) -> Result<Instance, BuildError> {
        if palettes.len() != n {
            return Err(BuildError::PaletteCountMismatch { expected: n, got: palettes.len() });
        }
        let mut adj: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(BuildError::NodeOutOfRange { node: w, n });
                }
            }
            if u == v {
                return Err(BuildError::SelfLoop { node: u });
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut palettes = palettes;
        for p in &mut palettes {
            p.sort_unstable();
            p.dedup();
        }
        let inst = Instance {
            n,
            original_palettes: palettes.clone(),
            palettes,
            colors: alloc::vec![None; n],
            active: alloc::vec![true; n],
            adj,
        };
        for v in 0..n {
            let d = inst.degree(v as u32);
            if inst.palettes[v].len() < d + 1 {
                return Err(BuildError::PaletteTooSmall {
                    node: v as u32,
                    palette: inst.palettes[v].len(),
                    degree: d,
                });
            }
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Node is in the instance and still uncolored.
    pub fn is_live(&self, v: u32) -> bool {
        self.active[v as usize] && self.colors[v as usize].is_none()
    }

    pub fn color_of(&self, v: u32) -> Option<u32> {
        self.colors[v as usize]
    }

    /// Live nodes in ascending id order.
    pub fn live_nodes(&self) -> Vec<u32> {
        (0..self.n as u32).filter(|&v| self.is_live(v)).collect()
    }

    pub fn live_count(&self) -> usize {
        (0..self.n as u32).filter(|&v| self.is_live(v)).count()
    }

    pub fn live_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[v as usize].iter().copied().filter(|&u| self.is_live(u))
    }

    /// Number of live neighbors of `v`.
    pub fn degree(&self, v: u32) -> usize {
        self.live_neighbors(v).count()
    }

    pub fn max_degree(&self) -> usize {
        self.live_nodes().iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }

    /// Edges between live nodes.
    pub fn edge_count(&self) -> usize {
        let mut twice = 0usize;
        for v in self.live_nodes() {
            twice += self.degree(v);
        }
        twice / 2
    }

    pub fn palette(&self, v: u32) -> &[u32] {
        &self.palettes[v as usize]
    }

    pub fn original_palette(&self, v: u32) -> &[u32] {
        &self.original_palettes[v as usize]
    }

    /// Largest color id appearing in any live palette, or `None` if empty.
    pub fn max_palette_color(&self) -> Option<u32> {
        self.live_nodes()
            .iter()
            .filter_map(|&v| self.palettes[v as usize].last().copied())
            .max()
    }

    /// Restriction to `keep` (only live members are retained).
    pub fn induced(&self, keep: &[u32]) -> Instance {
        let mut out = self.clone();
        out.active = alloc::vec![false; self.n];
        for &v in keep {
            if self.is_live(v) {
                out.active[v as usize] = true;
            }
        }
        out
    }

    pub fn neighbor_partition(&self, v: u32) -> NeighborPartition {
        let dv = self.degree(v);
        let mut part = NeighborPartition::default();
        for u in self.live_neighbors(v) {
            let du = self.degree(u);
            if du >= dv {
                part.up.push(u);
            } else {
                part.down.push(u);
            }
            if du >= 3 * dv {
                part.heavy.push(u);
            }
            if 2 * du >= dv && du <= 6 * dv {
                part.similar.push(u);
            }
        }
        part
    }

    /// Commits a batch of colors.  The batch must be internally
    /// conflict-free; on success the assigned colors are withdrawn from
    /// neighboring palettes, keeping the instance self-reducible.
    pub fn apply_colors(&mut self, assignments: &[(u32, u32)]) -> Result<(), ApplyError> {
        let mut chosen: Vec<Option<u32>> = alloc::vec![None; self.n];
        for &(v, c) in assignments {
            if !self.is_live(v) {
                return Err(ApplyError::NotLive { node: v });
            }
            if chosen[v as usize].is_some() {
                return Err(ApplyError::DuplicateNode { node: v });
            }
            if self.palettes[v as usize].binary_search(&c).is_err() {
                return Err(ApplyError::ColorNotInPalette { node: v, color: c });
            }
            chosen[v as usize] = Some(c);
        }
        for &(v, c) in assignments {
            for u in self.adj[v as usize].iter().copied() {
                if u > v && chosen[u as usize] == Some(c) {
                    return Err(ApplyError::ConflictingAssignment { a: v, b: u, color: c });
                }
            }
        }
        for &(v, c) in assignments {
            self.colors[v as usize] = Some(c);
        }
        for &(v, c) in assignments {
            for u in self.adj[v as usize].clone() {
                if self.is_live(u) {
                    if let Ok(i) = self.palettes[u as usize].binary_search(&c) {
                        self.palettes[u as usize].remove(i);
                    }
                }
            }
        }
        debug_assert!(self
            .live_nodes()
            .iter()
            .all(|&v| self.palettes[v as usize].len() >= self.degree(v) + 1));
        Ok(())
    }

    /// Checks the committed colors against the *original* palettes.
    /// Active uncolored nodes are reported as violations.
    pub fn verify(&self) -> VerificationReport {
        let mut violations = Vec::new();
        for v in 0..self.n as u32 {
            if !self.active[v as usize] {
                continue;
            }
            match self.colors[v as usize] {
                None => violations.push(Violation::Uncolored { node: v }),
                Some(c) => {
                    if self.original_palettes[v as usize].binary_search(&c).is_err() {
                        violations.push(Violation::ColorOutsidePalette { node: v, color: c });
                    }
                    for u in self.adj[v as usize].iter().copied() {
                        if u > v && self.active[u as usize] && self.colors[u as usize] == Some(c) {
                            violations.push(Violation::MonochromaticEdge { a: v, b: u, color: c });
                        }
                    }
                }
            }
        }
        VerificationReport { ok: violations.is_empty(), violations }
    }

    /// Sequential greedy list coloring of every live node.  Nodes are
    /// processed by non-increasing degree (ties: ascending id) and take
    /// the smallest palette color unused in their neighborhood.  Returns
    /// the assignment without committing it.
    pub fn greedy_assign(&self) -> Result<Vec<(u32, u32)>, GreedyError> {
        let mut order = self.live_nodes();
        order.sort_by_key(|&v| (usize::MAX - self.degree(v), v));
        let mut picked: Vec<Option<u32>> = alloc::vec![None; self.n];
        let mut out = Vec::with_capacity(order.len());
        for v in order {
            let c = self.palettes[v as usize]
                .iter()
                .copied()
                .find(|&c| self.live_neighbors(v).all(|u| picked[u as usize] != Some(c)))
                .ok_or(GreedyError::NoColorLeft { node: v })?;
            picked[v as usize] = Some(c);
            out.push((v, c));
        }
        Ok(out)
    }

    /// Shrinks every live palette to `max(deg + 1, ceil(1.25 deg))`
    /// colors (at least one), keeping the smallest color ids.
    pub fn trim_palettes(&mut self) {
        for v in self.live_nodes() {
            let d = self.degree(v);
            let keep = (d + 1).max((5 * d + 3) / 4).max(1);
            self.palettes[v as usize].truncate(keep);
        }
    }

    /// Palette slack test used after subsampling: a node is fine if its
    /// palette exceeds its degree by `deg^0.9 / 4`, or if at least a third
    /// of its neighborhood has strictly smaller degree.
    pub fn has_slack(&self, v: u32) -> bool {
        let d = self.degree(v);
        let p = self.palettes[v as usize].len();
        if mathx::ge(p as f64, d as f64 + 0.25 * mathx::deg_pow(d, 0.9)) {
            return true;
        }
        let down = self.live_neighbors(v).filter(|&u| self.degree(u) < d).count();
        mathx::ge(down as f64, d as f64 / 3.0)
    }
}
