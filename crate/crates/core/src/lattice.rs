//! Lattice graphs, the registry of named lattice families, union-find
//! connectivity and percolation threshold constants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Honeycomb,
    Square,
    Triangular,
    Cubic,
    Bcc,
    Custom,
}

impl LatticeKind {
    pub const REGULAR: [LatticeKind; 6] = [
        LatticeKind::Chain,
        LatticeKind::Honeycomb,
        LatticeKind::Square,
        LatticeKind::Triangular,
        LatticeKind::Cubic,
        LatticeKind::Bcc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Chain => "chain",
            LatticeKind::Honeycomb => "honeycomb",
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Cubic => "cubic",
            LatticeKind::Bcc => "bcc",
            LatticeKind::Custom => "custom",
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        std::iter::once(LatticeKind::Custom)
            .chain(LatticeKind::REGULAR)
            .find(|k| k.name() == lower)
            .ok_or(Error::UnknownLattice(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercolationMode {
    Bond,
    Site,
}

impl fmt::Display for PercolationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PercolationMode::Bond => "bond",
            PercolationMode::Site => "site",
        })
    }
}

/// Sites `0..n_sites` with undirected bonds stored as `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGraph {
    kind: LatticeKind,
    dims: Vec<usize>,
    boundary: Boundary,
    n_sites: usize,
    bonds: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
}

impl LatticeGraph {
    /// Builds a graph from an explicit bond list, rejecting self-loops,
    /// duplicates and out-of-range sites.
    pub fn from_bonds(
        kind: LatticeKind,
        dims: Vec<usize>,
        boundary: Boundary,
        n_sites: usize,
        bonds: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for (a, b) in bonds {
            if a >= n_sites || b >= n_sites {
                return Err(Error::UnsupportedLattice(format!(
                    "bond ({a}, {b}) references a site outside 0..{n_sites}"
                )));
            }
            if a == b {
                return Err(Error::UnsupportedLattice(format!("self-loop at site {a}")));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::UnsupportedLattice(format!(
                    "duplicate bond ({}, {})",
                    key.0, key.1
                )));
            }
            list.push(key);
        }
        let mut neighbors = vec![Vec::new(); n_sites];
        let mut incident = vec![Vec::new(); n_sites];
        for (idx, &(a, b)) in list.iter().enumerate() {
            neighbors[a].push(b);
            neighbors[b].push(a);
            incident[a].push(idx);
            incident[b].push(idx);
        }
        Ok(Self {
            kind,
            dims,
            boundary,
            n_sites,
            bonds: list,
            neighbors,
            incident,
        })
    }

    /// A custom graph from an edge list: one `i j` pair per line, `#` comments allowed.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut bonds = Vec::new();
        let mut n_sites = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            if fields.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected two site indices",
                    lineno + 1
                )));
            }
            let (a, b) = (parse(fields[0])?, parse(fields[1])?);
            n_sites = n_sites.max(a + 1).max(b + 1);
            bonds.push((a, b));
        }
        Self::from_bonds(
            LatticeKind::Custom,
            vec![n_sites],
            Boundary::Open,
            n_sites,
            bonds,
        )
    }

    /// Star graph: site 0 joined to `arms` leaves.
    pub fn star(arms: usize) -> Result<Self> {
        Self::from_bonds(
            LatticeKind::Custom,
            vec![arms + 1],
            Boundary::Open,
            arms + 1,
            (1..=arms).map(|k| (0, k)),
        )
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    /// Bond indices touching `site`, in increasing order.
    pub fn incident_bonds(&self, site: usize) -> &[usize] {
        &self.incident[site]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.neighbors[site].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_sites).map(|s| self.degree(s)).collect()
    }

    /// Bond indices in lexicographic `(min site, max site)` order.
    pub fn lexicographic_bond_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.bonds.len()).collect();
        order.sort_by_key(|&b| self.bonds[b]);
        order
    }
}

/// Serializable lattice description, e.g. `{"kind":"square","dims":[4,4],"boundary":"open"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<LatticeGraph> {
        build_lattice(self.kind, &self.dims, self.boundary)
    }
}

/// One lattice family. Implementations are registered by name in a [`LatticeRegistry`].
pub trait LatticeFamily: Send + Sync {
    fn kind(&self) -> LatticeKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    fn coordination(&self) -> usize;

    /// Number of extents expected by [`LatticeFamily::build`].
    fn n_dims(&self) -> usize;

    /// Site count and bond list for the given extents.
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)>;

    fn bond_threshold(&self) -> Option<f64>;

    fn site_threshold(&self) -> Option<f64>;

    fn build(&self, dims: &[usize], boundary: Boundary) -> Result<LatticeGraph> {
        if dims.len() != self.n_dims() {
            return Err(Error::UnsupportedLattice(format!(
                "{} needs {} extents, got {}",
                self.name(),
                self.n_dims(),
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::UnsupportedLattice("extents must be at least 1".into()));
        }
        let (n_sites, bonds) = self.bonds(dims, boundary)?;
        LatticeGraph::from_bonds(self.kind(), dims.to_vec(), boundary, n_sites, bonds)
    }
}

fn require_periodic_extent(name: &str, dims: &[usize], min: usize) -> Result<()> {
    if let Some(&d) = dims.iter().find(|&&d| d < min) {
        return Err(Error::UnsupportedLattice(format!(
            "periodic {name} needs every extent >= {min}, got {d}"
        )));
    }
    Ok(())
}

/// Neighbour of `x` shifted by `step` along an axis of length `len`.
fn shift(x: usize, step: usize, len: usize, boundary: Boundary) -> Option<usize> {
    let y = x + step;
    if y < len {
        Some(y)
    } else if boundary == Boundary::Periodic {
        Some(y % len)
    } else {
        None
    }
}

/// Bonds of a hypercubic grid along the given offset vectors, row-major site order.
fn grid_bonds(dims: &[usize], boundary: Boundary, offsets: &[&[usize]]) -> Vec<(usize, usize)> {
    let n: usize = dims.iter().product();
    let index = |coords: &[usize]| coords.iter().zip(dims).fold(0, |acc, (&c, &d)| acc * d + c);
    let mut bonds = Vec::new();
    let mut coords = vec![0; dims.len()];
    for site in 0..n {
        let mut rem = site;
        for axis in (0..dims.len()).rev() {
            coords[axis] = rem % dims[axis];
            rem /= dims[axis];
        }
        'offset: for off in offsets {
            let mut target = coords.clone();
            for axis in 0..dims.len() {
                if off[axis] == 0 {
                    continue;
                }
                match shift(coords[axis], off[axis], dims[axis], boundary) {
                    Some(t) => target[axis] = t,
                    None => continue 'offset,
                }
            }
            bonds.push((site, index(&target)));
        }
    }
    bonds
}

struct Chain;
struct Square;
struct Triangular;
struct Honeycomb;
struct Cubic;
struct Bcc;

impl LatticeFamily for Chain {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Chain
    }
    fn coordination(&self) -> usize {
        2
    }
    fn n_dims(&self) -> usize {
        1
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        if boundary == Boundary::Periodic {
            require_periodic_extent("chain", dims, 3)?;
        }
        Ok((dims[0], grid_bonds(dims, boundary, &[&[1]])))
    }
    fn bond_threshold(&self) -> Option<f64> {
        None
    }
    fn site_threshold(&self) -> Option<f64> {
        None
    }
}

impl LatticeFamily for Square {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Square
    }
    fn coordination(&self) -> usize {
        4
    }
    fn n_dims(&self) -> usize {
        2
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        if boundary == Boundary::Periodic {
            require_periodic_extent("square", dims, 3)?;
        }
        Ok((dims[0] * dims[1], grid_bonds(dims, boundary, &[&[1, 0], &[0, 1]])))
    }
    fn bond_threshold(&self) -> Option<f64> {
        Some(0.5)
    }
    fn site_threshold(&self) -> Option<f64> {
        Some(0.592_746)
    }
}

impl LatticeFamily for Triangular {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Triangular
    }
    fn coordination(&self) -> usize {
        6
    }
    fn n_dims(&self) -> usize {
        2
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        if boundary == Boundary::Periodic {
            require_periodic_extent("triangular", dims, 3)?;
        }
        Ok((
            dims[0] * dims[1],
            grid_bonds(dims, boundary, &[&[1, 0], &[0, 1], &[1, 1]]),
        ))
    }
    fn bond_threshold(&self) -> Option<f64> {
        Some(2.0 * (std::f64::consts::PI / 18.0).sin())
    }
    fn site_threshold(&self) -> Option<f64> {
        Some(0.5)
    }
}

/// Brick-wall embedding: every row is a path, and site `(x, y)` is joined
/// to `(x, y + 1)` when `x + y` is even.
impl LatticeFamily for Honeycomb {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Honeycomb
    }
    fn coordination(&self) -> usize {
        3
    }
    fn n_dims(&self) -> usize {
        2
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        let (lx, ly) = (dims[0], dims[1]);
        if boundary == Boundary::Periodic {
            require_periodic_extent("honeycomb", dims, 3)?;
            if ly % 2 != 0 {
                return Err(Error::UnsupportedLattice(
                    "periodic honeycomb needs an even second extent".into(),
                ));
            }
        }
        let mut bonds = Vec::new();
        for x in 0..lx {
            for y in 0..ly {
                let site = x * ly + y;
                if let Some(nx) = shift(x, 1, lx, boundary) {
                    bonds.push((site, nx * ly + y));
                }
                if (x + y) % 2 == 0 {
                    if let Some(ny) = shift(y, 1, ly, boundary) {
                        bonds.push((site, x * ly + ny));
                    }
                }
            }
        }
        Ok((lx * ly, bonds))
    }
    fn bond_threshold(&self) -> Option<f64> {
        Some(1.0 - 2.0 * (std::f64::consts::PI / 18.0).sin())
    }
    fn site_threshold(&self) -> Option<f64> {
        Some(0.697_040_2)
    }
}

impl LatticeFamily for Cubic {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Cubic
    }
    fn coordination(&self) -> usize {
        6
    }
    fn n_dims(&self) -> usize {
        3
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        if boundary == Boundary::Periodic {
            require_periodic_extent("cubic", dims, 3)?;
        }
        Ok((
            dims.iter().product(),
            grid_bonds(dims, boundary, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]),
        ))
    }
    fn bond_threshold(&self) -> Option<f64> {
        Some(0.2488)
    }
    fn site_threshold(&self) -> Option<f64> {
        Some(0.3116)
    }
}

/// Corner sites come first in row-major order, then one body-centre site per cell.
impl LatticeFamily for Bcc {
    fn kind(&self) -> LatticeKind {
        LatticeKind::Bcc
    }
    fn coordination(&self) -> usize {
        8
    }
    fn n_dims(&self) -> usize {
        3
    }
    fn bonds(&self, dims: &[usize], boundary: Boundary) -> Result<(usize, Vec<(usize, usize)>)> {
        if boundary == Boundary::Periodic {
            require_periodic_extent("bcc", dims, 2)?;
        }
        let cells: usize = dims.iter().product();
        let corner = |c: [usize; 3]| (c[0] * dims[1] + c[1]) * dims[2] + c[2];
        let mut bonds = Vec::new();
        for x in 0..dims[0] {
            for y in 0..dims[1] {
                for z in 0..dims[2] {
                    let body = cells + corner([x, y, z]);
                    for off in 0..8usize {
                        let step = [off & 1, (off >> 1) & 1, (off >> 2) & 1];
                        let target = [
                            shift(x, step[0], dims[0], boundary),
                            shift(y, step[1], dims[1], boundary),
                            shift(z, step[2], dims[2], boundary),
                        ];
                        if let [Some(a), Some(b), Some(c)] = target {
                            bonds.push((body, corner([a, b, c])));
                        }
                    }
                }
            }
        }
        Ok((2 * cells, bonds))
    }
    fn bond_threshold(&self) -> Option<f64> {
        Some(0.180_287_5)
    }
    fn site_threshold(&self) -> Option<f64> {
        Some(0.245_956_5)
    }
}

/// Name-keyed collection of lattice families.
pub struct LatticeRegistry {
    families: BTreeMap<&'static str, Box<dyn LatticeFamily>>,
}

impl LatticeRegistry {
    pub fn empty() -> Self {
        Self {
            families: BTreeMap::new(),
        }
    }

    /// Chain, honeycomb, square, triangular, cubic and bcc.
    pub fn standard() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Chain));
        reg.register(Box::new(Honeycomb));
        reg.register(Box::new(Square));
        reg.register(Box::new(Triangular));
        reg.register(Box::new(Cubic));
        reg.register(Box::new(Bcc));
        reg
    }

    pub fn register(&mut self, family: Box<dyn LatticeFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn get(&self, name: &str) -> Result<&dyn LatticeFamily> {
        self.families
            .get(name.trim().to_ascii_lowercase().as_str())
            .map(|f| f.as_ref())
            .ok_or_else(|| Error::UnknownLattice(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }
}

/// Shared instance of [`LatticeRegistry::standard`].
pub fn registry() -> &'static LatticeRegistry {
    static REGISTRY: OnceLock<LatticeRegistry> = OnceLock::new();
    REGISTRY.get_or_init(LatticeRegistry::standard)
}

pub fn build_lattice(kind: LatticeKind, dims: &[usize], boundary: Boundary) -> Result<LatticeGraph> {
    if kind == LatticeKind::Custom {
        return Err(Error::UnsupportedLattice(
            "custom lattices are read from an edge list".into(),
        ));
    }
    registry().get(kind.name())?.build(dims, boundary)
}

pub fn coordination(kind: LatticeKind) -> Result<usize> {
    if kind == LatticeKind::Custom {
        return Err(Error::NoCoordination);
    }
    Ok(registry().get(kind.name())?.coordination())
}

/// Editable bond and site percolation thresholds, keyed by lattice kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub bond: BTreeMap<LatticeKind, f64>,
    pub site: BTreeMap<LatticeKind, f64>,
}

impl Default for ThresholdTable {
    fn default() -> Self {
        Self::from_registry(registry())
    }
}

impl ThresholdTable {
    pub fn from_registry(reg: &LatticeRegistry) -> Self {
        let mut bond = BTreeMap::new();
        let mut site = BTreeMap::new();
        for name in reg.names() {
            let fam = reg.get(name).expect("registered");
            if let Some(p) = fam.bond_threshold() {
                bond.insert(fam.kind(), p);
            }
            if let Some(p) = fam.site_threshold() {
                site.insert(fam.kind(), p);
            }
        }
        Self { bond, site }
    }

    pub fn get(&self, kind: LatticeKind, mode: PercolationMode) -> Result<f64> {
        let table = match mode {
            PercolationMode::Bond => &self.bond,
            PercolationMode::Site => &self.site,
        };
        table
            .get(&kind)
            .copied()
            .ok_or_else(|| Error::MissingThreshold {
                kind: kind.to_string(),
                mode: mode.to_string(),
            })
    }

    pub fn set(&mut self, kind: LatticeKind, mode: PercolationMode, value: f64) -> Result<()> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::OutOfRange(format!(
                "threshold {value} outside (0, 1)"
            )));
        }
        match mode {
            PercolationMode::Bond => self.bond.insert(kind, value),
            PercolationMode::Site => self.site.insert(kind, value),
        };
        Ok(())
    }
}

/// Threshold from the default table.
pub fn threshold(kind: LatticeKind, mode: PercolationMode) -> Result<f64> {
    ThresholdTable::default().get(kind, mode)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Cluster label per site. Labels are `0..n_clusters`, assigned in order of
/// each cluster's lowest site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    pub representative: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ClusterPartition {
    pub fn n_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Sites of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (site, &c) in self.representative.iter().enumerate() {
            out[c].push(site);
        }
        out
    }
}

pub fn connected_clusters(graph: &LatticeGraph, active: &[bool]) -> Result<ClusterPartition> {
    if active.len() != graph.n_bonds() {
        return Err(Error::LengthMismatch {
            expected: graph.n_bonds(),
            got: active.len(),
        });
    }
    let mut uf = UnionFind::new(graph.n_sites());
    for (&(a, b), &on) in graph.bonds().iter().zip(active) {
        if on {
            uf.union(a, b);
        }
    }
    let mut label = vec![usize::MAX; graph.n_sites()];
    let mut representative = Vec::with_capacity(graph.n_sites());
    let mut sizes = Vec::new();
    for site in 0..graph.n_sites() {
        let root = uf.find(site);
        if label[root] == usize::MAX {
            label[root] = sizes.len();
            sizes.push(0);
        }
        representative.push(label[root]);
        sizes[label[root]] += 1;
    }
    Ok(ClusterPartition {
        representative,
        sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn site_and_bond_counts() {
        let g = build_lattice(LatticeKind::Square, &[2, 2], Boundary::Open).unwrap();
        assert_eq!((g.n_sites(), g.n_bonds()), (4, 4));
        let g = build_lattice(LatticeKind::Cubic, &[3, 3, 3], Boundary::Periodic).unwrap();
        assert_eq!((g.n_sites(), g.n_bonds()), (27, 81));
        let g = build_lattice(LatticeKind::Chain, &[3], Boundary::Open).unwrap();
        assert_eq!((g.n_sites(), g.n_bonds()), (3, 2));
    }

    #[test]
    fn periodic_regular_degrees() {
        let cases: [(LatticeKind, &[usize]); 6] = [
            (LatticeKind::Chain, &[5]),
            (LatticeKind::Honeycomb, &[4, 6]),
            (LatticeKind::Square, &[4, 5]),
            (LatticeKind::Triangular, &[4, 4]),
            (LatticeKind::Cubic, &[3, 4, 3]),
            (LatticeKind::Bcc, &[2, 3, 2]),
        ];
        for (kind, dims) in cases {
            let g = build_lattice(kind, dims, Boundary::Periodic).unwrap();
            let d = coordination(kind).unwrap();
            assert!(g.degrees().iter().all(|&x| x == d), "{kind}");
            assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.n_bonds());
        }
    }

    #[test]
    fn coordination_numbers() {
        assert_eq!(coordination(LatticeKind::Honeycomb).unwrap(), 3);
        assert_eq!(coordination(LatticeKind::Cubic).unwrap(), 6);
        assert_eq!(coordination(LatticeKind::Triangular).unwrap(), 6);
        assert_eq!(coordination(LatticeKind::Square).unwrap(), 4);
        assert_eq!(coordination(LatticeKind::Bcc).unwrap(), 8);
        assert_eq!(coordination(LatticeKind::Chain).unwrap(), 2);
        assert_eq!(coordination(LatticeKind::Custom), Err(Error::NoCoordination));
    }

    #[test]
    fn bad_shapes_are_rejected() {
        assert!(build_lattice(LatticeKind::Cubic, &[3, 3], Boundary::Open).is_err());
        assert!(build_lattice(LatticeKind::Square, &[0, 3], Boundary::Open).is_err());
        assert!(build_lattice(LatticeKind::Square, &[2, 2], Boundary::Periodic).is_err());
        assert!(build_lattice(LatticeKind::Honeycomb, &[4, 3], Boundary::Periodic).is_err());
        assert!(LatticeGraph::from_bonds(
            LatticeKind::Custom,
            vec![3],
            Boundary::Open,
            3,
            [(0, 1), (1, 0)]
        )
        .is_err());
    }

    #[test]
    fn threshold_constants() {
        let t = ThresholdTable::default();
        assert_eq!(t.get(LatticeKind::Square, PercolationMode::Bond).unwrap(), 0.5);
        let s = (std::f64::consts::PI / 18.0).sin();
        assert_eq!(t.get(LatticeKind::Honeycomb, PercolationMode::Bond).unwrap(), 1.0 - 2.0 * s);
        assert!((t.get(LatticeKind::Honeycomb, PercolationMode::Bond).unwrap() - 0.652704).abs() < 1e-6);
        assert_eq!(t.get(LatticeKind::Triangular, PercolationMode::Bond).unwrap(), 2.0 * s);
        assert_eq!(t.get(LatticeKind::Cubic, PercolationMode::Bond).unwrap(), 0.2488);
        assert_eq!(t.get(LatticeKind::Cubic, PercolationMode::Site).unwrap(), 0.3116);
        for v in t.bond.values().chain(t.site.values()) {
            assert!(*v > 0.0 && *v < 1.0);
        }
        assert!(matches!(
            t.get(LatticeKind::Chain, PercolationMode::Bond),
            Err(Error::MissingThreshold { .. })
        ));
    }

    #[test]
    fn cluster_examples() {
        let g = build_lattice(LatticeKind::Square, &[2, 2], Boundary::Open).unwrap();
        let p = connected_clusters(&g, &[false; 4]).unwrap();
        assert_eq!(p.sizes, vec![1; 4]);
        let p = connected_clusters(&g, &[true; 4]).unwrap();
        assert_eq!(p.sizes, vec![4]);
        let chain = build_lattice(LatticeKind::Chain, &[3], Boundary::Open).unwrap();
        let p = connected_clusters(&chain, &[true, false]).unwrap();
        assert_eq!(p.sizes, vec![2, 1]);
        assert!(connected_clusters(&chain, &[true]).is_err());
    }

    #[test]
    fn edge_list_and_spec_parsing() {
        let g = LatticeGraph::parse_edge_list("# ring\n0 1\n1 2\n2 0\n").unwrap();
        assert_eq!((g.n_sites(), g.n_bonds()), (3, 3));
        assert!(LatticeGraph::parse_edge_list("0 1 2\n").is_err());
        let spec: LatticeSpec =
            serde_json::from_str(r#"{"kind":"square","dims":[3,3],"boundary":"open"}"#).unwrap();
        assert_eq!(spec.build().unwrap().n_bonds(), 12);
        let spec: LatticeSpec = serde_json::from_str(r#"{"kind":"cubic","dims":[3,3,3]}"#).unwrap();
        assert_eq!(spec.boundary, Boundary::Periodic);
    }

    fn random_graph() -> impl Strategy<Value = (LatticeGraph, Vec<bool>, usize)> {
        (3usize..7, 3usize..7, any::<u64>()).prop_flat_map(|(lx, ly, _)| {
            let g = build_lattice(LatticeKind::Square, &[lx, ly], Boundary::Periodic).unwrap();
            let n = g.n_bonds();
            (Just(g), proptest::collection::vec(any::<bool>(), n), 0..n)
        })
    }

    proptest! {
        #[test]
        fn partition_properties((g, mask, extra) in random_graph()) {
            let p = connected_clusters(&g, &mask).unwrap();
            prop_assert_eq!(p.sizes.iter().sum::<usize>(), g.n_sites());
            for (b, &(i, j)) in g.bonds().iter().enumerate() {
                if mask[b] {
                    prop_assert_eq!(p.representative[i], p.representative[j]);
                }
            }
            let again = connected_clusters(&g, &mask).unwrap();
            prop_assert_eq!(&again, &p);
            let mut more = mask.clone();
            more[extra] = true;
            let q = connected_clusters(&g, &more).unwrap();
            prop_assert!(q.n_clusters() <= p.n_clusters());
        }
    }
}
