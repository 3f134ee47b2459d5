//! Site tables, tessellations and seams.
//!
//! Sites are enumerated row-major over cell coordinates (last axis fastest)
//! with the parity bits innermost. Along a split axis the odd site of a cell
//! sits at the lower coordinate and the even site at `+a0`; the next cell
//! starts at `a0 + a1`. Each site also carries an integer *global*
//! coordinate per axis, `2 * cell + parity` along split axes and `cell`
//! otherwise, used for seams and for geometric checks.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Dimer,
    Tetramer,
    Octamer,
}

impl UnitKind {
    /// Number of axes carrying a dual lattice constant.
    pub fn split_axes(self) -> usize {
        match self {
            UnitKind::Dimer => 1,
            UnitKind::Tetramer => 2,
            UnitKind::Octamer => 3,
        }
    }

    pub fn sites_per_cell(self) -> usize {
        1 << self.split_axes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub cells: Vec<usize>,
    /// Intra-cell spacing per axis (μm).
    pub intra: Vec<f64>,
    /// Inter-cell spacing per axis (μm). Ignored on unsplit axes.
    pub inter: Vec<f64>,
    pub unit: UnitKind,
    /// Keep only the first `truncate` sites of a 1D chain, allowing odd
    /// site counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<usize>,
}

impl LatticeSpec {
    pub fn new(unit: UnitKind, cells: &[usize], intra: &[f64], inter: &[f64]) -> Self {
        LatticeSpec {
            dimension: cells.len(),
            cells: cells.to_vec(),
            intra: intra.to_vec(),
            inter: inter.to_vec(),
            unit,
            truncate: None,
        }
    }

    /// Lattice with every spacing equal to `a`.
    pub fn uniform(unit: UnitKind, cells: &[usize], a: f64) -> Self {
        let d = cells.len();
        Self::new(unit, cells, &vec![a; d], &vec![a; d])
    }

    /// 1D dimer chain.
    pub fn chain(dimers: usize, a0: f64, a1: f64) -> Self {
        Self::new(UnitKind::Dimer, &[dimers], &[a0], &[a1])
    }

    /// 1D chain of exactly `sites` sites (odd counts allowed).
    pub fn chain_sites(sites: usize, a0: f64, a1: f64) -> Self {
        let mut s = Self::chain(sites.div_ceil(2), a0, a1);
        if sites % 2 == 1 {
            s.truncate = Some(sites);
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(1..=3).contains(&self.dimension) {
            return bad(format!("dimension {} not in 1..=3", self.dimension));
        }
        for (name, len) in [("cells", self.cells.len()), ("intra", self.intra.len()), ("inter", self.inter.len())] {
            if len != self.dimension {
                return bad(format!("{name} has {len} entries for dimension {}", self.dimension));
            }
        }
        if let Some(axis) = self.cells.iter().position(|&c| c == 0) {
            return bad(format!("zero cells on axis {axis}"));
        }
        for (axis, (&a0, &a1)) in self.intra.iter().zip(&self.inter).enumerate() {
            if !(a0.is_finite() && a0 > 0.0) || !(a1.is_finite() && a1 > 0.0) {
                return bad(format!("non-positive lattice constant on axis {axis}"));
            }
        }
        if self.unit.split_axes() > self.dimension {
            return bad(format!("{:?} cells need at least {} dimensions", self.unit, self.unit.split_axes()));
        }
        if let Some(n) = self.truncate {
            if self.dimension != 1 {
                return bad("truncation is only defined for 1D chains".into());
            }
            if n == 0 || n > 2 * self.cells[0] {
                return bad(format!("cannot truncate {} sites to {n}", 2 * self.cells[0]));
            }
        }
        Ok(())
    }

    /// Dimensionless position of the inter-cell bond, `a1 / (a0 + a1)`, along `axis`.
    pub fn inter_fraction(&self, axis: usize) -> f64 {
        self.inter[axis] / (self.intra[axis] + self.inter[axis])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Odd,
    Even,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Odd => "o",
            Parity::Even => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub position: [f64; 3],
    pub cell: [usize; 3],
    /// Parity bit per split axis; bit `a` set means even along axis `a`.
    pub bits: u8,
}

#[derive(Debug, Clone)]
pub struct SiteTable {
    spec: LatticeSpec,
    dims: [usize; 3],
    split: usize,
    sites: Vec<Site>,
}

pub fn build_lattice(spec: &LatticeSpec) -> Result<SiteTable> {
    spec.validate()?;
    let mut dims = [1usize; 3];
    dims[..spec.dimension].copy_from_slice(&spec.cells);
    let split = spec.unit.split_axes();
    let per_cell = 1usize << split;
    let total = spec.truncate.unwrap_or(dims.iter().product::<usize>() * per_cell);

    let mut table = SiteTable { spec: spec.clone(), dims, split, sites: Vec::with_capacity(total) };
    'outer: for cx in 0..dims[0] {
        for cy in 0..dims[1] {
            for cz in 0..dims[2] {
                for bits in 0..per_cell as u8 {
                    if table.sites.len() == total {
                        break 'outer;
                    }
                    let cell = [cx, cy, cz];
                    let c = cell.map(|v| v as i64);
                    table.sites.push(Site { position: table.position_of(c, bits), cell, bits });
                }
            }
        }
    }
    Ok(table)
}

impl SiteTable {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn cells(&self) -> [usize; 3] {
        self.dims
    }

    pub fn split_axes(&self) -> usize {
        self.split
    }

    pub fn is_split(&self, axis: usize) -> bool {
        axis < self.split
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    /// Parity along `axis`, `None` on unsplit axes.
    pub fn parity(&self, i: usize, axis: usize) -> Option<Parity> {
        self.is_split(axis).then(|| if self.sites[i].bits >> axis & 1 == 1 { Parity::Even } else { Parity::Odd })
    }

    /// Parity labels of a site, one per split axis.
    pub fn parity_labels(&self, i: usize) -> String {
        (0..self.split).filter_map(|a| self.parity(i, a)).map(|p| p.to_string()).collect()
    }

    pub fn index(&self, cell: [usize; 3], bits: u8) -> Option<usize> {
        if cell.iter().zip(&self.dims).any(|(c, d)| c >= d) || bits as usize >= 1 << self.split {
            return None;
        }
        let linear = (cell[0] * self.dims[1] + cell[1]) * self.dims[2] + cell[2];
        let i = (linear << self.split) | bits as usize;
        (i < self.sites.len()).then_some(i)
    }

    /// Number of distinct global coordinates along `axis`.
    pub fn extent(&self, axis: usize) -> usize {
        if axis == 0 {
            if let Some(n) = self.spec.truncate {
                return n;
            }
        }
        if self.is_split(axis) {
            2 * self.dims[axis]
        } else {
            self.dims[axis]
        }
    }

    pub fn global(&self, i: usize) -> [usize; 3] {
        let s = &self.sites[i];
        let mut g = s.cell;
        for (a, v) in g.iter_mut().enumerate().take(self.split) {
            *v = 2 * *v + (s.bits >> a & 1) as usize;
        }
        g
    }

    pub fn at_global(&self, g: [usize; 3]) -> Option<usize> {
        let mut cell = g;
        let mut bits = 0u8;
        for (a, c) in cell.iter_mut().enumerate().take(self.split) {
            bits |= ((*c & 1) as u8) << a;
            *c /= 2;
        }
        self.index(cell, bits)
    }

    fn position_of(&self, cell: [i64; 3], bits: u8) -> [f64; 3] {
        let mut p = [0.0; 3];
        for a in 0..self.spec.dimension {
            let a0 = self.spec.intra[a];
            p[a] = if self.is_split(a) {
                cell[a] as f64 * (a0 + self.spec.inter[a]) + f64::from(bits >> a & 1) * a0
            } else {
                cell[a] as f64 * a0
            };
        }
        p
    }

    /// Geometric center of the lattice.
    pub fn center(&self) -> [f64; 3] {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for s in &self.sites {
            for a in 0..3 {
                lo[a] = lo[a].min(s.position[a]);
                hi[a] = hi[a].max(s.position[a]);
            }
        }
        std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]))
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.sites[i].position, self.sites[j].position);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisRule {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seam {
    MoebiusX,
    MoebiusY,
    /// Orientation-reversing seam along x, plain wrap along y.
    Klein,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundaryTopology {
    #[serde(default)]
    pub axes: Vec<AxisRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seam: Option<Seam>,
}

impl BoundaryTopology {
    pub fn open(dimension: usize) -> Self {
        BoundaryTopology { axes: vec![AxisRule::Open; dimension], seam: None }
    }

    pub fn periodic(dimension: usize) -> Self {
        BoundaryTopology { axes: vec![AxisRule::Periodic; dimension], seam: None }
    }

    pub fn torus() -> Self {
        Self::periodic(2)
    }

    pub fn with_seam(seam: Seam) -> Self {
        BoundaryTopology { axes: vec![AxisRule::Open; 2], seam: Some(seam) }
    }

    pub fn rule(&self, axis: usize) -> AxisRule {
        self.axes.get(axis).copied().unwrap_or_default()
    }

    fn check(&self, table: &SiteTable) -> Result<()> {
        if self.axes.len() > table.dimension() {
            return Err(Error::InvalidSpec(format!(
                "{} boundary rules for a {}D lattice",
                self.axes.len(),
                table.dimension()
            )));
        }
        if table.spec().truncate.is_some() && self.rule(0) == AxisRule::Periodic {
            return Err(Error::InvalidSpec("a truncated chain cannot be periodic".into()));
        }
        Ok(())
    }
}

/// Coupling tessellation labels.
///
/// `X0`/`X1` (aliases `h0`/`h1`) are the intra- and inter-cell bonds along
/// x, likewise for y and z on tetramer and octamer lattices. The diagonal
/// labels exist on dimer lattices, where they pair an even site with an
/// odd site in a neighboring row:
///
/// | label  | even site  | odd partner             |
/// |--------|------------|-------------------------|
/// | `xy0`  | `(i,j)`    | `(i, j+1)`              |
/// | `xy1`  | `(i,j)`    | `(i+1, j-1)`            |
/// | `xz0`  | `(i,j,l)`  | `(i, j, l+1)`           |
/// | `xz1`  | `(i,j,l)`  | `(i+1, j, l-1)`         |
/// | `xyz0` | `(i,j,l)`  | `(i, j+1, l+1)`         |
/// | `xyz1` | `(i,j,l)`  | `(i+1, j-1, l-1)`       |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TessKind {
    #[serde(alias = "h0")]
    X0,
    #[serde(alias = "h1")]
    X1,
    Y0,
    Y1,
    Z0,
    Z1,
    Xy0,
    Xy1,
    Xz0,
    Xz1,
    Xyz0,
    Xyz1,
}

impl TessKind {
    pub const ALL: [TessKind; 12] = [
        TessKind::X0,
        TessKind::X1,
        TessKind::Y0,
        TessKind::Y1,
        TessKind::Z0,
        TessKind::Z1,
        TessKind::Xy0,
        TessKind::Xy1,
        TessKind::Xz0,
        TessKind::Xz1,
        TessKind::Xyz0,
        TessKind::Xyz1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TessKind::X0 => "x0",
            TessKind::X1 => "x1",
            TessKind::Y0 => "y0",
            TessKind::Y1 => "y1",
            TessKind::Z0 => "z0",
            TessKind::Z1 => "z1",
            TessKind::Xy0 => "xy0",
            TessKind::Xy1 => "xy1",
            TessKind::Xz0 => "xz0",
            TessKind::Xz1 => "xz1",
            TessKind::Xyz0 => "xyz0",
            TessKind::Xyz1 => "xyz1",
        }
    }

    /// Parity axis flipped by the bond and cell offset from the even site
    /// to its odd partner.
    fn rule(self, table: &SiteTable) -> Result<(usize, [i64; 3])> {
        use TessKind::*;
        let incompatible = |why: String| Error::Incompatible { what: format!("tessellation {}", self.name()), why };
        let (axis, offset) = match self {
            X0 => (0, [0, 0, 0]),
            X1 => (0, [1, 0, 0]),
            Y0 => (1, [0, 0, 0]),
            Y1 => (1, [0, 1, 0]),
            Z0 => (2, [0, 0, 0]),
            Z1 => (2, [0, 0, 1]),
            Xy0 => (0, [0, 1, 0]),
            Xy1 => (0, [1, -1, 0]),
            Xz0 => (0, [0, 0, 1]),
            Xz1 => (0, [1, 0, -1]),
            Xyz0 => (0, [0, 1, 1]),
            Xyz1 => (0, [1, -1, -1]),
        };
        let needed = match self {
            X0 | X1 => 1,
            Y0 | Y1 | Xy0 | Xy1 => 2,
            _ => 3,
        };
        if table.dimension() < needed {
            return Err(incompatible(format!("needs {needed} dimensions, lattice has {}", table.dimension())));
        }
        if !table.is_split(axis) {
            return Err(incompatible(format!("axis {axis} has no dual lattice constant")));
        }
        let diagonal = matches!(self, Xy0 | Xy1 | Xz0 | Xz1 | Xyz0 | Xyz1);
        if diagonal && table.spec().unit != UnitKind::Dimer {
            return Err(incompatible("diagonal bonds are defined on dimer lattices only".into()));
        }
        Ok((axis, offset))
    }
}

impl fmt::Display for TessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "h0" => return Ok(TessKind::X0),
            "h1" => return Ok(TessKind::X1),
            _ => {}
        }
        TessKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown tessellation label '{s}'")))
    }
}

/// One coupled pair with the bond midpoint, used to sample spatial angle
/// fields. Midpoints are unwrapped: a bond across a periodic boundary has
/// its midpoint just outside the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    /// Midpoint position (μm).
    pub mid_pos: [f64; 3],
    /// Midpoint in cell units.
    pub mid_cell: [f64; 3],
}

/// A matching: no site appears in more than one pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairSet {
    pairs: Vec<Pair>,
}

impl PairSet {
    pub fn new(pairs: Vec<Pair>, n_sites: usize) -> Result<Self> {
        let mut seen = vec![false; n_sites];
        for p in &pairs {
            for s in [p.a, p.b] {
                if s >= n_sites {
                    return Err(Error::SiteOutOfRange { index: s, len: n_sites });
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::OverlappingPairs(s));
                }
            }
        }
        Ok(PairSet { pairs })
    }

    /// Pairs given as bare index tuples; midpoints are zero.
    pub fn from_indices(pairs: &[(usize, usize)], n_sites: usize) -> Result<Self> {
        let pairs = pairs.iter().map(|&(a, b)| Pair { a, b, mid_pos: [0.0; 3], mid_cell: [0.0; 3] }).collect();
        Self::new(pairs, n_sites)
    }

    pub fn empty() -> Self {
        PairSet::default()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Index tuples with the smaller index first, sorted.
    pub fn sorted_indices(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.pairs.iter().map(|p| (p.a.min(p.b), p.a.max(p.b))).collect();
        v.sort_unstable();
        v
    }

    pub fn partner(&self, site: usize) -> Option<usize> {
        self.pairs.iter().find_map(|p| {
            if p.a == site {
                Some(p.b)
            } else if p.b == site {
                Some(p.a)
            } else {
                None
            }
        })
    }
}

pub fn tessellation_pairs(table: &SiteTable, kind: TessKind, boundary: &BoundaryTopology) -> Result<PairSet> {
    boundary.check(table)?;
    let (axis, offset) = kind.rule(table)?;
    let flip = 1u8 << axis;
    let dims = table.cells();
    let mut pairs = Vec::new();
    for (i, site) in table.sites().iter().enumerate() {
        if site.bits & flip == 0 {
            continue;
        }
        let mut target = [0usize; 3];
        let mut inside = true;
        for a in 0..3 {
            let c = site.cell[a] as i64 + offset[a];
            let n = dims[a] as i64;
            target[a] = if (0..n).contains(&c) {
                c as usize
            } else if boundary.rule(a) == AxisRule::Periodic {
                c.rem_euclid(n) as usize
            } else {
                inside = false;
                break;
            };
        }
        if !inside {
            continue;
        }
        let Some(j) = table.index(target, site.bits & !flip) else { continue };
        let unwrapped: [i64; 3] = std::array::from_fn(|a| site.cell[a] as i64 + offset[a]);
        let q = table.position_of(unwrapped, site.bits & !flip);
        let mid_pos = std::array::from_fn(|a| 0.5 * (site.position[a] + q[a]));
        let mid_cell = std::array::from_fn(|a| site.cell[a] as f64 + 0.5 * offset[a] as f64);
        pairs.push(Pair { a: j, b: i, mid_pos, mid_cell });
    }
    PairSet::new(pairs, table.len())
}

/// Pairs joining opposite boundaries, one set per axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeamPairs {
    pub per_axis: Vec<PairSet>,
}

impl SeamPairs {
    pub fn axis(&self, a: usize) -> &PairSet {
        static EMPTY: PairSet = PairSet { pairs: Vec::new() };
        self.per_axis.get(a).unwrap_or(&EMPTY)
    }

    pub fn is_empty(&self) -> bool {
        self.per_axis.iter().all(PairSet::is_empty)
    }
}

/// Boundary-crossing pairs for `topology`.
///
/// Periodic axes without a seam give the plain wrap `(last, j) ↔ (0, j)`.
/// A Möbius seam along x gives `(last, j) ↔ (0, G_y − 1 − j)` in global
/// coordinates; `Klein` combines that with a plain wrap along y.
pub fn seam_pairs(table: &SiteTable, topology: &BoundaryTopology) -> Result<SeamPairs> {
    let d = table.dimension();
    if topology.seam.is_some() && d != 2 {
        return Err(Error::Incompatible { what: "seam".into(), why: format!("seams need a 2D lattice, got {d}D") });
    }
    let mut per_axis = vec![PairSet::empty(); d];
    let (flip_x, flip_y, wrap_y) = match topology.seam {
        None => (false, false, false),
        Some(Seam::MoebiusX) => (true, false, false),
        Some(Seam::MoebiusY) => (false, true, false),
        Some(Seam::Klein) => (true, false, true),
    };
    for a in 0..d {
        let flipped = (a == 0 && flip_x) || (a == 1 && flip_y);
        let wrapped = topology.rule(a) == AxisRule::Periodic || (a == 1 && wrap_y);
        if !flipped && !wrapped {
            continue;
        }
        let ext = table.extent(a);
        if ext < 2 {
            return Err(Error::InvalidSpec(format!("axis {a} too short for a seam")));
        }
        let mut pairs = Vec::new();
        for (i, _) in table.sites().iter().enumerate() {
            let g = table.global(i);
            if g[a] != ext - 1 {
                continue;
            }
            let mut h = g;
            h[a] = 0;
            if flipped {
                let other = 1 - a;
                h[other] = table.extent(other) - 1 - g[other];
            }
            if let Some(j) = table.at_global(h) {
                pairs.push(Pair { a: i, b: j, mid_pos: table.site(i).position, mid_cell: [0.0; 3] });
            }
        }
        per_axis[a] = PairSet::new(pairs, table.len())?;
    }
    Ok(SeamPairs { per_axis })
}
