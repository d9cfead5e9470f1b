//! Parameter domains, boundary faces, identifications and the stencil grid.
//!
//! Every domain lives in the chart `[0,1]ⁿ`. Box-like domains (interval,
//! square, cube, hexagon, cylinder, torus) use a regular lattice with
//! `resolution` vertices per axis; periodic axes drop the duplicate vertex at
//! chart coordinate 1. The sphere uses a latitude–longitude lattice with each
//! pole collapsed to one vertex; the projective plane is the same lattice
//! equipped with the antipodal involution.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Interval,
    Square,
    Cube(usize),
    Hexagon,
    Cylinder,
    Torus2,
    Sphere2,
    Rp2,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::Cube(n) => n,
            _ => 2,
        }
    }

    pub fn is_closed(self) -> bool {
        matches!(self, DomainKind::Torus2 | DomainKind::Sphere2 | DomainKind::Rp2)
    }

    /// Interval, square and n-cube: domains whose faces come in opposite pairs
    /// along the chart axes.
    pub fn is_cube_like(self) -> bool {
        matches!(self, DomainKind::Interval | DomainKind::Square | DomainKind::Cube(_))
    }

    pub fn is_spherical(self) -> bool {
        matches!(self, DomainKind::Sphere2 | DomainKind::Rp2)
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::Interval => write!(f, "interval"),
            DomainKind::Square => write!(f, "square"),
            DomainKind::Cube(n) => write!(f, "cube{n}"),
            DomainKind::Hexagon => write!(f, "hexagon"),
            DomainKind::Cylinder => write!(f, "cylinder"),
            DomainKind::Torus2 => write!(f, "torus2"),
            DomainKind::Sphere2 => write!(f, "sphere2"),
            DomainKind::Rp2 => write!(f, "rp2"),
        }
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "interval" => DomainKind::Interval,
            "square" => DomainKind::Square,
            "hexagon" => DomainKind::Hexagon,
            "cylinder" => DomainKind::Cylinder,
            "torus2" | "torus" => DomainKind::Torus2,
            "sphere2" | "sphere" => DomainKind::Sphere2,
            "rp2" => DomainKind::Rp2,
            other => {
                let n = other
                    .strip_prefix("cube")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown domain kind '{other}'")))?;
                if !(1..=4).contains(&n) {
                    return Err(Error::UnsupportedDimension(n));
                }
                DomainKind::Cube(n)
            }
        })
    }
}

/// Shape carved out of the unit square for hexagon domains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HexagonMask {
    /// Regular hexagon with circumradius ½ centred in the chart.
    Regular,
    /// Thin tee with three arms of length `arm` and width `width`, measured in
    /// physical units where the chart is scaled by `2·arm + width`. Its six
    /// sides are the three arm tips and the three bent sides between them.
    Tee { arm: f64, width: f64 },
}

impl HexagonMask {
    pub fn name(&self) -> &'static str {
        match self {
            HexagonMask::Regular => "regular",
            HexagonMask::Tee { .. } => "tee",
        }
    }

    /// Physical side of the chart square for the tee; 1 for the regular mask.
    pub fn chart_scale(&self) -> f64 {
        match *self {
            HexagonMask::Regular => 1.0,
            HexagonMask::Tee { arm, width } => 2.0 * arm + width,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        match *self {
            HexagonMask::Regular => {
                let apothem = 0.5 * (std::f64::consts::PI / 6.0).cos();
                (0..6).all(|k| {
                    let ang = std::f64::consts::PI / 3.0 * k as f64 + std::f64::consts::PI / 6.0;
                    (p[0] - 0.5) * ang.cos() + (p[1] - 0.5) * ang.sin() <= apothem + TOL
                })
            }
            HexagonMask::Tee { arm, width } => {
                let l = 2.0 * arm + width;
                let (x, y) = (p[0] * l, p[1] * l);
                let t = TOL * l;
                let bar = x >= -t && x <= l + t && y >= arm - t && y <= arm + width + t;
                let stem = x >= arm - t && x <= arm + width + t && y >= -t && y <= arm + width + t;
                bar || stem
            }
        }
    }

    /// Side assignment of a boundary point, as labels A, B, C, A', B', C' in
    /// cyclic order.
    fn sides(&self, p: &[f64]) -> Vec<FaceLabel> {
        let label = |k: usize| FaceLabel { pair: (k % 3) as u8, high: k >= 3 };
        match *self {
            HexagonMask::Regular => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for k in 0..6 {
                    let ang = std::f64::consts::PI / 3.0 * k as f64 + std::f64::consts::PI / 6.0;
                    let val = (p[0] - 0.5) * ang.cos() + (p[1] - 0.5) * ang.sin();
                    if val > best_val {
                        best_val = val;
                        best = k;
                    }
                }
                vec![label(best)]
            }
            HexagonMask::Tee { arm, width } => {
                let l = 2.0 * arm + width;
                let (x, y) = (p[0] * l, p[1] * l);
                let t = 1e-9 * l;
                let near = |a: f64, b: f64| (a - b).abs() <= t;
                let mut out = Vec::new();
                // left tip, lower-left bend, bottom tip, lower-right bend, right tip, top
                if near(x, 0.0) {
                    out.push(label(0));
                }
                if (near(y, arm) && x <= arm + t) || (near(x, arm) && y <= arm + t) {
                    out.push(label(1));
                }
                if near(y, 0.0) {
                    out.push(label(2));
                }
                if (near(x, arm + width) && y <= arm + t) || (near(y, arm) && x >= arm + width - t) {
                    out.push(label(3));
                }
                if near(x, l) {
                    out.push(label(4));
                }
                if near(y, arm + width) {
                    out.push(label(5));
                }
                out
            }
        }
    }
}

/// Boundary face label: `pair` 0 → A/A', 1 → B/B', ...; `high` marks the
/// primed face (chart coordinate 1 for box axes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceLabel {
    pub pair: u8,
    pub high: bool,
}

impl FaceLabel {
    pub fn new(pair: u8, high: bool) -> Self {
        FaceLabel { pair, high }
    }

    pub fn opposite(self) -> Self {
        FaceLabel { pair: self.pair, high: !self.high }
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'A' + self.pair) as char;
        if self.high {
            write!(f, "{c}'")
        } else {
            write!(f, "{c}")
        }
    }
}

impl FromStr for FaceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let c = chars.next().ok_or_else(|| Error::UnknownFace(s.to_string()))?;
        let rest: String = chars.collect();
        if !c.is_ascii_uppercase() || !(rest.is_empty() || rest == "'") {
            return Err(Error::UnknownFace(s.to_string()));
        }
        Ok(FaceLabel { pair: c as u8 - b'A', high: rest == "'" })
    }
}

/// Vertex-pairing rule of a quotient topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identification {
    /// Glue chart coordinate 0 to chart coordinate 1 along this axis.
    PeriodicAxis(usize),
    /// Antipodal map of the sphere lattice.
    Antipodal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainTopology {
    pub kind: DomainKind,
    pub mask: Option<HexagonMask>,
    pub boundary_faces: Vec<FaceLabel>,
    pub identifications: Vec<Identification>,
}

impl DomainTopology {
    fn box_faces(n: usize, skip_axis: Option<usize>) -> Vec<FaceLabel> {
        (0..n)
            .filter(|&a| Some(a) != skip_axis)
            .flat_map(|a| [FaceLabel::new(a as u8, false), FaceLabel::new(a as u8, true)])
            .collect()
    }

    pub fn interval() -> Self {
        Self::cube(1)
    }

    pub fn square() -> Self {
        DomainTopology {
            kind: DomainKind::Square,
            mask: None,
            boundary_faces: Self::box_faces(2, None),
            identifications: vec![],
        }
    }

    pub fn cube(n: usize) -> Self {
        let kind = match n {
            1 => DomainKind::Interval,
            2 => DomainKind::Square,
            _ => DomainKind::Cube(n),
        };
        DomainTopology { kind, mask: None, boundary_faces: Self::box_faces(n, None), identifications: vec![] }
    }

    pub fn hexagon(mask: HexagonMask) -> Self {
        DomainTopology {
            kind: DomainKind::Hexagon,
            mask: Some(mask),
            boundary_faces: Self::box_faces(3, None),
            identifications: vec![],
        }
    }

    /// Periodic along axis 0, boundary circles B (v = 0) and B' (v = 1).
    pub fn cylinder() -> Self {
        DomainTopology {
            kind: DomainKind::Cylinder,
            mask: None,
            boundary_faces: Self::box_faces(2, Some(0)),
            identifications: vec![Identification::PeriodicAxis(0)],
        }
    }

    pub fn torus2() -> Self {
        DomainTopology {
            kind: DomainKind::Torus2,
            mask: None,
            boundary_faces: vec![],
            identifications: vec![Identification::PeriodicAxis(0), Identification::PeriodicAxis(1)],
        }
    }

    pub fn sphere2() -> Self {
        DomainTopology { kind: DomainKind::Sphere2, mask: None, boundary_faces: vec![], identifications: vec![] }
    }

    pub fn rp2() -> Self {
        DomainTopology {
            kind: DomainKind::Rp2,
            mask: None,
            boundary_faces: vec![],
            identifications: vec![Identification::Antipodal],
        }
    }

    pub fn from_kind(kind: DomainKind, mask: Option<HexagonMask>) -> Self {
        match kind {
            DomainKind::Interval => Self::interval(),
            DomainKind::Square => Self::square(),
            DomainKind::Cube(n) => Self::cube(n),
            DomainKind::Hexagon => Self::hexagon(mask.unwrap_or(HexagonMask::Regular)),
            DomainKind::Cylinder => Self::cylinder(),
            DomainKind::Torus2 => Self::torus2(),
            DomainKind::Sphere2 => Self::sphere2(),
            DomainKind::Rp2 => Self::rp2(),
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.identifications.contains(&Identification::PeriodicAxis(axis))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    Axis = 1,
    Diagonal = 2,
    Knight = 3,
}

impl StencilOrder {
    pub fn from_count(k: usize) -> Result<Self> {
        match k {
            1 => Ok(StencilOrder::Axis),
            2 => Ok(StencilOrder::Diagonal),
            3 => Ok(StencilOrder::Knight),
            other => Err(Error::UnsupportedStencil(other)),
        }
    }

    /// Largest lattice step along one axis.
    pub fn reach(self) -> usize {
        if self == StencilOrder::Knight {
            2
        } else {
            1
        }
    }

    pub fn offsets(self, n: usize) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let total = 5usize.pow(n as u32);
        for code in 0..total {
            let mut o = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                o.push((c % 5) as i64 - 2);
                c /= 5;
            }
            let ones = o.iter().filter(|x| x.abs() == 1).count();
            let twos = o.iter().filter(|x| x.abs() == 2).count();
            let keep = match self {
                StencilOrder::Axis => ones == 1 && twos == 0,
                StencilOrder::Diagonal => ones >= 1 && twos == 0,
                StencilOrder::Knight => (ones >= 1 && twos == 0) || (ones == 1 && twos == 1),
            };
            if keep {
                out.push(o);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Layout {
    Boxed { shape: Vec<usize>, periodic: Vec<bool>, strides: Vec<usize> },
    /// `rings` latitude intervals, `lons` = 2·rings longitudes; ids 0 and 1 are
    /// the south and north poles, ring k ∈ [1, rings) vertex j has id
    /// `2 + (k−1)·lons + j`.
    Sphere { rings: usize, lons: usize },
}

/// Grid cells: hypercubes given by their 2ⁿ corners in binary order (bit a set
/// ⇒ +1 step along axis a), with unwrapped chart origin, size and the
/// fraction of the cell lying inside the domain.
#[derive(Clone, Debug, Default)]
pub struct CellTable {
    pub corners_per_cell: usize,
    pub corners: Vec<VertexId>,
    pub origin: Vec<f64>,
    pub size: Vec<f64>,
    pub fraction: Vec<f64>,
}

impl CellTable {
    pub fn len(&self) -> usize {
        self.fraction.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fraction.is_empty()
    }

    pub fn corners_of(&self, c: usize) -> &[VertexId] {
        &self.corners[c * self.corners_per_cell..(c + 1) * self.corners_per_cell]
    }

    pub fn origin_of(&self, c: usize, n: usize) -> &[f64] {
        &self.origin[c * n..(c + 1) * n]
    }

    pub fn size_of(&self, c: usize, n: usize) -> &[f64] {
        &self.size[c * n..(c + 1) * n]
    }

    /// Chart volume of cell `c` inside the domain.
    pub fn chart_volume(&self, c: usize, n: usize) -> f64 {
        self.size_of(c, n).iter().product::<f64>() * self.fraction[c]
    }
}

/// One directed adjacency entry.
#[derive(Clone, Copy, Debug)]
pub struct EdgeRef<'a> {
    pub index: usize,
    pub to: VertexId,
    pub disp: &'a [f64],
    /// Periods crossed along axes 0 and 1 (zero for non-periodic axes).
    pub wrap: [i8; 2],
}

#[derive(Clone, Debug)]
pub struct Grid {
    topology: DomainTopology,
    resolution: usize,
    stencil: StencilOrder,
    dim: usize,
    layout: Layout,
    coords: Vec<f64>,
    active: Vec<bool>,
    adj_start: Vec<usize>,
    adj_to: Vec<u32>,
    adj_disp: Vec<f64>,
    adj_wrap: Vec<[i8; 2]>,
    faces: Vec<(FaceLabel, Vec<VertexId>)>,
    cells: CellTable,
}

pub fn build_grid(topology: DomainTopology, resolution: usize, stencil_order: usize) -> Result<Grid> {
    Grid::new(topology, resolution, stencil_order)
}

impl Grid {
    pub fn new(topology: DomainTopology, resolution: usize, stencil_order: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::ResolutionTooSmall(resolution));
        }
        let stencil = StencilOrder::from_count(stencil_order)?;
        let dim = topology.dim();
        if !(1..=4).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if topology.kind.is_spherical() {
            Ok(Self::build_sphere(topology, resolution, stencil))
        } else {
            Self::build_boxed(topology, resolution, stencil)
        }
    }

    fn build_boxed(topology: DomainTopology, n_res: usize, stencil: StencilOrder) -> Result<Self> {
        let dim = topology.dim();
        let periodic: Vec<bool> = (0..dim).map(|a| topology.is_periodic(a)).collect();
        let shape = vec![n_res; dim];
        let mut strides = vec![1usize; dim];
        for a in 1..dim {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        let spacing: Vec<f64> =
            periodic.iter().map(|&p| if p { 1.0 / n_res as f64 } else { 1.0 / (n_res - 1) as f64 }).collect();
        let count: usize = shape.iter().product();
        let mut coords = vec![0.0; count * dim];
        let mut idx = vec![0usize; dim];
        for v in 0..count {
            let mut r = v;
            for a in 0..dim {
                idx[a] = r % shape[a];
                r /= shape[a];
                coords[v * dim + a] = idx[a] as f64 * spacing[a];
            }
        }
        let mask = topology.mask;
        let active: Vec<bool> = match mask {
            Some(m) => (0..count).map(|v| m.contains(&coords[v * dim..(v + 1) * dim])).collect(),
            None => vec![true; count],
        };
        if !active.iter().any(|&a| a) {
            return Err(Error::EmptyMask);
        }

        let offsets = stencil.offsets(dim);
        let mut adj_start = Vec::with_capacity(count + 1);
        let mut adj_to = Vec::new();
        let mut adj_disp = Vec::new();
        let mut adj_wrap = Vec::new();
        adj_start.push(0);
        let mut t = vec![0i64; dim];
        for v in 0..count {
            if active[v] {
                let mut r = v;
                for a in 0..dim {
                    idx[a] = r % shape[a];
                    r /= shape[a];
                }
                'offsets: for o in &offsets {
                    let mut wrap = [0i8; 2];
                    let mut w = 0usize;
                    for a in 0..dim {
                        let raw = idx[a] as i64 + o[a];
                        let n = shape[a] as i64;
                        t[a] = if periodic[a] {
                            if a < 2 {
                                wrap[a] = raw.div_euclid(n) as i8;
                            }
                            raw.rem_euclid(n)
                        } else if raw < 0 || raw >= n {
                            continue 'offsets;
                        } else {
                            raw
                        };
                        w += t[a] as usize * strides[a];
                    }
                    if !active[w] {
                        continue;
                    }
                    if let Some(m) = mask {
                        let p = &coords[v * dim..(v + 1) * dim];
                        let inside = [0.25, 0.5, 0.75].iter().all(|&s| {
                            let q: Vec<f64> = (0..dim).map(|a| p[a] + s * o[a] as f64 * spacing[a]).collect();
                            m.contains(&q)
                        });
                        if !inside {
                            continue;
                        }
                    }
                    adj_to.push(w as u32);
                    for a in 0..dim {
                        adj_disp.push(o[a] as f64 * spacing[a]);
                    }
                    adj_wrap.push(wrap);
                }
            }
            adj_start.push(adj_to.len());
        }

        // faces
        let mut faces: Vec<(FaceLabel, Vec<VertexId>)> = Vec::new();
        if let Some(m) = mask {
            let mut by_label: Vec<Vec<VertexId>> = vec![Vec::new(); 6];
            for v in 0..count {
                if !active[v] {
                    continue;
                }
                let mut r = v;
                for a in 0..dim {
                    idx[a] = r % shape[a];
                    r /= shape[a];
                }
                // full 8-neighbourhood, so concave corners count as boundary
                let on_boundary = (-1i64..=1).any(|dx| {
                    (-1i64..=1).any(|dy| {
                        let (x, y) = (idx[0] as i64 + dx, idx[1] as i64 + dy);
                        if x < 0 || y < 0 || x >= shape[0] as i64 || y >= shape[1] as i64 {
                            return true;
                        }
                        !active[x as usize + y as usize * strides[1]]
                    })
                });
                if on_boundary {
                    for lab in m.sides(&coords[v * dim..(v + 1) * dim]) {
                        by_label[lab.pair as usize + if lab.high { 3 } else { 0 }].push(v);
                    }
                }
            }
            for (k, verts) in by_label.into_iter().enumerate() {
                faces.push((FaceLabel::new((k % 3) as u8, k >= 3), verts));
            }
            faces.sort_by_key(|(l, _)| *l);
        } else {
            for &lab in &topology.boundary_faces {
                let a = lab.pair as usize;
                let target = if lab.high { shape[a] - 1 } else { 0 };
                let verts: Vec<VertexId> = (0..count).filter(|&v| (v / strides[a]) % shape[a] == target).collect();
                faces.push((lab, verts));
            }
        }

        // cells
        let cpc = 1usize << dim;
        let cell_shape: Vec<usize> = (0..dim).map(|a| if periodic[a] { shape[a] } else { shape[a] - 1 }).collect();
        let n_cells: usize = cell_shape.iter().product();
        let mut cells = CellTable { corners_per_cell: cpc, ..Default::default() };
        let mut cidx = vec![0usize; dim];
        for c in 0..n_cells {
            let mut r = c;
            for a in 0..dim {
                cidx[a] = r % cell_shape[a];
                r /= cell_shape[a];
            }
            let mut corners = Vec::with_capacity(cpc);
            for bits in 0..cpc {
                let mut w = 0;
                for a in 0..dim {
                    let i = (cidx[a] + ((bits >> a) & 1)) % shape[a];
                    w += i * strides[a];
                }
                corners.push(w);
            }
            let origin: Vec<f64> = (0..dim).map(|a| cidx[a] as f64 * spacing[a]).collect();
            let fraction = match mask {
                None => 1.0,
                Some(m) => {
                    if !corners.iter().any(|&w| active[w]) {
                        0.0
                    } else {
                        const SUB: usize = 8;
                        let mut inside = 0usize;
                        for s in 0..SUB * SUB {
                            let q = [
                                origin[0] + (((s % SUB) as f64 + 0.5) / SUB as f64) * spacing[0],
                                origin[1] + (((s / SUB) as f64 + 0.5) / SUB as f64) * spacing[1],
                            ];
                            if m.contains(&q) {
                                inside += 1;
                            }
                        }
                        inside as f64 / (SUB * SUB) as f64
                    }
                }
            };
            if fraction <= 0.0 {
                continue;
            }
            cells.corners.extend(corners);
            cells.origin.extend(origin);
            cells.size.extend(spacing.iter().cloned());
            cells.fraction.push(fraction);
        }

        Ok(Grid {
            topology,
            resolution: n_res,
            stencil,
            dim,
            layout: Layout::Boxed { shape, periodic, strides },
            coords,
            active,
            adj_start,
            adj_to,
            adj_disp,
            adj_wrap,
            faces,
            cells,
        })
    }

    fn build_sphere(topology: DomainTopology, rings: usize, stencil: StencilOrder) -> Self {
        let lons = 2 * rings;
        let count = 2 + (rings - 1) * lons;
        let id = |j: i64, k: usize| -> VertexId {
            if k == 0 {
                0
            } else if k == rings {
                1
            } else {
                2 + (k - 1) * lons + j.rem_euclid(lons as i64) as usize
            }
        };
        let mut coords = vec![0.0; count * 2];
        coords[1] = 0.0;
        coords[3] = 1.0;
        for k in 1..rings {
            for j in 0..lons {
                let v = id(j as i64, k);
                coords[2 * v] = j as f64 / lons as f64;
                coords[2 * v + 1] = k as f64 / rings as f64;
            }
        }
        let du = 1.0 / lons as f64;
        let dv = 1.0 / rings as f64;
        let offsets = stencil.offsets(2);
        let mut adj_start = vec![0];
        let mut adj_to = Vec::new();
        let mut adj_disp = Vec::new();
        let mut adj_wrap = Vec::new();
        for v in 0..count {
            if v < 2 {
                let k = if v == 0 { 1 } else { rings - 1 };
                let sign = if v == 0 { 1.0 } else { -1.0 };
                for j in 0..lons {
                    adj_to.push(id(j as i64, k) as u32);
                    adj_disp.extend([0.0, sign * dv]);
                    adj_wrap.push([0, 0]);
                }
            } else {
                let k = (v - 2) / lons + 1;
                let j = ((v - 2) % lons) as i64;
                let mut pole_done = [false; 2];
                for o in &offsets {
                    let kk = k as i64 + o[1];
                    if kk == 0 || kk == rings as i64 {
                        if o[1].abs() != 1 {
                            continue;
                        }
                        let p = if kk == 0 { 0 } else { 1 };
                        if pole_done[p] {
                            continue;
                        }
                        pole_done[p] = true;
                        adj_to.push(p as u32);
                        adj_disp.extend([0.0, o[1] as f64 * dv]);
                        adj_wrap.push([0, 0]);
                        continue;
                    }
                    if kk < 0 || kk > rings as i64 {
                        continue;
                    }
                    let raw = j + o[0];
                    adj_to.push(id(raw, kk as usize) as u32);
                    adj_disp.extend([o[0] as f64 * du, o[1] as f64 * dv]);
                    adj_wrap.push([raw.div_euclid(lons as i64) as i8, 0]);
                }
            }
            adj_start.push(adj_to.len());
        }
        // rp2 keeps the full sphere lattice; each cell is half of a quotient cell
        let share = if topology.kind == DomainKind::Rp2 { 0.5 } else { 1.0 };
        let mut cells = CellTable { corners_per_cell: 4, ..Default::default() };
        for k in 0..rings {
            for j in 0..lons as i64 {
                cells.corners.extend([id(j, k), id(j + 1, k), id(j, k + 1), id(j + 1, k + 1)]);
                cells.origin.extend([j as f64 * du, k as f64 * dv]);
                cells.size.extend([du, dv]);
                cells.fraction.push(share);
            }
        }
        Grid {
            topology,
            resolution: rings,
            stencil,
            dim: 2,
            layout: Layout::Sphere { rings, lons },
            coords,
            active: vec![true; count],
            adj_start,
            adj_to,
            adj_disp,
            adj_wrap,
            faces: vec![],
            cells,
        }
    }

    pub fn topology(&self) -> &DomainTopology {
        &self.topology
    }

    pub fn kind(&self) -> DomainKind {
        self.topology.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn stencil_order(&self) -> StencilOrder {
        self.stencil
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.active[v]
    }

    pub fn active_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).filter(move |&v| self.active[v])
    }

    pub fn coords(&self, v: VertexId) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        let d = self.dim;
        (self.adj_start[v]..self.adj_start[v + 1]).map(move |e| EdgeRef {
            index: e,
            to: self.adj_to[e] as VertexId,
            disp: &self.adj_disp[e * d..(e + 1) * d],
            wrap: self.adj_wrap[e],
        })
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj_start[v + 1] - self.adj_start[v]
    }

    /// Number of directed adjacency entries (twice the undirected count).
    pub fn adjacency_len(&self) -> usize {
        self.adj_to.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj_to.len() / 2
    }

    pub fn edge_disp(&self, e: usize) -> &[f64] {
        &self.adj_disp[e * self.dim..(e + 1) * self.dim]
    }

    pub fn edge_between(&self, v: VertexId, w: VertexId) -> Option<EdgeRef<'_>> {
        self.neighbors(v).find(|e| e.to == w)
    }

    pub fn cells(&self) -> &CellTable {
        &self.cells
    }

    /// Axes glued to themselves (torus: 0 and 1; cylinder: 0).
    pub fn periodic_axes(&self) -> Vec<usize> {
        match &self.layout {
            Layout::Boxed { periodic, .. } => (0..self.dim).filter(|&a| periodic[a]).collect(),
            Layout::Sphere { .. } => vec![],
        }
    }

    /// Lattice extent along each axis (vertices per axis).
    pub fn shape(&self) -> Vec<usize> {
        match &self.layout {
            Layout::Boxed { shape, .. } => shape.clone(),
            Layout::Sphere { rings, lons } => vec![*lons, *rings + 1],
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        match &self.layout {
            Layout::Boxed { shape, periodic, .. } => {
                if periodic[axis] {
                    1.0 / shape[axis] as f64
                } else {
                    1.0 / (shape[axis] - 1) as f64
                }
            }
            Layout::Sphere { rings, lons } => {
                if axis == 0 {
                    1.0 / *lons as f64
                } else {
                    1.0 / *rings as f64
                }
            }
        }
    }

    /// Integer lattice index of a vertex (sphere: (longitude, ring)).
    pub fn lattice_index(&self, v: VertexId) -> Vec<i64> {
        match &self.layout {
            Layout::Boxed { shape, .. } => {
                let mut r = v;
                (0..self.dim)
                    .map(|a| {
                        let i = r % shape[a];
                        r /= shape[a];
                        i as i64
                    })
                    .collect()
            }
            Layout::Sphere { rings, lons } => match v {
                0 => vec![0, 0],
                1 => vec![0, *rings as i64],
                _ => vec![((v - 2) % lons) as i64, ((v - 2) / lons + 1) as i64],
            },
        }
    }

    /// Vertex at a lattice index; periodic axes wrap, out-of-range indices on
    /// other axes give `None`.
    pub fn vertex_at(&self, idx: &[i64]) -> Option<VertexId> {
        match &self.layout {
            Layout::Boxed { shape, periodic, strides } => {
                let mut v = 0;
                for a in 0..self.dim {
                    let n = shape[a] as i64;
                    let i = if periodic[a] {
                        idx[a].rem_euclid(n)
                    } else if idx[a] < 0 || idx[a] >= n {
                        return None;
                    } else {
                        idx[a]
                    };
                    v += i as usize * strides[a];
                }
                Some(v)
            }
            Layout::Sphere { rings, lons } => {
                let k = idx[1];
                if k < 0 || k > *rings as i64 {
                    None
                } else if k == 0 {
                    Some(0)
                } else if k == *rings as i64 {
                    Some(1)
                } else {
                    Some(2 + (k as usize - 1) * lons + idx[0].rem_euclid(*lons as i64) as usize)
                }
            }
        }
    }

    /// Pole vertices of the sphere lattice, where the chart is singular.
    pub fn is_chart_singular(&self, v: VertexId) -> bool {
        matches!(self.layout, Layout::Sphere { .. }) && v < 2
    }

    pub fn face_vertices(&self, face: FaceLabel) -> Result<&[VertexId]> {
        if self.faces.is_empty() {
            return Err(Error::NoBoundary(self.kind().to_string()));
        }
        self.faces
            .iter()
            .find(|(l, _)| *l == face)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownFace(face.to_string()))
    }

    pub fn face_labels(&self) -> Vec<FaceLabel> {
        self.faces.iter().map(|(l, _)| *l).collect()
    }

    /// Opposite face pairs are those declared for cube-like and hexagon domains.
    pub fn opposite_pairs(&self) -> Vec<(FaceLabel, FaceLabel)> {
        let labels = self.face_labels();
        labels
            .iter()
            .filter(|l| !l.high && labels.contains(&l.opposite()))
            .map(|&l| (l, l.opposite()))
            .collect()
    }

    /// Chart coordinate of `v` moved by `cls` periods in the universal cover.
    pub fn deck_translate(&self, v: VertexId, cls: &[i64]) -> Result<Vec<f64>> {
        let axes = self.periodic_axes();
        if !matches!(self.kind(), DomainKind::Torus2 | DomainKind::Cylinder) || axes.is_empty() {
            return Err(Error::WrongTopology { expected: "torus2 or cylinder", found: self.kind().to_string() });
        }
        if cls.len() != axes.len() {
            return Err(Error::InvalidParameter(format!(
                "class has {} components, deck group has rank {}",
                cls.len(),
                axes.len()
            )));
        }
        let mut p = self.coords(v).to_vec();
        for (k, &a) in axes.iter().enumerate() {
            p[a] += cls[k] as f64;
        }
        Ok(p)
    }

    /// Antipodal vertex on the sphere lattice: (lat θ, lon φ) ↦ (−θ, φ+π).
    pub fn antipode(&self, v: VertexId) -> Result<VertexId> {
        match &self.layout {
            Layout::Sphere { rings, lons } => Ok(match v {
                0 => 1,
                1 => 0,
                _ => {
                    let k = (v - 2) / lons + 1;
                    let j = (v - 2) % lons;
                    2 + (rings - k - 1) * lons + (j + lons / 2) % lons
                }
            }),
            _ => Err(Error::WrongTopology { expected: "sphere2 or rp2", found: self.kind().to_string() }),
        }
    }

    /// Pairing of an identification rule on lattice indices of the unrolled
    /// fundamental domain (periodic axes include the seam copy at index N).
    pub fn pair_lattice(&self, rule: Identification, idx: &[i64]) -> Vec<i64> {
        let mut out = idx.to_vec();
        match rule {
            Identification::PeriodicAxis(a) => {
                let n = self.shape()[a] as i64;
                if idx[a] == 0 {
                    out[a] = n;
                } else if idx[a] == n {
                    out[a] = 0;
                }
            }
            Identification::Antipodal => {
                if let Layout::Sphere { rings, lons } = &self.layout {
                    out[0] = (idx[0] + *lons as i64 / 2).rem_euclid(*lons as i64);
                    out[1] = *rings as i64 - idx[1];
                }
            }
        }
        out
    }

    /// Wraps a lifted chart point into the fundamental domain.
    pub fn wrap_point(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        match &self.layout {
            Layout::Boxed { periodic, .. } => {
                for a in 0..self.dim {
                    if periodic[a] {
                        q[a] = q[a].rem_euclid(1.0);
                    }
                }
            }
            Layout::Sphere { .. } => q[0] = q[0].rem_euclid(1.0),
        }
        q
    }

    /// Whether a chart point belongs to the domain (mask and bounds).
    pub fn contains_point(&self, p: &[f64]) -> bool {
        let q = self.wrap_point(p);
        let tol = 1e-12;
        if q.iter().any(|x| !x.is_finite() || *x < -tol || *x > 1.0 + tol) {
            return false;
        }
        match self.topology.mask {
            Some(m) => m.contains(&q),
            None => true,
        }
    }

    /// Cell containing a chart point plus local coordinates in [0,1]ⁿ.
    pub fn locate(&self, p: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        let q = self.wrap_point(p);
        let mut base = Vec::with_capacity(self.dim);
        let mut local = Vec::with_capacity(self.dim);
        let shape = self.shape();
        for a in 0..self.dim {
            let h = self.spacing(a);
            let periodic = match &self.layout {
                Layout::Boxed { periodic, .. } => periodic[a],
                Layout::Sphere { .. } => a == 0,
            };
            let cells_along = match &self.layout {
                Layout::Sphere { rings, lons } => {
                    if a == 0 {
                        *lons
                    } else {
                        *rings
                    }
                }
                _ => {
                    if periodic {
                        shape[a]
                    } else {
                        shape[a] - 1
                    }
                }
            };
            let x = q[a] / h;
            let mut i = x.floor() as i64;
            if i < 0 {
                if x < -1e-9 {
                    return None;
                }
                i = 0;
            }
            if i as usize >= cells_along {
                if periodic {
                    i = 0;
                } else if x <= cells_along as f64 + 1e-9 {
                    i = cells_along as i64 - 1;
                } else {
                    return None;
                }
            }
            base.push(i as usize);
            local.push((x - i as f64).clamp(0.0, 1.0));
        }
        Some((base, local))
    }

    /// Corner vertices (binary order) of the lattice cell with base index.
    pub fn cell_corners_at(&self, base: &[usize]) -> Vec<VertexId> {
        let cpc = 1usize << self.dim;
        (0..cpc)
            .map(|bits| {
                let idx: Vec<i64> = (0..self.dim).map(|a| base[a] as i64 + ((bits >> a) & 1) as i64).collect();
                self.vertex_at(&idx).unwrap_or(0)
            })
            .collect()
    }

    /// Plain-text descriptor: kind, resolution, stencil order, mask name.
    pub fn descriptor(&self) -> String {
        let mut s = format!(
            "kind = \"{}\"\nresolution = {}\nstencil_order = {}\n",
            self.kind(),
            self.resolution,
            self.stencil as usize
        );
        if let Some(m) = self.topology.mask {
            s.push_str(&format!("mask = \"{}\"\n", m.name()));
            if let HexagonMask::Tee { arm, width } = m {
                s.push_str(&format!("arm = {arm:.17e}\nwidth = {width:.17e}\n"));
            }
        }
        s
    }
}
