//! Covers, partitions of unity, nerves, slicing covers, separating cuts and
//! width certificates, plus the systolic cross-checks that consume them.
//!
//! Cover sets are vertex subsets. A cover is admissible for a certificate
//! when every grid cell lies inside some set, which is the discrete stand-in
//! for an open cover of the polyhedron.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geodesy::{self, components, dijkstra, set_radius, RadiusReport};
use crate::grid::{DomainKind, FaceLabel, Grid, VertexId};
use crate::measure::{self, level_set_measure};
use crate::metric::MetricField;

pub const LEVEL_SCAN: usize = 256;
pub const CUT_BUDGET: usize = 64;
/// Target shrink factor of the retry ladder and its number of rungs.
pub const LADDER_FACTOR: f64 = 0.92;
pub const LADDER_STEPS: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    /// Sorted vertex ids per set.
    pub sets: Vec<Vec<VertexId>>,
    /// Centre per set; `radii[i]` is the eccentricity of the set from it.
    pub centers: Vec<VertexId>,
    pub radii: Vec<f64>,
    pub multiplicity: usize,
}

impl Cover {
    /// Builds a cover with exact set radii. Every active vertex must be
    /// covered and no set may be empty.
    pub fn new(field: &MetricField, sets: Vec<Vec<VertexId>>) -> Result<Cover> {
        let grid = field.grid();
        let mut sets = sets;
        for (i, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::InvalidParameter(format!("cover set {i} is empty")));
            }
            if let Some(&v) = s.iter().find(|&&v| v >= grid.vertex_count() || !grid.is_active(v)) {
                return Err(Error::InvalidParameter(format!("cover set {i} holds inactive vertex {v}")));
            }
        }
        let counts = membership_counts(grid, &sets);
        if let Some(v) = grid.active_vertices().find(|&v| counts[v] == 0) {
            return Err(Error::UncoveredVertex(v));
        }
        let (radii, centers) = sets.iter().map(|s| set_radius(field, s)).unzip();
        let multiplicity = counts.iter().cloned().max().unwrap_or(0);
        Ok(Cover { sets, centers, radii, multiplicity })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    /// Per vertex, the sorted indices of the sets containing it.
    pub fn membership(&self, vertex_count: usize) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); vertex_count];
        for (i, s) in self.sets.iter().enumerate() {
            for &v in s {
                m[v].push(i);
            }
        }
        m
    }
}

fn membership_counts(grid: &Grid, sets: &[Vec<VertexId>]) -> Vec<usize> {
    let mut counts = vec![0usize; grid.vertex_count()];
    for s in sets {
        for &v in s {
            counts[v] += 1;
        }
    }
    counts
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    /// phi[i][v]: distance from v to the complement of V_i.
    pub phi: Vec<Vec<f64>>,
    pub big_phi: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    /// max over active vertices of |Σ_i ψ_i(v) − 1|.
    pub fn sum_defect(&self, grid: &Grid) -> f64 {
        grid.active_vertices()
            .map(|v| (self.psi.iter().map(|p| p[v]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// ψ_i(v) > 0 exactly when v ∈ V_i.
    pub fn support_exact(&self, grid: &Grid, cover: &Cover) -> bool {
        let m = cover.membership(grid.vertex_count());
        grid.active_vertices().all(|v| {
            (0..self.psi.len()).all(|i| (self.psi[i][v] > 0.0) == m[v].binary_search(&i).is_ok())
        })
    }

    pub fn barycentric(&self, v: VertexId) -> Vec<f64> {
        self.psi.iter().map(|p| p[v]).collect()
    }
}

/// ψ_i = φ_i / Σ φ_j with φ_i the distance to the complement of V_i. A set
/// whose complement is empty gets φ_i ≡ 1.
pub fn partition_of_unity(field: &MetricField, cover: &Cover) -> Result<PartitionOfUnity> {
    partition_of_unity_with(field, cover, Exec::default())
}

pub fn partition_of_unity_with(field: &MetricField, cover: &Cover, exec: Exec) -> Result<PartitionOfUnity> {
    let grid = field.grid();
    let n = grid.vertex_count();
    let phi: Vec<Vec<f64>> = exec.map(&cover.sets, |set| {
        let mut inside = vec![false; n];
        for &v in set {
            inside[v] = true;
        }
        let seeds: Vec<(VertexId, f64)> = grid.active_vertices().filter(|&v| !inside[v]).map(|v| (v, 0.0)).collect();
        if seeds.is_empty() {
            return (0..n).map(|v| if grid.is_active(v) { 1.0 } else { 0.0 }).collect();
        }
        let mut d = dijkstra(field, &seeds, f64::INFINITY).dist;
        for x in d.iter_mut() {
            if !x.is_finite() {
                *x = 0.0;
            }
        }
        d
    });
    let mut big_phi = vec![0.0; n];
    for p in &phi {
        for v in 0..n {
            big_phi[v] += p[v];
        }
    }
    if let Some(v) = grid.active_vertices().find(|&v| big_phi[v] <= 0.0) {
        return Err(Error::UncoveredVertex(v));
    }
    let psi = phi
        .iter()
        .map(|p| (0..n).map(|v| if big_phi[v] > 0.0 { p[v] / big_phi[v] } else { 0.0 }).collect())
        .collect();
    Ok(PartitionOfUnity { phi, big_phi, psi })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NerveComplex {
    pub vertices: usize,
    /// Every simplex with nonempty common intersection, as sorted index
    /// tuples, faces included.
    pub simplices: BTreeSet<Vec<usize>>,
    pub dimension: usize,
}

impl NerveComplex {
    pub fn contains(&self, simplex: &[usize]) -> bool {
        self.simplices.contains(simplex)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.len() == dim + 1).count()
    }

    pub fn closed_under_faces(&self) -> bool {
        self.simplices.iter().all(|s| {
            s.len() == 1 || (0..s.len()).all(|k| {
                let mut f = s.clone();
                f.remove(k);
                self.simplices.contains(&f)
            })
        })
    }
}

pub fn nerve(cover: &Cover, grid: &Grid) -> NerveComplex {
    let mut maximal: BTreeSet<Vec<usize>> = BTreeSet::new();
    for m in cover.membership(grid.vertex_count()) {
        if !m.is_empty() {
            maximal.insert(m);
        }
    }
    let mut simplices = BTreeSet::new();
    for m in &maximal {
        for mask in 1u64..(1u64 << m.len()) {
            simplices.insert((0..m.len()).filter(|k| mask >> k & 1 == 1).map(|k| m[k]).collect::<Vec<_>>());
        }
    }
    let dimension = simplices.iter().map(|s| s.len()).max().unwrap_or(1) - 1;
    NerveComplex { vertices: cover.len(), simplices, dimension }
}

/// ψ̄(v) lies in the open star of the nerve vertex i whenever v ∈ V_i and
/// ψ_i(v) > 0: the support of ψ̄(v) is a nerve simplex containing i.
pub fn star_containment(nerve: &NerveComplex, cover: &Cover, pu: &PartitionOfUnity, grid: &Grid) -> bool {
    let m = cover.membership(grid.vertex_count());
    grid.active_vertices().all(|v| {
        let support: Vec<usize> = (0..pu.psi.len()).filter(|&i| pu.psi[i][v] > 0.0).collect();
        m[v].iter().all(|&i| pu.psi[i][v] <= 0.0 || (support.contains(&i) && nerve.contains(&support)))
    })
}

/// width_0 = radius for connected spaces; for disconnected ones the largest
/// component radius, flagged in the report.
pub fn width0(field: &MetricField) -> Result<RadiusReport> {
    geodesy::radius(field)
}

/// Components of the preimages of ((i−⅔)R, (i+⅔)R) under d(p, ·).
pub fn slicing_cover(field: &MetricField, p: VertexId, r: f64) -> Result<Cover> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("slicing radius {r}")));
    }
    let grid = field.grid();
    let df = geodesy::distance_field(field, &[p])?;
    let fmax = grid.active_vertices().map(|v| df.dist[v]).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let mut sets = Vec::new();
    let top = (fmax / r + 1.0).ceil() as i64;
    for i in 0..=top {
        let (lo, hi) = ((i as f64 - 2.0 / 3.0) * r, (i as f64 + 2.0 / 3.0) * r);
        let members: Vec<bool> =
            (0..grid.vertex_count()).map(|v| grid.is_active(v) && df.dist[v] > lo && df.dist[v] < hi).collect();
        sets.extend(components(grid, &members));
    }
    Cover::new(field, sets)
}

/// Graph neighbours together with vertices sharing a cell.
fn closure_adjacency(grid: &Grid) -> Vec<Vec<VertexId>> {
    let mut adj: Vec<Vec<VertexId>> = (0..grid.vertex_count()).map(|v| grid.neighbors(v).map(|e| e.to).collect()).collect();
    let cells = grid.cells();
    for c in 0..cells.len() {
        let cs = cells.corners_of(c);
        for &a in cs {
            for &b in cs {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutStrategy {
    /// Level sets of d(p, ·) for the farthest point p of the offending
    /// component from its centre.
    FarthestPoint,
    /// Level sets of the distance to the component's frontier in the cut
    /// (or to face A, or to the farthest point when neither exists).
    FrontierSweep,
}

impl CutStrategy {
    pub fn name(self) -> &'static str {
        match self {
            CutStrategy::FarthestPoint => "farthest-point",
            CutStrategy::FrontierSweep => "frontier-sweep",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CutCurve {
    pub level: f64,
    pub length: f64,
    /// vol({r0 ≤ f ≤ r1} ∩ component) / (r1 − r0), which bounds the minimal
    /// level length by the coarea inequality.
    pub pigeonhole_bound: f64,
    /// Source vertex for point cuts.
    pub center: Option<VertexId>,
    pub segments: Vec<[[f64; 2]; 2]>,
}

#[derive(Clone, Debug)]
pub struct CutComponent {
    pub vertices: Vec<VertexId>,
    pub radius: f64,
    pub center: VertexId,
}

#[derive(Clone, Debug)]
pub struct SeparatingCut {
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    pub strategy: CutStrategy,
    pub curves: Vec<CutCurve>,
    /// Band vertices removed by the cuts.
    pub q: Vec<VertexId>,
    pub components: Vec<CutComponent>,
    pub iterations: usize,
    pub valid: bool,
}

impl SeparatingCut {
    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(|c| c.length).sum()
    }
}

fn check_surface(grid: &Grid) -> Result<()> {
    match grid.kind() {
        DomainKind::Square | DomainKind::Hexagon | DomainKind::Cylinder | DomainKind::Torus2 => Ok(()),
        other => Err(Error::WrongTopology { expected: "square, hexagon, cylinder or torus", found: other.to_string() }),
    }
}

/// Iterative R-separating cut from farthest-point level curves.
pub fn separating_cut(field: &MetricField, r: f64, r0: f64, r1: f64) -> Result<SeparatingCut> {
    separating_cut_with(field, r, r0, r1, CutStrategy::FarthestPoint, CUT_BUDGET, Exec::default())
}

pub fn separating_cut_with(
    field: &MetricField,
    r: f64,
    r0: f64,
    r1: f64,
    strategy: CutStrategy,
    budget: usize,
    exec: Exec,
) -> Result<SeparatingCut> {
    check_surface(field.grid())?;
    if !(r0 > 0.0 && r0 < r1 && r1 <= r) {
        return Err(Error::InvalidParameter(format!("need 0 < r0 < r1 ≤ R, got {r0}, {r1}, {r}")));
    }
    Ok(run_cut(field, r, r0, r1, strategy, budget, None, exec))
}

#[allow(clippy::too_many_arguments)]
fn run_cut(
    field: &MetricField,
    r: f64,
    r0: f64,
    r1: f64,
    strategy: CutStrategy,
    budget: usize,
    piece_limit: Option<f64>,
    exec: Exec,
) -> SeparatingCut {
    let grid = field.grid();
    let n = grid.vertex_count();
    let adj = closure_adjacency(grid);
    let cell_vol = measure::cell_volumes(field, exec);
    let mut in_q = vec![false; n];
    let active: Vec<bool> = (0..n).map(|v| grid.is_active(v)).collect();
    let mut comps: Vec<CutComponent> = components(grid, &active).into_iter().map(|c| make_component(field, c)).collect();
    let mut curves = Vec::new();
    let mut iterations = 0;
    let out = |valid: bool, comps: Vec<CutComponent>, curves: Vec<CutCurve>, in_q: &[bool], iterations| SeparatingCut {
        r,
        r0,
        r1,
        strategy,
        curves,
        q: (0..n).filter(|&v| in_q[v]).collect(),
        components: comps,
        iterations,
        valid,
    };
    loop {
        let Some(bad) = comps.iter().position(|c| c.radius >= r) else {
            return out(true, comps, curves, &in_q, iterations);
        };
        if iterations == budget {
            return out(false, comps, curves, &in_q, iterations);
        }
        iterations += 1;
        let comp = comps.remove(bad);
        let mut in_c = vec![false; n];
        for &v in &comp.vertices {
            in_c[v] = true;
        }
        let farthest = || {
            let df = dijkstra(field, &[(comp.center, 0.0)], f64::INFINITY);
            let mut best = comp.vertices[0];
            for &v in &comp.vertices {
                if df.dist[v] > df.dist[best] {
                    best = v;
                }
            }
            best
        };
        let (sources, center): (Vec<VertexId>, Option<VertexId>) = match strategy {
            CutStrategy::FarthestPoint => {
                let p = farthest();
                (vec![p], Some(p))
            }
            CutStrategy::FrontierSweep => {
                let frontier: Vec<VertexId> =
                    (0..n).filter(|&q| in_q[q] && adj[q].iter().any(|&w| in_c[w])).collect();
                let face: Vec<VertexId> = grid
                    .face_vertices(FaceLabel::new(0, false))
                    .map(|f| f.iter().cloned().filter(|&v| in_c[v]).collect())
                    .unwrap_or_default();
                if !frontier.is_empty() {
                    (frontier, None)
                } else if !face.is_empty() {
                    (face, None)
                } else {
                    let p = farthest();
                    (vec![p], Some(p))
                }
            }
        };
        let seeds: Vec<(VertexId, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
        let dist = dijkstra(field, &seeds, f64::INFINITY).dist;
        let f: Vec<f64> = (0..n).map(|v| if in_c[v] { dist[v] } else { f64::NAN }).collect();
        let (fmin, fmax) = comp.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(f[v]), b.max(f[v])));
        let levels: Vec<f64> = (0..LEVEL_SCAN).map(|k| r0 + (k + 1) as f64 / (LEVEL_SCAN + 1) as f64 * (r1 - r0)).collect();
        let lengths: Vec<Option<f64>> = exec.map(&levels, |&t| {
            if !(t > fmin && t <= fmax) {
                return None;
            }
            level_set_measure(field, &f, t).ok().map(|l| l.length)
        });
        let mut pick: Option<(usize, f64)> = None;
        for (k, l) in lengths.iter().enumerate() {
            if let Some(l) = *l {
                if pick.is_none_or(|(_, b)| l < b) {
                    pick = Some((k, l));
                }
            }
        }
        let Some((k, length)) = pick else {
            comps.push(comp);
            return out(false, comps, curves, &in_q, iterations);
        };
        let t = levels[k];
        let band: Vec<VertexId> = comp
            .vertices
            .iter()
            .cloned()
            .filter(|&v| f[v] >= t && adj[v].iter().any(|&w| in_c[w] && f[w] < t))
            .collect();
        let cells = grid.cells();
        let mut band_vol = Vec::new();
        for c in 0..cells.len() {
            let cs = cells.corners_of(c);
            if cs.iter().all(|&v| in_c[v]) {
                let lo = cs.iter().map(|&v| f[v]).fold(f64::INFINITY, f64::min);
                let hi = cs.iter().map(|&v| f[v]).fold(f64::NEG_INFINITY, f64::max);
                if lo <= r1 && hi >= r0 {
                    band_vol.push(cell_vol[c]);
                }
            }
        }
        let segments = level_set_measure(field, &f, t).map(|l| l.segments).unwrap_or_default();
        curves.push(CutCurve {
            level: t,
            length,
            pigeonhole_bound: crate::exec::pairwise_sum(&band_vol) / (r1 - r0),
            center,
            segments,
        });
        for &v in &band {
            in_q[v] = true;
            in_c[v] = false;
        }
        if let Some(limit) = piece_limit {
            let q_pieces = components(grid, &in_q);
            if q_pieces.iter().any(|p| set_radius(field, p).0 >= limit) {
                comps.push(comp);
                return out(false, comps, curves, &in_q, iterations);
            }
        }
        for c in components(grid, &in_c) {
            comps.push(make_component(field, c));
        }
    }
}

fn make_component(field: &MetricField, vertices: Vec<VertexId>) -> CutComponent {
    let (radius, center) = set_radius(field, &vertices);
    CutComponent { vertices, radius, center }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reason {
    Uncovered(VertexId),
    EmptySet(usize),
    InactiveVertex(usize, VertexId),
    Multiplicity { found: usize, allowed: usize },
    Radius { set: usize, eccentricity: f64 },
    CellNotContained(usize),
    HashMismatch,
    CutFailed(String),
}

impl std::fmt::Display for Reason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reason::Uncovered(v) => write!(f, "uncovered vertex {v}"),
            Reason::EmptySet(i) => write!(f, "set {i} is empty"),
            Reason::InactiveVertex(i, v) => write!(f, "set {i} holds inactive vertex {v}"),
            Reason::Multiplicity { found, allowed } => write!(f, "multiplicity {found} > {allowed}"),
            Reason::Radius { set, eccentricity } => write!(f, "set {set} eccentricity {eccentricity} not below R"),
            Reason::CellNotContained(c) => write!(f, "cell {c} lies in no single set"),
            Reason::HashMismatch => write!(f, "field hash mismatch"),
            Reason::CutFailed(s) => write!(f, "cut failed: {s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WidthCertificate {
    /// Certified width index k: multiplicity ≤ k + 1.
    pub n_width: usize,
    pub r: f64,
    pub cover: Cover,
    pub field_hash: String,
    pub valid: bool,
    pub reasons: Vec<Reason>,
    /// How the cover was built.
    pub method: String,
}

/// Independent check of a certificate: recomputes eccentricities from the
/// stored centres with fresh searches, multiplicity, coverage and cell
/// containment. Returns the list of violations (empty means valid).
pub fn validate_certificate(field: &MetricField, cert: &WidthCertificate) -> Vec<Reason> {
    let grid = field.grid();
    let n = grid.vertex_count();
    let mut reasons = Vec::new();
    if cert.field_hash != field.hash_hex() {
        reasons.push(Reason::HashMismatch);
    }
    let cover = &cert.cover;
    let mut count = vec![0usize; n];
    let mut sets_ok = cover.centers.len() == cover.sets.len();
    for (i, s) in cover.sets.iter().enumerate() {
        if s.is_empty() {
            reasons.push(Reason::EmptySet(i));
            sets_ok = false;
        }
        for &v in s {
            if v >= n || !grid.is_active(v) {
                reasons.push(Reason::InactiveVertex(i, v));
                sets_ok = false;
            } else {
                count[v] += 1;
            }
        }
    }
    if let Some(v) = grid.active_vertices().find(|&v| count[v] == 0) {
        reasons.push(Reason::Uncovered(v));
    }
    let mult = count.iter().cloned().max().unwrap_or(0);
    if mult > cert.n_width + 1 {
        reasons.push(Reason::Multiplicity { found: mult, allowed: cert.n_width + 1 });
    }
    if !sets_ok {
        return reasons;
    }
    for (i, s) in cover.sets.iter().enumerate() {
        let c = cover.centers[i];
        let ecc = if c < n && grid.is_active(c) {
            let df = dijkstra(field, &[(c, 0.0)], f64::INFINITY);
            s.iter().map(|&v| df.dist[v]).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        if !(ecc < cert.r) {
            reasons.push(Reason::Radius { set: i, eccentricity: ecc });
        }
    }
    let members: Vec<Vec<VertexId>> = cover.sets.clone();
    let mut m: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in members.iter().enumerate() {
        for &v in s {
            m[v].push(i);
        }
    }
    let cells = grid.cells();
    for c in 0..cells.len() {
        let cs = cells.corners_of(c);
        if cs.iter().any(|&v| !grid.is_active(v)) {
            continue;
        }
        let first = &m[cs[0]];
        let common = first.iter().any(|i| cs[1..].iter().all(|&v| m[v].binary_search(i).is_ok()));
        if !common {
            reasons.push(Reason::CellNotContained(c));
            break;
        }
    }
    reasons
}

fn certificate(field: &MetricField, r: f64, cover: Cover, method: String) -> WidthCertificate {
    let mut cert = WidthCertificate {
        n_width: field.dim() - 1,
        r,
        cover,
        field_hash: field.hash_hex(),
        valid: false,
        reasons: vec![],
        method,
    };
    cert.reasons = validate_certificate(field, &cert);
    cert.valid = cert.reasons.is_empty();
    cert
}

/// Turns a successful cut into a cover: thickened components of the cut
/// band plus the complement components.
fn cover_from_cut(field: &MetricField, cut: &SeparatingCut, r: f64) -> Result<Cover> {
    let grid = field.grid();
    let n = grid.vertex_count();
    let adj = closure_adjacency(grid);
    let mut in_q = vec![false; n];
    for &q in &cut.q {
        in_q[q] = true;
    }
    let pieces = components(grid, &in_q);
    let mut sets = Vec::new();
    for (k, piece) in pieces.iter().enumerate() {
        let (rad, _) = set_radius(field, piece);
        let seeds: Vec<(VertexId, f64)> = piece.iter().map(|&v| (v, 0.0)).collect();
        let df = dijkstra(field, &seeds, f64::INFINITY);
        let others: Vec<VertexId> = pieces.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, p)| p.iter().cloned()).collect();
        let gap = others.iter().map(|&v| df.dist[v]).fold(f64::INFINITY, f64::min);
        // thickening radius: a tenth of the gap to the rest of the band
        let rho = (gap / 10.0).min((r - rad) / 2.0).max(0.0);
        let mut set: Vec<VertexId> = piece.clone();
        for v in grid.active_vertices() {
            if !in_q[v] && df.dist[v] < rho {
                set.push(v);
            }
        }
        for &p in piece {
            set.extend(adj[p].iter().cloned().filter(|&w| !in_q[w] && grid.is_active(w)));
        }
        sets.push(set);
    }
    let rest: Vec<bool> = (0..n).map(|v| grid.is_active(v) && !in_q[v]).collect();
    sets.extend(components(grid, &rest));
    Cover::new(field, sets)
}

/// Width upper-bound certificate for surfaces: multiplicity ≤ 2 and all set
/// radii < R. Tries the trivial cover, then separating cuts with targets
/// R·0.92^k and several strategies. Never returns a certificate marked valid
/// that fails [`validate_certificate`].
pub fn width_upper_bound(field: &MetricField, r: f64) -> Result<WidthCertificate> {
    width_upper_bound_with(field, r, Exec::default())
}

pub fn width_upper_bound_with(field: &MetricField, r: f64, exec: Exec) -> Result<WidthCertificate> {
    let grid = field.grid();
    check_surface(grid)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("width target {r}")));
    }
    // trivial cover: one set per component
    let active: Vec<bool> = (0..grid.vertex_count()).map(|v| grid.is_active(v)).collect();
    let comps = components(grid, &active);
    let trivial = Cover::new(field, comps)?;
    if trivial.max_radius() < r {
        return Ok(certificate(field, r, trivial, "trivial".into()));
    }
    let strategies = [(CutStrategy::FarthestPoint, 0.5, 1.0), (CutStrategy::FarthestPoint, 0.25, 0.5), (CutStrategy::FrontierSweep, 0.5, 1.0)];
    let mut last = Reason::CutFailed("no attempt".into());
    for k in 0..LADDER_STEPS {
        let target = r * LADDER_FACTOR.powi(k as i32);
        for &(strategy, a, b) in &strategies {
            let cut = run_cut(field, target, a * target, b * target, strategy, CUT_BUDGET, Some(target), exec);
            if !cut.valid {
                last = Reason::CutFailed(format!("{} at target {target:.6}", strategy.name()));
                continue;
            }
            let cover = match cover_from_cut(field, &cut, r) {
                Ok(c) => c,
                Err(e) => {
                    last = Reason::CutFailed(e.to_string());
                    continue;
                }
            };
            let method = format!("{} target {target:.6} ({} cuts)", strategy.name(), cut.curves.len());
            let cert = certificate(field, r, cover, method);
            if cert.valid {
                return Ok(cert);
            }
            last = cert.reasons[0].clone();
        }
    }
    let mut cert = certificate(field, r, trivial, "none".into());
    cert.valid = false;
    cert.reasons.insert(0, last);
    Ok(cert)
}

#[derive(Clone, Debug)]
pub struct WidthVolumeReport {
    pub vol: f64,
    /// n·ⁿ√vol.
    pub r_star: f64,
    /// ⁿ√(n!/2)·ⁿ√vol.
    pub r_refined: f64,
    pub at_r_star: WidthCertificate,
    pub at_slack: WidthCertificate,
}

pub fn check_width_volume(field: &MetricField) -> Result<WidthVolumeReport> {
    let n = field.dim();
    let vol = measure::volume(field);
    let root = vol.powf(1.0 / n as f64);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let r_star = n as f64 * root;
    Ok(WidthVolumeReport {
        vol,
        r_star,
        r_refined: (fact / 2.0).powf(1.0 / n as f64) * root,
        at_r_star: width_upper_bound(field, r_star)?,
        at_slack: width_upper_bound(field, 1.05 * r_star)?,
    })
}

#[derive(Clone, Debug)]
pub struct SysWidthReport {
    pub sys: f64,
    pub vol: f64,
    /// 4·n·ⁿ√vol.
    pub vol_bound: f64,
    pub vol_ok: bool,
    /// (R_cert, sys ≤ 6·R, sys ≤ 4·R) for each valid certificate.
    pub width_checks: Vec<(f64, bool, bool)>,
    pub pass: bool,
}

/// Gross systolic inequalities against volume and certified width bounds.
/// Invalid certificates are ignored.
pub fn check_sys_width(field: &MetricField, certs: &[WidthCertificate]) -> Result<SysWidthReport> {
    let n = field.dim();
    let sys = geodesy::systole(field)?.length;
    let vol = measure::volume(field);
    let vol_bound = 4.0 * n as f64 * vol.powf(1.0 / n as f64);
    let width_checks: Vec<(f64, bool, bool)> =
        certs.iter().filter(|c| c.valid).map(|c| (c.r, sys <= 6.0 * c.r, sys <= 4.0 * c.r)).collect();
    let vol_ok = sys <= vol_bound;
    let pass = vol_ok && width_checks.iter().all(|w| w.1);
    Ok(SysWidthReport { sys, vol, vol_bound, vol_ok, width_checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainTopology;
    use crate::metric::{constant_metric, flat_metric, random_spd_metric};
    use std::sync::Arc;

    fn grid(t: DomainTopology, n: usize, k: usize) -> Arc<Grid> {
        Arc::new(Grid::new(t, n, k).unwrap())
    }

    fn strips(g: &Grid, cuts: &[f64]) -> Vec<Vec<VertexId>> {
        // closed vertical strips [a, b] in x
        cuts.windows(2)
            .map(|w| g.active_vertices().filter(|&v| g.coords(v)[0] >= w[0] - 1e-12 && g.coords(v)[0] <= w[1] + 1e-12).collect())
            .collect()
    }

    #[test]
    fn single_set_partition() {
        let m = flat_metric(grid(DomainTopology::square(), 9, 2));
        let all: Vec<VertexId> = m.grid().active_vertices().collect();
        let cover = Cover::new(&m, vec![all]).unwrap();
        let pu = partition_of_unity(&m, &cover).unwrap();
        assert!(pu.psi[0].iter().all(|&x| x == 1.0));
        assert_eq!(nerve(&cover, m.grid()).dimension, 0);
    }

    #[test]
    fn overlapping_halves() {
        let g = grid(DomainTopology::square(), 17, 2);
        let m = flat_metric(g.clone());
        let cover = Cover::new(&m, strips(&g, &[0.0, 0.5625, 1.0])).unwrap();
        let halves = vec![
            g.active_vertices().filter(|&v| g.coords(v)[0] <= 0.6).collect::<Vec<_>>(),
            g.active_vertices().filter(|&v| g.coords(v)[0] >= 0.4).collect::<Vec<_>>(),
        ];
        let cover2 = Cover::new(&m, halves).unwrap();
        for c in [cover, cover2] {
            let pu = partition_of_unity(&m, &c).unwrap();
            assert!(pu.sum_defect(&g) <= 1e-12);
            assert!(pu.support_exact(&g, &c));
            let nv = nerve(&c, &g);
            assert_eq!(nv.dimension + 1, c.multiplicity);
            assert!(star_containment(&nv, &c, &pu, &g));
        }
    }

    #[test]
    fn nerve_shapes() {
        let g = grid(DomainTopology::interval(), 31, 1);
        let m = flat_metric(g.clone());
        let x = |v: VertexId| g.coords(v)[0];
        // two disjoint halves
        let halves = vec![
            g.active_vertices().filter(|&v| x(v) < 0.5).collect(),
            g.active_vertices().filter(|&v| x(v) >= 0.5).collect(),
        ];
        let nv = nerve(&Cover::new(&m, halves).unwrap(), &g);
        assert_eq!((nv.count(0), nv.count(1)), (2, 0));
        // three pairwise overlapping sets with no triple point
        let sets = vec![
            g.active_vertices().filter(|&v| x(v) <= 0.4).collect(),
            g.active_vertices().filter(|&v| x(v) >= 0.3 && x(v) <= 0.7).collect(),
            g.active_vertices().filter(|&v| x(v) >= 0.6 || x(v) <= 0.1).collect(),
        ];
        let c = Cover::new(&m, sets).unwrap();
        let nv = nerve(&c, &g);
        assert!(nv.closed_under_faces());
        assert_eq!((nv.count(0), nv.count(1), nv.count(2)), (3, 3, 0));
        assert_eq!(nv.dimension + 1, c.multiplicity);
    }

    #[test]
    fn three_strips_no_triangle() {
        // annular slicing of an interval-like strip produces a path nerve
        let g = grid(DomainTopology::interval(), 101, 1);
        let m = flat_metric(g.clone());
        let c = slicing_cover(&m, 0, 0.4).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.multiplicity, 2);
        let nv = nerve(&c, &g);
        assert_eq!((nv.count(0), nv.count(1), nv.count(2)), (4, 3, 0));
    }

    #[test]
    fn slicing_square_corner() {
        let g = grid(DomainTopology::square(), 33, 3);
        let m = random_spd_metric(g.clone(), 4, 0.5, 2.0).unwrap();
        let c = slicing_cover(&m, 0, 0.3).unwrap();
        assert!(c.multiplicity <= 2);
        let nv = nerve(&c, &g);
        assert!(nv.dimension <= 1);
    }

    #[test]
    fn width0_values() {
        let m = flat_metric(grid(DomainTopology::interval(), 101, 1));
        assert!((width0(&m).unwrap().radius - 0.5).abs() < 1e-12);
        let m = flat_metric(grid(DomainTopology::square(), 33, 3));
        let w = width0(&m).unwrap().radius;
        assert!((w - 0.5f64.sqrt()).abs() < 0.01, "{w}");
        // interval of length 0.3: VolPro(0.5) = 0.3 < 0.5, so width < 0.5
        let short = constant_metric(grid(DomainTopology::interval(), 61, 1), &[0.09]).unwrap();
        assert!(measure::volume(&short) < 0.5);
        assert!(width0(&short).unwrap().radius < 0.5);
    }

    #[test]
    fn strip_cover_validates() {
        let g = grid(DomainTopology::square(), 49, 3);
        let m = flat_metric(g.clone());
        let sets = strips(&g, &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let cover = Cover::new(&m, sets).unwrap();
        assert_eq!(cover.multiplicity, 2);
        let cert = certificate(&m, 0.55, cover.clone(), "strips".into());
        assert!(cert.valid, "{:?}", cert.reasons);
        // two half strips are too wide: radius √(1/16 + 1/4) ≈ 0.559
        let halves = Cover::new(&m, strips(&g, &[0.0, 0.5, 1.0])).unwrap();
        assert!(halves.max_radius() > 0.55);
        // disjoint sets fail cell containment
        let disjoint: Vec<Vec<VertexId>> = vec![
            g.active_vertices().filter(|&v| g.coords(v)[0] < 0.5).collect(),
            g.active_vertices().filter(|&v| g.coords(v)[0] >= 0.5).collect(),
        ];
        let bad = certificate(&m, 10.0, Cover::new(&m, disjoint).unwrap(), "halves".into());
        assert!(bad.reasons.iter().any(|r| matches!(r, Reason::CellNotContained(_))));
    }

    #[test]
    fn tampered_certificate_rejected() {
        let g = grid(DomainTopology::square(), 25, 2);
        let m = flat_metric(g.clone());
        let mut cert = certificate(&m, 0.8, Cover::new(&m, strips(&g, &[0.0, 0.5, 1.0])).unwrap(), "strips".into());
        assert!(cert.valid);
        cert.r = 0.3;
        assert!(!validate_certificate(&m, &cert).is_empty());
        cert.r = 0.8;
        cert.cover.sets[0].pop();
        cert.cover.sets[1].retain(|&v| g.coords(v)[0] > 0.6);
        assert!(!validate_certificate(&m, &cert).is_empty());
    }

    #[test]
    fn square_cut() {
        let m = flat_metric(grid(DomainTopology::square(), 49, 3));
        let cut = separating_cut(&m, 0.8, 0.4, 0.8).unwrap();
        assert!(cut.valid);
        assert!(cut.curves.len() <= 2, "{}", cut.curves.len());
        for c in &cut.curves {
            assert!(c.length <= 1.0 / 0.4 + 1e-9);
            assert!(c.length <= c.pigeonhole_bound + 1e-9);
        }
        for comp in &cut.components {
            assert!(set_radius(&m, &comp.vertices).0 < 0.8);
        }
        let none = separating_cut(&m, 1.0, 0.5, 1.0).unwrap();
        assert!(none.valid && none.curves.is_empty());
    }

    #[test]
    fn width_square() {
        let m = flat_metric(grid(DomainTopology::square(), 49, 3));
        let good = width_upper_bound(&m, 0.55).unwrap();
        assert!(good.valid, "{:?}", good.reasons);
        assert!(good.cover.multiplicity <= 2);
        assert!(validate_certificate(&m, &good).is_empty());
        let bad = width_upper_bound(&m, 0.2).unwrap();
        assert!(!bad.valid);
        let trivial = width_upper_bound(&m, 2.0).unwrap();
        assert!(trivial.valid && trivial.cover.len() == 1);
    }

    #[test]
    fn sys_width_torus() {
        let m = flat_metric(grid(DomainTopology::torus2(), 32, 3));
        let wv = check_width_volume(&m).unwrap();
        assert!((wv.r_star - 2.0).abs() < 1e-12);
        assert!(wv.at_r_star.valid);
        let r = check_sys_width(&m, &[wv.at_r_star.clone()]).unwrap();
        assert!(r.pass);
        assert!((r.sys - 1.0).abs() < 1e-12);
    }
}
