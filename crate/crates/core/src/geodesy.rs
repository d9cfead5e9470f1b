//! Graph distances, face distances, shortest loops in homotopy classes,
//! systoles and radii.
//!
//! All searches are exact Dijkstra (or A* with a consistent heuristic) on the
//! weighted stencil graph. Heap ties are broken by vertex index, so results do
//! not depend on the execution policy.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{DomainKind, FaceLabel, Grid, VertexId};
use crate::linalg;
use crate::metric::{MetricField, Polyline};

pub const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct HeapItem {
    key: f64,
    id: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.id.cmp(&self.id))
    }
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    pub sources: Vec<VertexId>,
    pub dist: Vec<f64>,
    pub parent: Vec<usize>,
}

impl DistanceField {
    pub fn get(&self, v: VertexId) -> f64 {
        self.dist[v]
    }

    /// Vertex sequence from a source to `v`, empty when unreachable.
    pub fn path_to(&self, v: VertexId) -> Vec<VertexId> {
        if !self.dist[v].is_finite() {
            return vec![];
        }
        let mut out = vec![v];
        let mut cur = v;
        while self.parent[cur] != NO_PARENT {
            cur = self.parent[cur];
            out.push(cur);
        }
        out.reverse();
        out
    }

    pub fn max_finite(&self) -> f64 {
        self.dist.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }

    pub fn min_finite(&self) -> f64 {
        self.dist.iter().cloned().filter(|d| d.is_finite()).fold(f64::INFINITY, f64::min)
    }
}

/// Multi-source Dijkstra with per-seed initial values. Vertices whose
/// distance would exceed `limit` are left at infinity.
pub fn dijkstra(field: &MetricField, seeds: &[(VertexId, f64)], limit: f64) -> DistanceField {
    let grid = field.grid();
    let n = grid.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![NO_PARENT; n];
    let mut heap = BinaryHeap::new();
    for &(s, d0) in seeds {
        if grid.is_active(s) && d0 < dist[s] {
            dist[s] = d0;
            heap.push(HeapItem { key: d0, id: s });
        }
    }
    let mut done = vec![false; n];
    while let Some(HeapItem { key, id: v }) = heap.pop() {
        if done[v] || key > dist[v] {
            continue;
        }
        if key > limit {
            break;
        }
        done[v] = true;
        for e in grid.neighbors(v) {
            let nd = key + field.edge_length_at(e.index);
            if nd < dist[e.to] {
                dist[e.to] = nd;
                parent[e.to] = v;
                heap.push(HeapItem { key: nd, id: e.to });
            }
        }
    }
    for v in 0..n {
        if !done[v] {
            dist[v] = f64::INFINITY;
            parent[v] = NO_PARENT;
        }
    }
    let mut sources: Vec<VertexId> = seeds.iter().map(|s| s.0).collect();
    sources.sort_unstable();
    sources.dedup();
    DistanceField { sources, dist, parent }
}

pub fn distance_field(field: &MetricField, sources: &[VertexId]) -> Result<DistanceField> {
    if sources.is_empty() {
        return Err(Error::EmptySources);
    }
    let seeds: Vec<(VertexId, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
    Ok(dijkstra(field, &seeds, f64::INFINITY))
}

/// Largest violation of `dist(w) ≤ dist(v) + len(v,w)` over all edges.
pub fn relaxation_defect(field: &MetricField, df: &DistanceField) -> f64 {
    let grid = field.grid();
    let mut worst: f64 = 0.0;
    for v in grid.active_vertices() {
        if !df.dist[v].is_finite() {
            continue;
        }
        for e in grid.neighbors(v) {
            worst = worst.max(df.dist[e.to] - df.dist[v] - field.edge_length_at(e.index));
        }
    }
    worst
}

pub fn face_distance_field(field: &MetricField, face: FaceLabel) -> Result<DistanceField> {
    let verts = field.grid().face_vertices(face)?;
    distance_field(field, verts)
}

/// Distance between a face and its opposite face.
pub fn face_distance(field: &MetricField, a: FaceLabel, b: FaceLabel) -> Result<f64> {
    let grid = field.grid();
    if a.opposite() != b {
        return Err(Error::NotOpposite(a.to_string(), b.to_string()));
    }
    let fb = grid.face_vertices(b)?;
    let df = face_distance_field(field, a)?;
    Ok(fb.iter().map(|&v| df.dist[v]).fold(f64::INFINITY, f64::min))
}

/// Shortest-path length between two vertices.
pub fn distance_between(field: &MetricField, a: VertexId, b: VertexId) -> f64 {
    let df = dijkstra_until(field, a, &[b]);
    df.dist[b]
}

/// Dijkstra from `s` that stops once every target is settled.
fn dijkstra_until(field: &MetricField, s: VertexId, targets: &[VertexId]) -> DistanceField {
    let grid = field.grid();
    let n = grid.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![NO_PARENT; n];
    let mut done = vec![false; n];
    let mut is_target = vec![false; n];
    let mut remaining = 0;
    for &t in targets {
        if !is_target[t] {
            is_target[t] = true;
            remaining += 1;
        }
    }
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapItem { key: 0.0, id: s });
    while let Some(HeapItem { key, id: v }) = heap.pop() {
        if done[v] || key > dist[v] {
            continue;
        }
        done[v] = true;
        if is_target[v] {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for e in grid.neighbors(v) {
            let nd = key + field.edge_length_at(e.index);
            if nd < dist[e.to] {
                dist[e.to] = nd;
                parent[e.to] = v;
                heap.push(HeapItem { key: nd, id: e.to });
            }
        }
    }
    for v in 0..n {
        if !done[v] {
            dist[v] = f64::INFINITY;
        }
    }
    DistanceField { sources: vec![s], dist, parent }
}

/// Homotopy class of a loop witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoopClass {
    /// Deck translation vector on the torus or cylinder.
    Lattice(Vec<i64>),
    /// Path from x to ι(x) on the sphere double cover.
    Antipodal,
}

#[derive(Clone, Debug)]
pub struct LoopWitness {
    pub class: LoopClass,
    pub base: VertexId,
    pub polyline: Polyline,
    pub length: f64,
}

/// Constant form H with H ≤ g(v) at every vertex (Loewner order), taken as a
/// multiple of the mean tensor. √(ΔᵀHΔ) is then a consistent A* heuristic.
fn lower_form(field: &MetricField) -> Vec<f64> {
    let grid = field.grid();
    let n = grid.dim();
    let mut mean = vec![0.0; n * n];
    let mut count = 0.0;
    for v in grid.active_vertices() {
        for (m, t) in mean.iter_mut().zip(field.tensor(v)) {
            *m += t;
        }
        count += 1.0;
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let l = match linalg::cholesky(&mean, n) {
        Some(l) => l,
        None => return vec![0.0; n * n],
    };
    let mut c = f64::INFINITY;
    for v in grid.active_vertices() {
        let t = field.tensor(v);
        // columns of L⁻¹ T L⁻ᵀ
        let mut y = vec![0.0; n * n];
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| t[i * n + j]).collect();
            let s = linalg::forward_solve(&l, n, &col);
            for i in 0..n {
                y[i * n + j] = s[i];
            }
        }
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| y[i * n + j]).collect();
            let s = linalg::forward_solve(&l, n, &row);
            for j in 0..n {
                m[i * n + j] = s[j];
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
                m[i * n + j] = avg;
                m[j * n + i] = avg;
            }
        }
        c = c.min(linalg::min_eigenvalue(&m, n));
    }
    let c = (c * (1.0 - 1e-9)).max(0.0);
    mean.iter().map(|x| x * c).collect()
}

fn form_norm(h: &[f64], n: usize, d: &[f64]) -> f64 {
    linalg::quad_form(h, n, d).max(0.0).sqrt()
}

/// Lifted search state storage: dense over a window of deck offsets, hashed
/// outside it.
struct LiftedStore {
    v_count: usize,
    lo: [i64; 2],
    size: [i64; 2],
    dense: Vec<u32>,
    overflow: HashMap<(usize, i64, i64), u32>,
}

impl LiftedStore {
    fn new(v_count: usize, lo: [i64; 2], hi: [i64; 2]) -> Self {
        let size = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1];
        LiftedStore {
            v_count,
            lo,
            size,
            dense: vec![0; v_count * (size[0] * size[1]) as usize],
            overflow: HashMap::new(),
        }
    }

    fn dense_index(&self, v: usize, o: [i64; 2]) -> Option<usize> {
        let a = o[0] - self.lo[0];
        let b = o[1] - self.lo[1];
        if a < 0 || b < 0 || a >= self.size[0] || b >= self.size[1] {
            None
        } else {
            Some(v + self.v_count * (a + self.size[0] * b) as usize)
        }
    }

    fn get(&self, v: usize, o: [i64; 2]) -> Option<u32> {
        match self.dense_index(v, o) {
            Some(i) => self.dense[i].checked_sub(1),
            None => self.overflow.get(&(v, o[0], o[1])).copied(),
        }
    }

    fn set(&mut self, v: usize, o: [i64; 2], slot: u32) {
        match self.dense_index(v, o) {
            Some(i) => self.dense[i] = slot + 1,
            None => {
                self.overflow.insert((v, o[0], o[1]), slot);
            }
        }
    }
}

struct Slot {
    v: usize,
    off: [i64; 2],
    g: f64,
    parent: u32,
    closed: bool,
}

/// A* in the universal cover from (base, 0) to (base, cls). Returns `None`
/// when every remaining state has a lower bound above `bound`.
fn lifted_search(
    field: &MetricField,
    h: &[f64],
    base: VertexId,
    cls: [i64; 2],
    bound: f64,
) -> Option<(f64, Vec<(VertexId, [i64; 2])>)> {
    let grid = field.grid();
    let n = grid.dim();
    let start = grid.coords(base);
    let target: Vec<f64> = (0..n).map(|a| start[a] + if a < 2 { cls[a] as f64 } else { 0.0 }).collect();
    let heur = |v: VertexId, off: [i64; 2]| -> f64 {
        let p = grid.coords(v);
        let d: Vec<f64> = (0..n).map(|a| target[a] - p[a] - if a < 2 { off[a] as f64 } else { 0.0 }).collect();
        form_norm(h, n, &d)
    };
    let lo = [cls[0].min(0) - 1, cls[1].min(0) - 1];
    let hi = [cls[0].max(0) + 1, cls[1].max(0) + 1];
    let mut store = LiftedStore::new(grid.vertex_count(), lo, hi);
    let mut slots: Vec<Slot> = Vec::new();
    let mut heap = BinaryHeap::new();
    slots.push(Slot { v: base, off: [0, 0], g: 0.0, parent: u32::MAX, closed: false });
    store.set(base, [0, 0], 0);
    heap.push(HeapItem { key: heur(base, [0, 0]), id: 0 });
    while let Some(HeapItem { key, id }) = heap.pop() {
        let s = id;
        if slots[s].closed {
            continue;
        }
        if key > bound {
            return None;
        }
        let (v, off, g) = (slots[s].v, slots[s].off, slots[s].g);
        if v == base && off == cls {
            let mut path = Vec::new();
            let mut cur = s as u32;
            while cur != u32::MAX {
                let sl = &slots[cur as usize];
                path.push((sl.v, sl.off));
                cur = sl.parent;
            }
            path.reverse();
            return Some((g, path));
        }
        slots[s].closed = true;
        for e in grid.neighbors(v) {
            let noff = [off[0] + e.wrap[0] as i64, off[1] + e.wrap[1] as i64];
            let ng = g + field.edge_length_at(e.index);
            match store.get(e.to, noff) {
                Some(t) => {
                    let t = t as usize;
                    if !slots[t].closed && ng < slots[t].g {
                        slots[t].g = ng;
                        slots[t].parent = s as u32;
                        heap.push(HeapItem { key: ng + heur(e.to, noff), id: t });
                    }
                }
                None => {
                    let t = slots.len();
                    slots.push(Slot { v: e.to, off: noff, g: ng, parent: s as u32, closed: false });
                    store.set(e.to, noff, t as u32);
                    heap.push(HeapItem { key: ng + heur(e.to, noff), id: t });
                }
            }
        }
    }
    None
}

fn lifted_polyline(grid: &Grid, path: &[(VertexId, [i64; 2])]) -> Polyline {
    let n = grid.dim();
    let pts = path
        .iter()
        .map(|&(v, off)| {
            let p = grid.coords(v);
            (0..n).map(|a| p[a] + if a < 2 { off[a] as f64 } else { 0.0 }).collect()
        })
        .collect();
    Polyline::new(pts)
}

struct SharedMin(AtomicU64);

impl SharedMin {
    fn new(x: f64) -> Self {
        SharedMin(AtomicU64::new(x.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(AtomicOrdering::Relaxed))
    }

    // nonnegative floats order like their bit patterns
    fn lower(&self, x: f64) {
        self.0.fetch_min(x.to_bits(), AtomicOrdering::Relaxed);
    }
}

/// Search over base vertices, pruned by `bound`; returns the best
/// (length, base, path) in (length, vertex index) order.
fn best_lifted(
    field: &MetricField,
    h: &[f64],
    cls: [i64; 2],
    bound: f64,
    exec: Exec,
) -> Option<(f64, VertexId, Vec<(VertexId, [i64; 2])>)> {
    let grid = field.grid();
    // A loop moving k ≠ 0 periods along an axis crosses index 0 of that axis
    // with steps of at most `reach`, so it visits one of the first `reach`
    // layers; any vertex on a loop can serve as its base.
    let axis = if cls[0] != 0 { 0 } else { 1 };
    let reach = grid.stencil_order().reach() as i64;
    let bases: Vec<VertexId> = grid
        .active_vertices()
        .filter(|&v| grid.lattice_index(v)[axis] < reach)
        .collect();
    let shared = SharedMin::new(bound);
    let results = exec.map(&bases, |&b| {
        let r = lifted_search(field, h, b, cls, shared.get());
        if let Some((len, _)) = &r {
            shared.lower(*len);
        }
        r.map(|(len, path)| (len, b, path))
    });
    results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

fn loop_grid_check(grid: &Grid, cls: &[i64]) -> Result<[i64; 2]> {
    match grid.kind() {
        DomainKind::Torus2 => {
            if cls.len() != 2 {
                return Err(Error::InvalidParameter("torus classes have two components".into()));
            }
            if cls == [0, 0] {
                return Err(Error::TrivialClass);
            }
            Ok([cls[0], cls[1]])
        }
        DomainKind::Cylinder => {
            if cls.len() != 1 {
                return Err(Error::InvalidParameter("cylinder classes have one component".into()));
            }
            if cls[0] == 0 {
                return Err(Error::TrivialClass);
            }
            Ok([cls[0], 0])
        }
        other => Err(Error::WrongTopology { expected: "torus2 or cylinder", found: other.to_string() }),
    }
}

pub fn shortest_loop_in_class(field: &MetricField, cls: &[i64]) -> Result<LoopWitness> {
    shortest_loop_in_class_with(field, cls, Exec::default())
}

pub fn shortest_loop_in_class_with(field: &MetricField, cls: &[i64], exec: Exec) -> Result<LoopWitness> {
    let c = loop_grid_check(field.grid(), cls)?;
    let h = lower_form(field);
    let (length, base, path) = best_lifted(field, &h, c, f64::INFINITY, exec)
        .ok_or_else(|| Error::InvalidParameter("no loop found in class".into()))?;
    Ok(LoopWitness {
        class: LoopClass::Lattice(cls.to_vec()),
        base,
        polyline: lifted_polyline(field.grid(), &path),
        length,
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn systole(field: &MetricField) -> Result<LoopWitness> {
    systole_with(field, Exec::default())
}

pub fn systole_with(field: &MetricField, exec: Exec) -> Result<LoopWitness> {
    let grid = field.grid();
    match grid.kind() {
        DomainKind::Torus2 => torus_systole(field, exec),
        DomainKind::Cylinder => shortest_loop_in_class_with(field, &[1], exec),
        DomainKind::Rp2 => min_antipodal_distance(field, exec),
        other => Err(Error::SimplyConnected(other.to_string())),
    }
}

fn torus_systole(field: &MetricField, exec: Exec) -> Result<LoopWitness> {
    let h = lower_form(field);
    let lam = linalg::min_eigenvalue(&h, 2).max(0.0).sqrt();
    let mut best: Option<(f64, [i64; 2], VertexId, Vec<(VertexId, [i64; 2])>)> = None;
    let mut done_window = 0i64;
    let mut window = 2i64;
    loop {
        // primitive classes, one per ± pair, not yet visited
        let mut classes: Vec<([i64; 2], f64)> = Vec::new();
        for p in -window..=window {
            for q in -window..=window {
                if p.abs().max(q.abs()) <= done_window || gcd(p, q) != 1 {
                    continue;
                }
                if p < 0 || (p == 0 && q < 0) {
                    continue;
                }
                let lb = form_norm(&h, 2, &[p as f64, q as f64]);
                classes.push(([p, q], lb));
            }
        }
        classes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for (cls, lb) in classes {
            let incumbent = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            if lb > incumbent {
                continue;
            }
            if let Some((len, base, path)) = best_lifted(field, &h, cls, incumbent, exec) {
                let better = match &best {
                    None => true,
                    Some(b) => len < b.0 || (len == b.0 && (cls, base) < (b.1, b.2)),
                };
                if better {
                    best = Some((len, cls, base, path));
                }
            }
        }
        done_window = window;
        let incumbent = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        // every class outside the window has chart norm ≥ window + 1
        if lam * (window + 1) as f64 >= incumbent || window >= 64 {
            break;
        }
        window += 1;
    }
    let (length, cls, base, path) = best.ok_or_else(|| Error::InvalidParameter("no loop found".into()))?;
    Ok(LoopWitness {
        class: LoopClass::Lattice(cls.to_vec()),
        base,
        polyline: lifted_polyline(field.grid(), &path),
        length,
    })
}

/// min over x of d(x, ι(x)) on a sphere lattice with an ι-invariant field.
/// Witness polylines are unwrapped in longitude; passages through a pole
/// repeat the pole at the new longitude.
pub fn min_antipodal_distance(field: &MetricField, exec: Exec) -> Result<LoopWitness> {
    let grid = field.grid();
    if !grid.kind().is_spherical() {
        return Err(Error::WrongTopology { expected: "sphere2 or rp2", found: grid.kind().to_string() });
    }
    let rings = grid.resolution() as i64;
    let reach = grid.stencil_order().reach() as i64;
    // a path from x to ι(x) crosses the equator downward or starts on it;
    // its first vertex at or below the equator is within `reach` rings
    let bases: Vec<VertexId> = (0..grid.vertex_count())
        .filter(|&v| {
            let k = grid.lattice_index(v)[1];
            k <= rings / 2 && k > rings / 2 - reach
        })
        .collect();
    let shared = SharedMin::new(f64::INFINITY);
    let results = exec.map(&bases, |&x| {
        let target = grid.antipode(x).ok()?;
        let bound = shared.get();
        let df = dijkstra(field, &[(x, 0.0)], bound);
        let d = df.dist[target];
        if !d.is_finite() {
            return None;
        }
        shared.lower(d);
        Some((d, x, df.path_to(target)))
    });
    let (length, base, path) = results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or_else(|| Error::InvalidParameter("no antipodal path".into()))?;
    Ok(LoopWitness { class: LoopClass::Antipodal, base, polyline: sphere_polyline(grid, &path), length })
}

fn sphere_polyline(grid: &Grid, path: &[VertexId]) -> Polyline {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(path.len() + 2);
    if path.is_empty() {
        return Polyline::default();
    }
    let mut cur = grid.coords(path[0]).to_vec();
    pts.push(cur.clone());
    for w in path.windows(2) {
        let e = grid.edge_between(w[0], w[1]).expect("path follows edges");
        let next = if grid.is_chart_singular(w[0]) {
            // leaving a pole: jump in longitude at the pole first
            let target = grid.coords(w[1]);
            let du = target[0] - cur[0];
            let u = cur[0] + du - du.round();
            pts.push(vec![u, cur[1]]);
            vec![u, cur[1] + e.disp[1]]
        } else {
            vec![cur[0] + e.disp[0], cur[1] + e.disp[1]]
        };
        pts.push(next.clone());
        cur = next;
    }
    Polyline::new(pts)
}

/// Radius of a vertex set: min over centres p of max over the set of d(p, ·).
#[derive(Clone, Debug)]
pub struct RadiusReport {
    pub radius: f64,
    pub center: VertexId,
    /// Per-component (radius, centre) when the domain is disconnected.
    pub components: Vec<(f64, VertexId)>,
    pub disconnected: bool,
}

/// Connected components of the active graph restricted to `members`.
pub fn components(grid: &Grid, members: &[bool]) -> Vec<Vec<VertexId>> {
    let n = grid.vertex_count();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !members[s] || label[s] != usize::MAX || !grid.is_active(s) {
            continue;
        }
        let id = out.len();
        let mut comp = vec![s];
        label[s] = id;
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            k += 1;
            for e in grid.neighbors(v) {
                if members[e.to] && label[e.to] == usize::MAX {
                    label[e.to] = id;
                    comp.push(e.to);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn radius(field: &MetricField) -> Result<RadiusReport> {
    let grid = field.grid();
    let all: Vec<bool> = (0..grid.vertex_count()).map(|v| grid.is_active(v)).collect();
    let comps = components(grid, &all);
    if comps.is_empty() {
        return Err(Error::EmptyMask);
    }
    let per: Vec<(f64, VertexId)> = comps.iter().map(|c| set_radius(field, c)).collect();
    let disconnected = per.len() > 1;
    let &(radius, center) = per.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("nonempty");
    Ok(RadiusReport { radius, center, components: if disconnected { per } else { vec![] }, disconnected })
}

/// max over `set` of the distance from `center`.
pub fn eccentricity(field: &MetricField, center: VertexId, set: &[VertexId]) -> f64 {
    let df = dijkstra_until(field, center, set);
    set.iter().map(|&v| df.dist[v]).fold(0.0, f64::max)
}

/// Exact radius of a vertex set with centres ranging over all active
/// vertices. Candidates are visited in order of a lower bound built from
/// d(a, ·) for visited set members a and from ecc(q) − d(q, ·); the search
/// stops when the smallest remaining bound reaches the incumbent.
pub fn set_radius(field: &MetricField, set: &[VertexId]) -> (f64, VertexId) {
    let grid = field.grid();
    let n = grid.vertex_count();
    if set.is_empty() {
        return (0.0, 0);
    }
    let mut in_set = vec![false; n];
    for &v in set {
        in_set[v] = true;
    }
    let mut lb = vec![0.0f64; n];
    let mut visited = vec![false; n];
    let mut best = (f64::INFINITY, usize::MAX);

    let visit = |p: VertexId, best: &mut (f64, usize), lb: &mut Vec<f64>, visited: &mut Vec<bool>| -> Option<VertexId> {
        visited[p] = true;
        let limit = if best.0.is_finite() { best.0 } else { f64::INFINITY };
        let df = dijkstra(field, &[(p, 0.0)], limit);
        let mut ecc: f64 = 0.0;
        let mut far = p;
        let mut complete = true;
        for &a in set {
            let d = df.dist[a];
            if !d.is_finite() {
                complete = false;
                break;
            }
            if d > ecc || (d == ecc && a < far) {
                ecc = d;
                far = a;
            }
        }
        if in_set[p] {
            for x in 0..n {
                let d = df.dist[x];
                let bound = if d.is_finite() { d } else { limit };
                if bound > lb[x] {
                    lb[x] = bound;
                }
            }
        }
        if complete {
            for x in 0..n {
                let d = df.dist[x];
                if d.is_finite() && ecc - d > lb[x] {
                    lb[x] = ecc - d;
                }
            }
            if ecc < best.0 || (ecc == best.0 && p < best.1) {
                *best = (ecc, p);
            }
            lb[p] = lb[p].max(ecc);
            Some(far)
        } else {
            lb[p] = lb[p].max(limit);
            None
        }
    };

    // a few farthest-point sweeps give strong bounds early
    let mut p = set[0];
    for _ in 0..4 {
        if visited[p] {
            break;
        }
        match visit(p, &mut best, &mut lb, &mut visited) {
            Some(far) => p = far,
            None => break,
        }
    }
    loop {
        let mut cand = usize::MAX;
        let mut cand_lb = f64::INFINITY;
        for x in 0..n {
            if !visited[x] && grid.is_active(x) && lb[x] < cand_lb {
                cand_lb = lb[x];
                cand = x;
            }
        }
        if cand == usize::MAX || cand_lb >= best.0 {
            break;
        }
        if let Some(far) = visit(cand, &mut best, &mut lb, &mut visited) {
            if !visited[far] {
                visit(far, &mut best, &mut lb, &mut visited);
            }
        }
    }
    best
}
