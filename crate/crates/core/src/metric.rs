//! Per-vertex metric tensors and g-lengths of edges and polylines.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Grid, VertexId};
use crate::linalg;

/// Relative tolerance for the antipodal invariance check on rp2 fields.
const INVARIANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MetricField {
    grid: Arc<Grid>,
    tensors: Vec<f64>,
    edge_len: Vec<f64>,
}

impl MetricField {
    /// Wraps raw row-major tensors (n² entries per vertex). Inactive vertices
    /// and chart-singular sphere poles are exempt from the SPD check.
    pub fn from_tensors(grid: Arc<Grid>, tensors: Vec<f64>) -> Result<Self> {
        let n = grid.dim();
        if tensors.len() != grid.vertex_count() * n * n {
            return Err(Error::GridMismatch);
        }
        for v in grid.active_vertices() {
            let t = &tensors[v * n * n..(v + 1) * n * n];
            if t.iter().any(|x| !x.is_finite()) || !linalg::is_symmetric(t, n, 1e-12) {
                return Err(Error::NotSpd { vertex: v, min_eig: f64::NAN });
            }
            if grid.is_chart_singular(v) {
                continue;
            }
            let min_eig = linalg::min_eigenvalue(t, n);
            if min_eig <= 0.0 {
                return Err(Error::NotSpd { vertex: v, min_eig });
            }
        }
        if grid.kind() == DomainKind::Rp2 {
            for v in 0..grid.vertex_count() {
                let w = grid.antipode(v)?;
                let (a, b) = (&tensors[v * 4..v * 4 + 4], &tensors[w * 4..w * 4 + 4]);
                // differential of (u, v) ↦ (u + ½, 1 − v) is diag(1, −1)
                let pushed = [b[0], -b[1], -b[2], b[3]];
                let scale = a.iter().map(|x| x.abs()).fold(1.0, f64::max);
                if a.iter().zip(&pushed).any(|(x, y)| (x - y).abs() > INVARIANCE_TOL * scale) {
                    return Err(Error::NotInvariant(v));
                }
            }
        }
        let edge_len = compute_edge_lengths(&grid, &tensors);
        Ok(MetricField { grid, tensors, edge_len })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn tensor(&self, v: VertexId) -> &[f64] {
        let n = self.dim();
        &self.tensors[v * n * n..(v + 1) * n * n]
    }

    pub fn tensors(&self) -> &[f64] {
        &self.tensors
    }

    /// Length of the directed adjacency entry `e` (see [`Grid::neighbors`]).
    pub fn edge_length_at(&self, e: usize) -> f64 {
        self.edge_len[e]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_len
    }

    /// √(Δxᵀ ḡ Δx) with ḡ the mean of the endpoint tensors.
    pub fn edge_length(&self, v: VertexId, w: VertexId) -> Result<f64> {
        self.grid
            .edge_between(v, w)
            .map(|e| self.edge_len[e.index])
            .ok_or(Error::NotAnEdge(v, w))
    }

    /// Multilinear interpolation of the tensor at a chart point. Inactive
    /// corners are dropped and the remaining weights renormalized.
    pub fn tensor_at(&self, p: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        let (base, local) = self.grid.locate(p)?;
        let corners = self.grid.cell_corners_at(&base);
        let mut out = vec![0.0; n * n];
        let mut total = 0.0;
        for (bits, &c) in corners.iter().enumerate() {
            if !self.grid.is_active(c) {
                continue;
            }
            let w: f64 = (0..n)
                .map(|a| if (bits >> a) & 1 == 1 { local[a] } else { 1.0 - local[a] })
                .product();
            if w == 0.0 {
                continue;
            }
            total += w;
            for (o, t) in out.iter_mut().zip(self.tensor(c)) {
                *o += w * t;
            }
        }
        if total <= 0.0 {
            return None;
        }
        out.iter_mut().for_each(|x| *x /= total);
        Some(out)
    }

    pub fn polyline_length(&self, path: &Polyline) -> Result<f64> {
        let n = self.dim();
        let mut tensors = Vec::with_capacity(path.points.len());
        for p in &path.points {
            if p.len() != n || p.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedPolyline(format!("bad point {p:?}")));
            }
            let t = self
                .tensor_at(p)
                .ok_or_else(|| Error::MalformedPolyline(format!("point {p:?} outside the domain")))?;
            tensors.push(t);
        }
        let mut total = 0.0;
        for k in 1..path.points.len() {
            let d: Vec<f64> = (0..n).map(|a| path.points[k][a] - path.points[k - 1][a]).collect();
            let g: Vec<f64> = tensors[k].iter().zip(&tensors[k - 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            total += linalg::quad_form(&g, n, &d).max(0.0).sqrt();
        }
        Ok(total)
    }

    /// The field c²·g.
    pub fn scaled(&self, c: f64) -> MetricField {
        let c2 = c * c;
        MetricField {
            grid: self.grid.clone(),
            tensors: self.tensors.iter().map(|x| x * c2).collect(),
            edge_len: self.edge_len.iter().map(|x| x * c.abs()).collect(),
        }
    }

    /// SHA-256 over the grid descriptor and the tensor bit patterns.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.grid.descriptor().as_bytes());
        for x in &self.tensors {
            h.update(x.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn compute_edge_lengths(grid: &Grid, tensors: &[f64]) -> Vec<f64> {
    let n = grid.dim();
    let nn = n * n;
    let mut out = vec![0.0; grid.adjacency_len()];
    let mut g = vec![0.0; nn];
    for v in 0..grid.vertex_count() {
        for e in grid.neighbors(v) {
            let (a, b) = (&tensors[v * nn..(v + 1) * nn], &tensors[e.to * nn..(e.to + 1) * nn]);
            for k in 0..nn {
                g[k] = 0.5 * (a[k] + b[k]);
            }
            out[e.index] = linalg::quad_form(&g, n, e.disp).max(0.0).sqrt();
        }
    }
    out
}

pub fn flat_metric(grid: Arc<Grid>) -> MetricField {
    let n = grid.dim();
    constant_metric(grid, &linalg::identity(n)).expect("identity is SPD")
}

pub fn constant_metric(grid: Arc<Grid>, g: &[f64]) -> Result<MetricField> {
    let n = grid.dim();
    if g.len() != n * n || !linalg::is_symmetric(g, n, 1e-12) || !linalg::is_spd(g, n) {
        return Err(Error::MatrixNotSpd);
    }
    if grid.kind() == DomainKind::Rp2 && g[1] != 0.0 {
        return Err(Error::NotInvariant(0));
    }
    let tensors = (0..grid.vertex_count()).flat_map(|_| g.iter().cloned()).collect();
    MetricField::from_tensors(grid, tensors)
}

/// e^{2u(v)}·I at each vertex.
pub fn conformal_metric(grid: Arc<Grid>, u: &[f64]) -> Result<MetricField> {
    let n = grid.dim();
    if u.len() != grid.vertex_count() {
        return Err(Error::GridMismatch);
    }
    if let Some(v) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("conformal factor not finite at vertex {v}")));
    }
    if grid.kind() == DomainKind::Rp2 {
        for v in 0..grid.vertex_count() {
            if u[v] != u[grid.antipode(v)?] {
                return Err(Error::NotInvariant(v));
            }
        }
    }
    let id = linalg::identity(n);
    let tensors = u.iter().flat_map(|&x| id.iter().map(move |i| i * (2.0 * x).exp())).collect();
    MetricField::from_tensors(grid, tensors)
}

/// Conformal factor sampled from a function of the chart point.
pub fn conformal_from_fn(grid: Arc<Grid>, u: impl Fn(&[f64]) -> f64) -> Result<MetricField> {
    let vals: Vec<f64> = (0..grid.vertex_count()).map(|v| u(grid.coords(v))).collect();
    conformal_metric(grid, &vals)
}

/// Round metric in the chart (u, v) = (longitude/2π, latitude/π + ½):
/// diag(4π²r²cos²θ, π²r²).
pub fn round_sphere_metric(grid: Arc<Grid>, radius: f64) -> Result<MetricField> {
    if !grid.kind().is_spherical() {
        return Err(Error::WrongTopology { expected: "sphere2 or rp2", found: grid.kind().to_string() });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {radius}")));
    }
    let r2 = radius * radius;
    let rings = grid.resolution();
    let mut tensors = Vec::with_capacity(grid.vertex_count() * 4);
    for v in 0..grid.vertex_count() {
        let k = grid.lattice_index(v)[1] as usize;
        // sin(πk/N) = cos(latitude); ring k and ring N−k share it bitwise
        let kk = k.min(rings - k);
        let c = (PI * kk as f64 / rings as f64).sin();
        let c2 = if kk == 0 { 0.0 } else { c * c };
        tensors.extend([4.0 * PI * PI * r2 * c2, 0.0, 0.0, PI * PI * r2]);
    }
    MetricField::from_tensors(grid, tensors)
}

/// Low-frequency trigonometric mixture on the unit chart, periodic in every
/// axis, normalized to [−1, 1].
#[derive(Clone, Debug)]
struct TrigMix {
    terms: Vec<(Vec<f64>, f64, f64)>,
    norm: f64,
}

impl TrigMix {
    const HARMONICS: i64 = 4;
    const TERMS: usize = 6;

    fn sample(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let mut terms = Vec::with_capacity(Self::TERMS);
        for _ in 0..Self::TERMS {
            let k: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-Self::HARMONICS..=Self::HARMONICS) as f64)
                .collect();
            let amp = rng.gen_range(0.2..1.0) / (1.0 + k.iter().map(|x| x * x).sum::<f64>().sqrt());
            let phase = rng.gen_range(0.0..2.0 * PI);
            terms.push((k, amp, phase));
        }
        let norm = terms.iter().map(|t| t.1).sum();
        TrigMix { terms, norm }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|(k, a, p)| a * (2.0 * PI * k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).cos())
            .sum();
        (s / self.norm).clamp(-1.0, 1.0)
    }
}

/// Random SPD field with eigenvalues in [lo, hi], deterministic in `seed`.
/// Eigenvalues are log-interpolated between the bounds and the eigenframe is
/// a product of planar rotations, all driven by trigonometric mixtures.
pub fn random_spd_metric(grid: Arc<Grid>, seed: u64, lo: f64, hi: f64) -> Result<MetricField> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidRange(lo, hi));
    }
    if grid.kind().is_spherical() {
        return Err(Error::WrongTopology { expected: "a box-like chart", found: grid.kind().to_string() });
    }
    let n = grid.dim();
    if lo == hi {
        let g: Vec<f64> = linalg::identity(n).iter().map(|x| x * lo).collect();
        return constant_metric(grid, &g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eig_mix: Vec<TrigMix> = (0..n).map(|_| TrigMix::sample(&mut rng, n)).collect();
    let planes: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let rot_mix: Vec<TrigMix> = planes.iter().map(|_| TrigMix::sample(&mut rng, n)).collect();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut tensors = Vec::with_capacity(grid.vertex_count() * n * n);
    for v in 0..grid.vertex_count() {
        let x = grid.coords(v);
        let lam: Vec<f64> = eig_mix
            .iter()
            .map(|m| (llo + (lhi - llo) * 0.5 * (1.0 + m.eval(x))).exp().clamp(lo, hi))
            .collect();
        let mut q = linalg::identity(n);
        for (&(a, b), m) in planes.iter().zip(&rot_mix) {
            let th = PI * m.eval(x);
            let (s, c) = th.sin_cos();
            for r in 0..n {
                let (qa, qb) = (q[r * n + a], q[r * n + b]);
                q[r * n + a] = c * qa - s * qb;
                q[r * n + b] = s * qa + c * qb;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let val: f64 = (0..n).map(|k| q[i * n + k] * lam[k] * q[j * n + k]).sum();
                tensors.push(val);
            }
        }
        // exact symmetry
        let base = tensors.len() - n * n;
        for i in 0..n {
            for j in i + 1..n {
                tensors[base + j * n + i] = tensors[base + i * n + j];
            }
        }
    }
    MetricField::from_tensors(grid, tensors)
}

/// g1 on vertices where `region` holds, g2 elsewhere.
pub fn piecewise_metric(
    region: impl Fn(VertexId) -> bool,
    g1: &MetricField,
    g2: &MetricField,
) -> Result<MetricField> {
    if !Arc::ptr_eq(&g1.grid, &g2.grid)
        && (g1.grid.descriptor() != g2.grid.descriptor() || g1.grid.vertex_count() != g2.grid.vertex_count())
    {
        return Err(Error::GridMismatch);
    }
    let nn = g1.dim() * g1.dim();
    let mut tensors = Vec::with_capacity(g1.tensors.len());
    for v in 0..g1.grid.vertex_count() {
        let src = if region(v) { g1 } else { g2 };
        tensors.extend_from_slice(&src.tensors[v * nn..(v + 1) * nn]);
    }
    MetricField::from_tensors(g1.grid.clone(), tensors)
}

/// Chart points in the universal cover (unwrapped); wrap counters are the
/// integer parts along periodic axes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec<f64>>,
}

impl Polyline {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Polyline { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Joins two polylines; a shared junction point is kept once.
    pub fn concat(&self, other: &Polyline) -> Polyline {
        let mut points = self.points.clone();
        let skip = matches!((points.last(), other.points.first()), (Some(a), Some(b)) if a == b);
        points.extend(other.points.iter().skip(skip as usize).cloned());
        Polyline { points }
    }

    pub fn wraps(&self, grid: &Grid) -> Vec<Vec<i64>> {
        let axes = grid.periodic_axes();
        self.points.iter().map(|p| axes.iter().map(|&a| p[a].floor() as i64).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainTopology;

    fn grid(t: DomainTopology, n: usize, k: usize) -> Arc<Grid> {
        Arc::new(Grid::new(t, n, k).unwrap())
    }

    #[test]
    fn flat_axis_edge() {
        let g = grid(DomainTopology::square(), 33, 3);
        let m = flat_metric(g.clone());
        let (a, b) = (g.vertex_at(&[3, 4]).unwrap(), g.vertex_at(&[4, 4]).unwrap());
        assert!((m.edge_length(a, b).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        let s = constant_metric(g.clone(), &[4.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((s.edge_length(a, b).unwrap() - 2.0 / 32.0).abs() < 1e-15);
        let far = g.vertex_at(&[10, 10]).unwrap();
        assert!(matches!(m.edge_length(a, far), Err(Error::NotAnEdge(..))));
    }

    #[test]
    fn rejects_non_spd() {
        let g = grid(DomainTopology::square(), 8, 1);
        assert!(constant_metric(g.clone(), &[1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(constant_metric(g.clone(), &[1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(random_spd_metric(g, 1, 2.0, 1.0).is_err());
    }

    #[test]
    fn edge_lengths_symmetric() {
        let g = grid(DomainTopology::torus2(), 16, 3);
        let m = random_spd_metric(g.clone(), 3, 0.5, 2.0).unwrap();
        for v in 0..g.vertex_count() {
            for e in g.neighbors(v) {
                let back = g.neighbors(e.to).find(|b| b.to == v && b.wrap[0] == -e.wrap[0] && b.wrap[1] == -e.wrap[1]);
                let back = back.unwrap();
                assert_eq!(m.edge_length_at(e.index), m.edge_length_at(back.index));
                assert!(m.edge_length_at(e.index) > 0.0);
            }
        }
    }

    #[test]
    fn conformal_bump_edge_between_endpoint_bounds() {
        let g = grid(DomainTopology::torus2(), 16, 1);
        let bump = |x: &[f64]| 0.6 * (-((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)) / 0.02).exp();
        let m = conformal_from_fn(g.clone(), bump).unwrap();
        let (a, b) = (g.vertex_at(&[6, 8]).unwrap(), g.vertex_at(&[7, 8]).unwrap());
        let h = 1.0 / 16.0;
        let (pa, pb) = (g.coords(a).to_vec(), g.coords(b).to_vec());
        // Simpson on e^{u} along the segment
        let steps = 2000;
        let mut integral = 0.0;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = [pa[0] + t * h, pa[1]];
            let w = if s == 0 || s == steps { 1.0 } else if s % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * bump(&x).exp();
        }
        integral *= h / (3.0 * steps as f64);
        let lo = h * bump(&pa).exp().min(bump(&pb).exp());
        let hi = h * bump(&pa).exp().max(bump(&pb).exp());
        let len = m.edge_length(a, b).unwrap();
        assert!(lo <= integral && integral <= hi);
        assert!(lo <= len && len <= hi);
        assert!((len - integral).abs() < 0.02 * integral);
    }

    #[test]
    fn polyline_examples() {
        let g = grid(DomainTopology::square(), 16, 3);
        let m = flat_metric(g);
        let diag = Polyline::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert!((m.polyline_length(&diag).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.polyline_length(&Polyline::default()).unwrap(), 0.0);
        assert!(m.polyline_length(&Polyline::new(vec![vec![0.0, 2.0], vec![0.0, 0.0]])).is_err());
        assert!(m.polyline_length(&Polyline::new(vec![vec![0.0]])).is_err());

        let s = grid(DomainTopology::sphere2(), 32, 3);
        let round = round_sphere_metric(s, 1.0).unwrap();
        let eq = Polyline::new((0..=256).map(|k| vec![k as f64 / 256.0, 0.5]).collect());
        let len = round.polyline_length(&eq).unwrap();
        assert!((len - 2.0 * PI).abs() < 1e-3 * 2.0 * PI);
    }

    #[test]
    fn concat_is_additive() {
        let g = grid(DomainTopology::torus2(), 16, 3);
        let m = random_spd_metric(g, 11, 0.25, 4.0).unwrap();
        let p = Polyline::new(vec![vec![0.1, 0.2], vec![0.5, 0.7], vec![0.9, 0.95]]);
        let q = Polyline::new(vec![vec![0.9, 0.95], vec![1.3, 1.1], vec![1.7, 0.4]]);
        let lp = m.polyline_length(&p).unwrap();
        let lq = m.polyline_length(&q).unwrap();
        let lpq = m.polyline_length(&p.concat(&q)).unwrap();
        assert!((lpq - (lp + lq)).abs() <= 1e-12 * lpq);
        assert_eq!(p.concat(&q).wraps(m.grid())[3], vec![1, 1]);
    }

    #[test]
    fn random_is_deterministic_and_flat_on_degenerate_range() {
        let g = grid(DomainTopology::square(), 24, 3);
        let a = random_spd_metric(g.clone(), 7, 0.25, 4.0).unwrap();
        let b = random_spd_metric(g.clone(), 7, 0.25, 4.0).unwrap();
        assert_eq!(a.tensors(), b.tensors());
        assert_eq!(a.hash_hex(), b.hash_hex());
        let c = random_spd_metric(g.clone(), 8, 0.25, 4.0).unwrap();
        assert_ne!(a.hash_hex(), c.hash_hex());
        let one = random_spd_metric(g.clone(), 1, 1.0, 1.0).unwrap();
        assert_eq!(one.tensors(), flat_metric(g).tensors());
    }

    #[test]
    fn random_eigenvalues_in_range_over_many_seeds() {
        let g = grid(DomainTopology::torus2(), 5, 1);
        for seed in 0..1000 {
            let m = random_spd_metric(g.clone(), seed, 0.25, 4.0).unwrap();
            for v in 0..g.vertex_count() {
                let t = m.tensor(v);
                let mn = linalg::min_eigenvalue(t, 2);
                let mx = t[0] + t[3] - mn;
                assert!(mn >= 0.25 - 1e-9 && mx <= 4.0 + 1e-9, "seed {seed}: [{mn}, {mx}]");
            }
        }
    }

    #[test]
    fn random_field_is_periodic_on_torus() {
        // the mixture is 1-periodic, so sampling at x and x+1 agrees
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mix = TrigMix::sample(&mut rng, 2);
        for &(x, y) in &[(0.0, 0.3), (0.25, 0.75), (0.9, 0.1)] {
            assert!((mix.eval(&[x, y]) - mix.eval(&[x + 1.0, y - 1.0])).abs() < 1e-12);
        }
    }

    #[test]
    fn round_sphere_invariant_on_rp2() {
        let g = grid(DomainTopology::rp2(), 16, 3);
        let m = round_sphere_metric(g.clone(), 1.0).unwrap();
        for v in 0..g.vertex_count() {
            assert_eq!(m.tensor(v), m.tensor(g.antipode(v).unwrap()));
        }
        assert!(round_sphere_metric(grid(DomainTopology::square(), 8, 1), 1.0).is_err());
        let mut u = vec![0.0; g.vertex_count()];
        u[5] = 0.1;
        assert!(matches!(conformal_metric(g, &u), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn piecewise_selects_by_region() {
        let g = grid(DomainTopology::square(), 8, 1);
        let a = constant_metric(g.clone(), &[4.0, 0.0, 0.0, 4.0]).unwrap();
        let b = flat_metric(g.clone());
        let all = piecewise_metric(|_| true, &a, &b).unwrap();
        assert_eq!(all.tensors(), a.tensors());
        let half = piecewise_metric(|v| g.coords(v)[0] < 0.5, &a, &b).unwrap();
        assert_eq!(half.tensor(0)[0], 4.0);
        assert_eq!(half.tensor(7)[0], 1.0);
        let other = flat_metric(grid(DomainTopology::square(), 9, 1));
        assert!(matches!(piecewise_metric(|_| true, &a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn scaling_covariance_of_edges() {
        let g = grid(DomainTopology::square(), 12, 3);
        let m = random_spd_metric(g, 2, 0.5, 3.0).unwrap();
        let s = m.scaled(1.7);
        let fresh = MetricField::from_tensors(m.grid_arc().clone(), s.tensors().to_vec()).unwrap();
        for (a, b) in m.edge_lengths().iter().zip(fresh.edge_lengths()) {
            assert!((b - 1.7 * a).abs() <= 1e-9 * b);
        }
    }
}
