//! Volume quadrature, level-set lengths, coarea and volume profiles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::geodesy::dijkstra;
use crate::grid::VertexId;
use crate::linalg;
use crate::metric::MetricField;

/// Edge slack allowed by the 1-Lipschitz precheck of [`coarea_profile`].
pub const LIPSCHITZ_SLACK: f64 = 1e-6;

/// Mean of the active corner tensors of cell `c`.
pub fn cell_tensor(field: &MetricField, c: usize) -> Vec<f64> {
    let grid = field.grid();
    let n = grid.dim();
    let mut out = vec![0.0; n * n];
    let mut count = 0.0;
    for &v in grid.cells().corners_of(c) {
        if grid.is_active(v) {
            for (o, t) in out.iter_mut().zip(field.tensor(v)) {
                *o += t;
            }
            count += 1.0;
        }
    }
    out.iter_mut().for_each(|x| *x /= count);
    out
}

/// Chart volume × √det of the cell-averaged tensor, per cell.
pub fn cell_volumes(field: &MetricField, exec: Exec) -> Vec<f64> {
    let n = field.dim();
    let cells = field.grid().cells();
    exec.map_range(cells.len(), |c| {
        let t = cell_tensor(field, c);
        cells.chart_volume(c, n) * linalg::det(&t, n).max(0.0).sqrt()
    })
}

pub fn volume(field: &MetricField) -> f64 {
    volume_with(field, Exec::default())
}

pub fn volume_with(field: &MetricField, exec: Exec) -> f64 {
    pairwise_sum(&cell_volumes(field, exec))
}

/// Volume of the cells whose first corner satisfies `pred`. Complementary
/// predicates split the total.
pub fn region_volume(field: &MetricField, pred: impl Fn(VertexId) -> bool) -> f64 {
    let cells = field.grid().cells();
    let vols = cell_volumes(field, Exec::Sequential);
    let picked: Vec<f64> = (0..cells.len()).filter(|&c| pred(cells.corners_of(c)[0])).map(|c| vols[c]).collect();
    pairwise_sum(&picked)
}

/// Per-cell maximum of a vertex function over the active corners.
fn cell_max(field: &MetricField, f: &[f64]) -> Vec<f64> {
    let grid = field.grid();
    let cells = grid.cells();
    (0..cells.len())
        .map(|c| {
            cells
                .corners_of(c)
                .iter()
                .filter(|&&v| grid.is_active(v))
                .map(|&v| f[v])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Volume of the cells all of whose vertices lie within distance r of p.
pub fn ball_volume(field: &MetricField, p: VertexId, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let df = dijkstra(field, &[(p, 0.0)], r);
    let vols = cell_volumes(field, Exec::Sequential);
    let reach = cell_max(field, &df.dist);
    let inside: Vec<f64> = (0..vols.len()).filter(|&c| reach[c] <= r).map(|c| vols[c]).collect();
    pairwise_sum(&inside)
}

#[derive(Clone, Debug, Default)]
pub struct LevelSet {
    pub length: f64,
    /// Chart segments (cell-local unwrapped coordinates).
    pub segments: Vec<[[f64; 2]; 2]>,
    /// False when t lies outside the range of f (length is then 0).
    pub in_range: bool,
}

/// Length of the marching-squares curve {f = t} (n = 2). Corners with
/// f ≥ t count as inside. Saddles are resolved by the cell average.
pub fn level_set_measure(field: &MetricField, f: &[f64], t: f64) -> Result<LevelSet> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if f.len() != grid.vertex_count() {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = active_range(field, f);
    if !(t >= lo && t <= hi) {
        return Ok(LevelSet { length: 0.0, segments: vec![], in_range: false });
    }
    let cells = grid.cells();
    let mut pieces = Vec::new();
    let mut segments = Vec::new();
    for c in 0..cells.len() {
        let cs = cells.corners_of(c);
        if cs.iter().any(|&v| !grid.is_active(v)) {
            continue;
        }
        let vals = [f[cs[0]], f[cs[1]], f[cs[2]], f[cs[3]]];
        if vals.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let segs = cell_segments(vals, t);
        if segs.is_empty() {
            continue;
        }
        let origin = cells.origin_of(c, 2);
        let size = cells.size_of(c, 2);
        let tensors = [field.tensor(cs[0]), field.tensor(cs[1]), field.tensor(cs[2]), field.tensor(cs[3])];
        for [a, b] in segs {
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let w = [(1.0 - mid[0]) * (1.0 - mid[1]), mid[0] * (1.0 - mid[1]), (1.0 - mid[0]) * mid[1], mid[0] * mid[1]];
            let mut g = [0.0; 4];
            for k in 0..4 {
                for (gi, ti) in g.iter_mut().zip(tensors[k]) {
                    *gi += w[k] * ti;
                }
            }
            let d = [(b[0] - a[0]) * size[0], (b[1] - a[1]) * size[1]];
            pieces.push(linalg::quad_form(&g, 2, &d).max(0.0).sqrt());
            segments.push([
                [origin[0] + a[0] * size[0], origin[1] + a[1] * size[1]],
                [origin[0] + b[0] * size[0], origin[1] + b[1] * size[1]],
            ]);
        }
    }
    Ok(LevelSet { length: pairwise_sum(&pieces), segments, in_range: true })
}

fn active_range(field: &MetricField, f: &[f64]) -> (f64, f64) {
    let grid = field.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in grid.active_vertices() {
        if f[v].is_finite() {
            lo = lo.min(f[v]);
            hi = hi.max(f[v]);
        }
    }
    (lo, hi)
}

/// Marching-squares segments in local cell coordinates. Corner order:
/// 0 = (0,0), 1 = (1,0), 2 = (0,1), 3 = (1,1).
fn cell_segments(v: [f64; 4], t: f64) -> Vec<[[f64; 2]; 2]> {
    let inside = [v[0] >= t, v[1] >= t, v[2] >= t, v[3] >= t];
    let code = inside.iter().enumerate().fold(0usize, |acc, (k, &b)| acc | ((b as usize) << k));
    if code == 0 || code == 15 {
        return vec![];
    }
    let cross = |a: usize, b: usize| -> f64 {
        let d = v[b] - v[a];
        if d == 0.0 {
            0.5
        } else {
            ((t - v[a]) / d).clamp(0.0, 1.0)
        }
    };
    // edge points: bottom 0-1, right 1-3, top 2-3, left 0-2
    let bottom = || [cross(0, 1), 0.0];
    let right = || [1.0, cross(1, 3)];
    let top = || [cross(2, 3), 1.0];
    let left = || [0.0, cross(0, 2)];
    let cut = |a: usize, b: usize| inside[a] != inside[b];
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(4);
    if cut(0, 1) {
        pts.push(bottom());
    }
    if cut(1, 3) {
        pts.push(right());
    }
    if cut(2, 3) {
        pts.push(top());
    }
    if cut(0, 2) {
        pts.push(left());
    }
    if pts.len() == 2 {
        return vec![[pts[0], pts[1]]];
    }
    // saddle: inside corners are diagonal (0,3) or (1,2)
    let centre_inside = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= t;
    let diag03 = inside[0] && inside[3];
    if diag03 == centre_inside {
        // corners 1 and 2 are isolated
        vec![[bottom(), right()], [top(), left()]]
    } else {
        // corners 0 and 3 are isolated
        vec![[bottom(), left()], [right(), top()]]
    }
}

/// First edge (or none) on which `f` is not 1-Lipschitz within `slack`.
pub fn lipschitz_violation(field: &MetricField, f: &[f64], slack: f64) -> Option<(VertexId, VertexId, f64)> {
    let grid = field.grid();
    for v in grid.active_vertices() {
        for e in grid.neighbors(v) {
            let excess = (f[v] - f[e.to]).abs() - field.edge_length_at(e.index);
            if excess > slack {
                return Some((v, e.to, excess));
            }
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct CoareaProfile {
    pub t_grid: Vec<f64>,
    pub a: Vec<f64>,
    pub total: f64,
    pub volume: f64,
    /// volume − total; nonnegative up to discretization.
    pub defect: f64,
}

pub fn coarea_profile(field: &MetricField, f: &[f64], t_count: usize) -> Result<CoareaProfile> {
    coarea_profile_with(field, f, t_count, Exec::default())
}

pub fn coarea_profile_with(field: &MetricField, f: &[f64], t_count: usize, exec: Exec) -> Result<CoareaProfile> {
    if t_count < 2 {
        return Err(Error::InvalidParameter("coarea profile needs at least 2 levels".into()));
    }
    if f.len() != field.grid().vertex_count() {
        return Err(Error::GridMismatch);
    }
    if let Some((v, w, excess)) = lipschitz_violation(field, f, LIPSCHITZ_SLACK) {
        return Err(Error::NotLipschitz(v, w, excess));
    }
    let (lo, hi) = active_range(field, f);
    let volume = volume_with(field, exec);
    if hi <= lo {
        return Ok(CoareaProfile { t_grid: vec![lo], a: vec![0.0], total: 0.0, volume, defect: volume });
    }
    let t_grid: Vec<f64> = (0..t_count).map(|k| lo + (hi - lo) * k as f64 / (t_count - 1) as f64).collect();
    let a: Vec<f64> = exec
        .map(&t_grid, |&t| level_set_measure(field, f, t).map(|l| l.length))
        .into_iter()
        .collect::<Result<_>>()?;
    let pieces: Vec<f64> = (1..t_count).map(|k| 0.5 * (a[k] + a[k - 1]) * (t_grid[k] - t_grid[k - 1])).collect();
    let total = pairwise_sum(&pieces);
    Ok(CoareaProfile { t_grid, a, total, volume, defect: volume - total })
}

#[derive(Clone, Debug)]
pub struct VolumeProfileTable {
    pub r_grid: Vec<f64>,
    pub volpro: Vec<f64>,
    pub centers: Vec<VertexId>,
    /// True when only a subset of vertices served as centres, so the table
    /// is a lower bound on the supremum.
    pub sampled: bool,
}

/// Deterministic stratified choice of `count` active vertices.
pub fn stratified_centers(field: &MetricField, count: usize) -> Vec<VertexId> {
    let active: Vec<VertexId> = field.grid().active_vertices().collect();
    if count >= active.len() {
        return active;
    }
    // golden-ratio offsets break the alignment with lattice rows
    let phi = 0.618_033_988_749_894_9;
    let mut picks: Vec<VertexId> = (0..count)
        .map(|k| {
            let s = (k as f64 + (k as f64 * phi).fract()) / count as f64;
            active[((s * active.len() as f64) as usize).min(active.len() - 1)]
        })
        .collect();
    picks.sort_unstable();
    picks.dedup();
    picks
}

pub fn volume_profile(field: &MetricField, r_grid: &[f64], center_sample: usize) -> Result<VolumeProfileTable> {
    volume_profile_with(field, r_grid, center_sample, Exec::default())
}

pub fn volume_profile_with(
    field: &MetricField,
    r_grid: &[f64],
    center_sample: usize,
    exec: Exec,
) -> Result<VolumeProfileTable> {
    if center_sample == 0 {
        return Err(Error::InvalidParameter("center_sample must be at least 1".into()));
    }
    if r_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("radii must be sorted".into()));
    }
    let centers = stratified_centers(field, center_sample);
    let sampled = centers.len() < field.grid().active_count();
    let vols = cell_volumes(field, exec);
    let r_max = r_grid.last().cloned().unwrap_or(0.0);
    let per_center: Vec<Vec<f64>> = exec.map(&centers, |&p| {
        let df = dijkstra(field, &[(p, 0.0)], r_max);
        let reach = cell_max(field, &df.dist);
        let mut order: Vec<usize> = (0..vols.len()).filter(|&c| reach[c].is_finite()).collect();
        order.sort_by(|&a, &b| reach[a].total_cmp(&reach[b]).then(a.cmp(&b)));
        let mut out = Vec::with_capacity(r_grid.len());
        let mut k = 0;
        let mut acc = Vec::new();
        for &r in r_grid {
            while k < order.len() && reach[order[k]] <= r {
                acc.push(vols[order[k]]);
                k += 1;
            }
            out.push(if r <= 0.0 { 0.0 } else { pairwise_sum(&acc) });
        }
        out
    });
    let mut volpro = vec![0.0f64; r_grid.len()];
    for row in &per_center {
        for (m, x) in volpro.iter_mut().zip(row) {
            *m = m.max(*x);
        }
    }
    // pairwise sums of growing prefixes can wobble in the last bit
    for k in 1..volpro.len() {
        volpro[k] = volpro[k].max(volpro[k - 1]);
    }
    Ok(VolumeProfileTable { r_grid: r_grid.to_vec(), volpro, centers, sampled })
}

/// ω_n / 2ⁿ, with ω_n the volume of the unit n-ball.
pub fn hausdorff_conversion(n: usize) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(unit_ball_volume(n) / 2f64.powi(n as i32))
}

/// ω_n from ω_n = (2π/n)·ω_{n−2}, ω_0 = 1, ω_1 = 2.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::{distance_field, face_distance_field};
    use crate::grid::{DomainTopology, Grid};
    use crate::metric::{constant_metric, flat_metric, round_sphere_metric};
    use std::sync::Arc;

    fn grid(t: DomainTopology, n: usize, k: usize) -> Arc<Grid> {
        Arc::new(Grid::new(t, n, k).unwrap())
    }

    #[test]
    fn volumes() {
        assert!((volume(&flat_metric(grid(DomainTopology::square(), 32, 3))) - 1.0).abs() < 1e-12);
        let hex = constant_metric(grid(DomainTopology::torus2(), 32, 3), &[1.0, 0.5, 0.5, 1.0]).unwrap();
        assert!((volume(&hex) - 3f64.sqrt() / 2.0).abs() < 1e-12);
        let s = round_sphere_metric(grid(DomainTopology::sphere2(), 64, 3), 1.0).unwrap();
        assert!((volume(&s) - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
        let c = flat_metric(grid(DomainTopology::cube(3), 6, 1));
        assert!((volume(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_split_adds_up() {
        let g = grid(DomainTopology::square(), 40, 3);
        let m = crate::metric::random_spd_metric(g.clone(), 3, 0.25, 4.0).unwrap();
        let pred = |v: VertexId| g.coords(v)[0] + 0.3 * g.coords(v)[1] < 0.6;
        let a = region_volume(&m, pred);
        let b = region_volume(&m, |v| !pred(v));
        assert!((a + b - volume(&m)).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        // N = 256: at N = 128 the 16-neighbour ball polygon (area ratio ≈ 0.972)
        // plus the one-cell rim loss leaves the disk about 5% short
        let g = grid(DomainTopology::torus2(), 256, 3);
        let m = flat_metric(g.clone());
        let p = g.vertex_at(&[128, 128]).unwrap();
        assert_eq!(ball_volume(&m, p, 0.0), 0.0);
        let r = 0.4;
        let b = ball_volume(&m, p, r);
        assert!((b - PI * r * r).abs() < 0.05 * PI * r * r, "{b}");
        assert!(ball_volume(&m, p, 0.2) <= b);
        let s = grid(DomainTopology::square(), 64, 3);
        let flat = flat_metric(s.clone());
        let c = crate::geodesy::radius(&flat).unwrap();
        assert!((ball_volume(&flat, c.center, c.radius) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn level_sets() {
        let g = grid(DomainTopology::square(), 33, 3);
        let m = flat_metric(g.clone());
        let f = face_distance_field(&m, "A".parse().unwrap()).unwrap().dist;
        let l = level_set_measure(&m, &f, 0.5).unwrap();
        assert!((l.length - 1.0).abs() < 0.01);
        let out = level_set_measure(&m, &f, -0.1).unwrap();
        assert_eq!(out.length, 0.0);
        assert!(!out.in_range);

        let s = grid(DomainTopology::sphere2(), 64, 3);
        let round = round_sphere_metric(s.clone(), 1.0).unwrap();
        let f = distance_field(&round, &[1]).unwrap().dist;
        let l = level_set_measure(&round, &f, PI / 2.0).unwrap();
        assert!((l.length - 2.0 * PI).abs() < 0.02 * 2.0 * PI, "{}", l.length);
    }

    #[test]
    fn saddle_cells_give_two_segments() {
        let segs = cell_segments([1.0, 0.0, 0.0, 1.0], 0.5);
        assert_eq!(segs.len(), 2);
        let segs = cell_segments([1.0, 0.0, 0.0, 0.8], 0.6);
        assert_eq!(segs.len(), 2);
        assert!(cell_segments([1.0; 4], 0.5).is_empty());
    }

    #[test]
    fn coarea_on_flat_square() {
        let g = grid(DomainTopology::square(), 65, 3);
        let m = flat_metric(g.clone());
        let f = face_distance_field(&m, "A".parse().unwrap()).unwrap().dist;
        let p = coarea_profile(&m, &f, 257).unwrap();
        assert!((p.total - 1.0).abs() < 0.01);
        assert!(p.t_grid.windows(2).all(|w| w[1] > w[0]));
        assert!(p.a.iter().all(|&a| a >= 0.0));
        let c = coarea_profile(&m, &vec![0.3; g.vertex_count()], 16).unwrap();
        assert_eq!(c.total, 0.0);
        let steep: Vec<f64> = (0..g.vertex_count()).map(|v| 3.0 * g.coords(v)[0]).collect();
        assert!(matches!(coarea_profile(&m, &steep, 16), Err(Error::NotLipschitz(..))));
    }

    #[test]
    fn cylinder_levels_at_least_one() {
        let g = grid(DomainTopology::cylinder(), 48, 3);
        let m = flat_metric(g.clone());
        let f = face_distance_field(&m, "B".parse().unwrap()).unwrap().dist;
        let p = coarea_profile(&m, &f, 65).unwrap();
        for k in 1..p.t_grid.len() - 1 {
            assert!(p.a[k] >= 1.0 - 1e-12, "{} at {}", p.a[k], p.t_grid[k]);
        }
        assert!(p.total >= 1.0 - 0.02);
    }

    #[test]
    fn volume_profile_flat_square() {
        let g = grid(DomainTopology::square(), 256, 3);
        let m = flat_metric(g);
        let t = volume_profile(&m, &[0.05, 0.1], 256).unwrap();
        assert!(t.sampled);
        let target = PI * 0.01;
        assert!((t.volpro[1] - target).abs() < 0.1 * target, "{}", t.volpro[1]);
        assert!(t.volpro[0] <= t.volpro[1]);
        let small = flat_metric(grid(DomainTopology::square(), 12, 3));
        let t = volume_profile(&small, &[0.0, 0.3, 2.0], 1000).unwrap();
        assert!(!t.sampled);
        assert_eq!(t.volpro[0], 0.0);
        assert!((t.volpro[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_constants() {
        assert_eq!(hausdorff_conversion(1).unwrap(), 1.0);
        assert_eq!(hausdorff_conversion(2).unwrap(), PI / 4.0);
        assert_eq!(hausdorff_conversion(3).unwrap(), PI / 6.0);
        assert_eq!(hausdorff_conversion(4).unwrap(), PI * PI / 32.0);
        assert!(hausdorff_conversion(5).is_err());
    }
}
