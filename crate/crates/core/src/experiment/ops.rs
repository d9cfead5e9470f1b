//! Operations: each turns a field at one resolution into report rows.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::builders::{build_field, disk_of, in_disk, param_f64, param_f64s, param_str, param_usize};
use super::{Check, DomainSection, ExperimentConfig, Figure, MetricSection, ReportRow, RunOptions, RunOutput};
use crate::besicovitch::{
    cylinder_check, face_distance_map_with, gadograph_check, hexagon_check, involution_check, jacobian_bound_check_with,
    verify_besicovitch_with, CheckVerdict, Degree, DEFAULT_REL_TOL,
};
use crate::covers::{
    check_sys_width, nerve, partition_of_unity_with, separating_cut_with, slicing_cover, star_containment,
    validate_certificate, width_upper_bound_with, CutStrategy, CUT_BUDGET,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geodesy::{dijkstra, distance_field, face_distance_field, systole_with};
use crate::grid::{DomainKind, FaceLabel, Grid};
use crate::io::{write_besicovitch, write_certificate, write_histogram, write_profile};
use crate::measure::{coarea_profile_with, hausdorff_conversion, stratified_centers, volume_profile_with, volume_with};
use crate::metric::{MetricField, Polyline};

pub const OPERATIONS: &[&str] = &[
    "besicovitch",
    "besicovitch-sweep",
    "hexagon",
    "cylinder",
    "systolic-ratio",
    "loewner-bumps",
    "coarea",
    "hausdorff",
    "width",
    "width-volume",
    "sys-crosschecks",
    "involution",
    "gadograph",
    "sphere-volume",
    "invariants",
];

/// Operations that build their own fields.
pub(super) fn needs_field(op: &str) -> bool {
    !matches!(op, "hausdorff" | "sys-crosschecks" | "invariants")
}

/// √2/⁴√3, the flat hexagonal torus ratio.
pub fn loewner_constant() -> f64 {
    2f64.sqrt() / 3f64.powf(0.25)
}

/// √(π/2), the round projective plane ratio.
pub fn pu_constant() -> f64 {
    (PI / 2.0).sqrt()
}

struct Rows<'a> {
    cfg: &'a ExperimentConfig,
    n: usize,
    out: &'a mut RunOutput,
}

impl Rows<'_> {
    fn push(&mut self, quantity: &str, value: f64, reference: Option<f64>, source: &str, tol: f64, check: Check) {
        self.out.rows.push(ReportRow {
            experiment: self.cfg.id().to_string(),
            resolution: self.n,
            quantity: quantity.to_string(),
            value,
            reference,
            source: source.to_string(),
            tolerance: self.cfg.tolerance(quantity, tol),
            check,
        });
    }

    fn info(&mut self, quantity: &str, value: f64) {
        self.push(quantity, value, None, "computed", 0.0, Check::Info);
    }

    fn flag(&mut self, quantity: &str, ok: bool, source: &str) {
        self.push(quantity, ok as u8 as f64, Some(1.0), source, 0.0, Check::Close);
    }

    fn artifact(&mut self, name: String, text: String) {
        self.out.artifacts.push((name, text));
    }

    fn figure(&mut self, opts: RunOptions, what: &str, fig: impl FnOnce(String) -> Figure) {
        if opts.figures {
            let name = self.stem(what);
            self.out.figures.push(fig(name));
        }
    }

    fn stem(&self, what: &str) -> String {
        format!("{}_{}_n{}", self.cfg.id(), what, self.n)
    }
}

pub(super) fn execute(
    cfg: &ExperimentConfig,
    n: usize,
    field: Option<&MetricField>,
    opts: RunOptions,
    out: &mut RunOutput,
) -> Result<()> {
    let p = &cfg.operation.params;
    let mut rows = Rows { cfg, n, out };
    let need = || field.ok_or_else(|| Error::InvalidParameter(format!("operation '{}' needs a field", cfg.operation.name)));
    let exec = opts.exec;
    match cfg.operation.name.as_str() {
        "besicovitch" => besicovitch(&mut rows, need()?, p, opts),
        "besicovitch-sweep" => besicovitch_sweep(&mut rows, p, exec),
        "hexagon" => {
            let f = need()?;
            let min_d = param_f64(p, "min_distance", 1.0)?;
            let max_area = param_f64(p, "max_area", 0.2)?;
            let rep = hexagon_check(f, min_d, max_area)?;
            for (a, b, d) in &rep.distances {
                rows.push(&format!("dist_{a}_{b}"), *d, Some(min_d), "construction", 0.0, Check::AtLeast);
            }
            rows.push("area", rep.area, Some(max_area), "construction", 0.0, Check::AtMost);
            rows.flag("pass", rep.pass, "checker");
            Ok(())
        }
        "cylinder" => {
            let f = need()?;
            let t_count = param_usize(p, "levels", 257)?;
            let delta = param_f64(p, "delta", 0.05)?;
            let tol = param_f64(p, "tol", 0.01)?;
            let rep = cylinder_check(f, t_count, delta, tol)?;
            rows.push("boundary_distance", rep.boundary_distance, Some(1.0), "hypothesis", 1e-9, Check::AtLeast);
            rows.push("loop_length", rep.systole, Some(1.0), "hypothesis", 1e-9, Check::AtLeast);
            rows.push("area", rep.area, Some(1.0), "closed-form", 1e-12, Check::Close);
            rows.push("coarea_total", rep.coarea_total, Some(1.0), "theorem bound", tol, Check::Close);
            rows.push("min_interior_level", rep.min_interior_level, Some(1.0), "theorem bound", tol, Check::AtLeast);
            rows.flag("pass", rep.verdict == CheckVerdict::Pass, "checker");
            let (t, a): (Vec<f64>, Vec<f64>) = rep.levels.iter().cloned().unzip();
            rows.artifact(rows.stem("levels") + ".csv", write_profile("t", "length", &t, &a));
            Ok(())
        }
        "systolic-ratio" => systolic_ratio(&mut rows, need()?, p, opts),
        "loewner-bumps" => loewner_bumps(&mut rows, p, exec),
        "coarea" => {
            let f = need()?;
            let face: FaceLabel = param_str(p, "face", "A")?.parse()?;
            let levels = param_usize(p, "levels", 257)?;
            let dist = face_distance_field(f, face)?.dist;
            let prof = coarea_profile_with(f, &dist, levels, exec)?;
            let tol = param_f64(p, "tol", 0.01)?;
            rows.push("coarea_total", prof.total, Some(prof.volume), "Fubini oracle", tol, Check::Close);
            rows.push("defect", prof.defect, Some(0.0), "theorem bound", 1e-9, Check::AtLeast);
            rows.artifact(rows.stem("profile") + ".csv", write_profile("t", "length", &prof.t_grid, &prof.a));
            rows.figure(opts, "distance", |name| {
                let mut fig = vertex_figure(name, f.grid(), &dist);
                for &t in prof.t_grid.iter().step_by((levels / 8).max(1)) {
                    if let Ok(l) = crate::measure::level_set_measure(f, &dist, t) {
                        fig.lines.extend(l.segments.iter().map(|s| s.to_vec()));
                    }
                }
                fig
            });
            Ok(())
        }
        "hausdorff" => {
            let refs = [1.0, PI / 4.0, PI / 6.0, PI * PI / 32.0];
            for (k, r) in refs.iter().enumerate() {
                let v = hausdorff_conversion(k + 1)?;
                rows.push(&format!("conversion_n{}", k + 1), v, Some(*r), "closed-form", 1e-15, Check::Close);
            }
            Ok(())
        }
        "width" => width(&mut rows, need()?, p, exec),
        "width-volume" => width_volume(&mut rows, need()?, p, opts),
        "sys-crosschecks" => sys_crosschecks(&mut rows, exec),
        "involution" => {
            let rep = involution_check(need()?)?;
            rows.push("min_antipodal", rep.min_antipodal, None, "computed", 0.0, Check::Info);
            rows.push("normalized_area", rep.normalized_area, Some(0.5), "theorem bound", 0.0, Check::AtLeast);
            let tol = param_f64(p, "conjecture_tol", 0.02)?;
            rows.push("normalized_area_vs_4_over_pi", rep.normalized_area, Some(4.0 / PI), "conjectured constant", tol, Check::Info);
            Ok(())
        }
        "gadograph" => {
            let f = need()?;
            let m = cfg.metric.as_ref().ok_or_else(|| Error::InvalidParameter("gadograph needs a metric".into()))?;
            if m.builder != "disk" {
                return Err(Error::InvalidParameter("gadograph needs the disk builder".into()));
            }
            let (c, r) = disk_of(&m.params)?;
            let grid = f.grid();
            let region = |v: usize| in_disk(grid, v, c, r);
            let rep = gadograph_check(f, &region, param_usize(p, "boundary_samples", 32)?)?;
            rows.flag("boundary_hypothesis", rep.hypothesis_ok, "hypothesis");
            rows.push("vol_g", rep.vol_g, Some(rep.vol_euclid), "Euclidean volume", 0.0, Check::AtLeast);
            rows.info("pairs_checked", rep.pairs_checked as f64);
            Ok(())
        }
        "sphere-volume" => {
            let f = need()?;
            let radius = cfg.metric.as_ref().map(|m| param_f64(&m.params, "radius", 1.0)).transpose()?.unwrap_or(1.0);
            let share = if f.grid().kind() == DomainKind::Rp2 { 0.5 } else { 1.0 };
            let v = volume_with(f, exec);
            let tol = param_f64(p, "tol", 0.01)?;
            rows.push("volume", v, Some(share * 4.0 * PI * radius * radius), "closed-form", tol, Check::Close);
            Ok(())
        }
        "invariants" => invariants(&mut rows, p, exec),
        other => Err(Error::Parse(format!("unknown operation '{other}'"))),
    }
}

fn besicovitch(rows: &mut Rows, f: &MetricField, p: &toml::Table, opts: RunOptions) -> Result<()> {
    let rel_tol = param_f64(p, "rel_tol", DEFAULT_REL_TOL)?;
    let rep = verify_besicovitch_with(f, rel_tol, opts.exec)?;
    let flat = param_str(p, "expect", "bound")? == "flat";
    for (i, d) in rep.d.iter().enumerate() {
        if flat {
            rows.push(&format!("d{}", i + 1), *d, Some(1.0), "closed-form", 1e-12, Check::Close);
        } else {
            rows.info(&format!("d{}", i + 1), *d);
        }
    }
    if flat {
        rows.push("vol", rep.vol, Some(1.0), "closed-form", 1e-12, Check::Close);
        rows.push("jac_max_interior", rep.jac_max_interior, Some(1.0), "closed-form", 1e-9, Check::Close);
    } else {
        rows.info("vol", rep.vol);
        rows.info("jac_max_interior", rep.jac_max_interior);
    }
    rows.push("slack_rel", rep.slack / rep.product, Some(0.0), "theorem bound", rel_tol, Check::AtLeast);
    if let Degree::Computed(k) = rep.degree {
        rows.push("degree", k as f64, Some(1.0), "theorem", 0.0, Check::Close);
    }
    rows.flag("face_containment", rep.containment_ok, "theorem");
    rows.info("flatness", rep.flatness);
    rows.flag("pass", rep.pass, "checker");
    rows.artifact(rows.stem("report") + ".toml", write_besicovitch(&rep));
    rows.artifact(rows.stem("histogram") + ".csv", write_histogram(&rep));
    if opts.figures && f.dim() == 2 {
        let map = face_distance_map_with(f, opts.exec)?;
        let jac = jacobian_bound_check_with(f, &map, opts.exec)?;
        let fig = cell_figure(rows.stem("jacobian"), f.grid(), &jac.per_cell);
        rows.out.figures.push(fig);
    }
    Ok(())
}

/// Seeds `base..base+count` of the configured randomized builder.
fn seeded(cfg: &ExperimentConfig) -> Result<(&DomainSection, MetricSection, u64)> {
    let missing = || Error::InvalidParameter(format!("operation '{}' needs a field", cfg.operation.name));
    let d = cfg.domain.as_ref().ok_or_else(missing)?;
    let mut m = cfg.metric.clone().ok_or_else(missing)?;
    let base = match m.params.remove("seed") {
        Some(toml::Value::Integer(i)) if i >= 0 => i as u64,
        Some(v) => return Err(Error::Parse(format!("seed must be a nonnegative integer, got {v}"))),
        None => cfg.run.seed.ok_or_else(|| Error::Parse("sweep needs a seed".into()))?,
    };
    Ok((d, m, base))
}

fn besicovitch_sweep(rows: &mut Rows, p: &toml::Table, exec: Exec) -> Result<()> {
    let count = param_usize(p, "count", 100)?;
    let rel_tol = param_f64(p, "rel_tol", DEFAULT_REL_TOL)?;
    let (d, m, base) = seeded(rows.cfg)?;
    let n = rows.n;
    // seeds run one after another; each report parallelizes internally
    let mut reports = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let f = build_field(d, &m, n, Some(base + k))?;
        reports.push(verify_besicovitch_with(&f, rel_tol, exec)?);
    }
    let min_slack = reports.iter().map(|r| r.slack / r.product).fold(f64::INFINITY, f64::min);
    let passed = reports.iter().filter(|r| r.pass).count();
    let jac = reports.iter().map(|r| r.jac_max_interior).fold(0.0, f64::max);
    let flagged = reports.iter().filter(|r| !r.jac_within_slack).count();
    rows.push("min_slack_rel", min_slack, Some(0.0), "theorem bound", rel_tol, Check::AtLeast);
    rows.push("pass_count", passed as f64, Some(count as f64), "theorem", 0.0, Check::Close);
    rows.info("max_jac_interior", jac);
    rows.info("jac_outside_slack", flagged as f64);
    Ok(())
}

fn systolic_ratio(rows: &mut Rows, f: &MetricField, p: &toml::Table, opts: RunOptions) -> Result<()> {
    let w = systole_with(f, opts.exec)?;
    let vol = volume_with(f, opts.exec);
    let ratio = w.length / vol.sqrt();
    let tol = param_f64(p, "tol", 0.02)?;
    match param_str(p, "constant", "none")? {
        "loewner" => {
            rows.info("sys", w.length);
            rows.info("vol", vol);
            rows.push("ratio", ratio, Some(loewner_constant()), "closed-form", tol, Check::Close);
        }
        "pu" => {
            let radius = rows.cfg.metric.as_ref().map(|m| param_f64(&m.params, "radius", 1.0)).transpose()?.unwrap_or(1.0);
            rows.push("sys", w.length, Some(PI * radius), "closed-form", tol, Check::Close);
            rows.push("vol", vol, Some(2.0 * PI * radius * radius), "closed-form", param_f64(p, "vol_tol", 0.01)?, Check::Close);
            rows.push("ratio", ratio, Some(pu_constant()), "closed-form", tol, Check::Close);
        }
        "flat-square" => {
            rows.push("sys", w.length, Some(1.0), "closed-form", tol, Check::Close);
            rows.push("vol", vol, Some(1.0), "closed-form", 1e-12, Check::Close);
            rows.push("ratio", ratio, Some(1.0), "closed-form", tol, Check::Close);
        }
        "none" => {
            rows.info("sys", w.length);
            rows.info("vol", vol);
            rows.info("ratio", ratio);
        }
        other => return Err(Error::Parse(format!("unknown constant '{other}'"))),
    }
    rows.artifact(rows.stem("witness") + ".csv", crate::io::write_witness(f.grid(), &w));
    rows.figure(opts, "witness", |name| {
        let mut fig = Figure { name, ..Default::default() };
        if f.dim() == 2 {
            fig.lines = wrapped_lines(&w.polyline);
        }
        fig
    });
    Ok(())
}

fn loewner_bumps(rows: &mut Rows, p: &toml::Table, exec: Exec) -> Result<()> {
    let count = param_usize(p, "count", 20)?;
    let margin = param_f64(p, "margin", 0.02)?;
    let (d, m, base) = seeded(rows.cfg)?;
    let bound = 2.0 / 3f64.sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..count as u64 {
        let f = build_field(d, &m, rows.n, Some(base + k))?;
        let sys = systole_with(&f, exec)?.length;
        let r = sys * sys / volume_with(&f, exec);
        worst = worst.max(r);
        rows.push(&format!("sys2_over_vol_seed{}", base + k), r, Some(bound), "theorem bound", margin / bound, Check::AtMost);
    }
    let hex = build_field(
        d,
        &MetricSection { builder: "hexagonal".into(), params: toml::Table::new() },
        rows.n,
        None,
    )?;
    let hsys = systole_with(&hex, exec)?.length;
    let hr = hsys * hsys / volume_with(&hex, exec);
    rows.push("sys2_over_vol_hexagonal", hr, Some(bound), "closed-form", margin / bound, Check::Close);
    rows.push("max_bump_vs_hexagonal", worst, Some(hr), "hexagonal case", 0.0, Check::AtMost);
    Ok(())
}

fn width(rows: &mut Rows, f: &MetricField, p: &toml::Table, exec: Exec) -> Result<()> {
    let targets = param_f64s(p, "r")?.unwrap_or_else(|| vec![0.55]);
    let expect: Vec<bool> = match p.get("expect_valid") {
        Some(toml::Value::Array(a)) => a.iter().map(|v| v.as_bool().unwrap_or(false)).collect(),
        _ => vec![true; targets.len()],
    };
    if expect.len() != targets.len() {
        return Err(Error::Parse("expect_valid must match r".into()));
    }
    let allowed = param_usize(p, "max_multiplicity", 2)?;
    rows.artifact(rows.stem("field") + ".csv", crate::io::write_field(f));
    for (&r, &exp) in targets.iter().zip(&expect) {
        let cert = width_upper_bound_with(f, r, exec)?;
        let tag = format!("r{r}");
        rows.push(&format!("valid_{tag}"), cert.valid as u8 as f64, Some(exp as u8 as f64), "strip oracle", 0.0, Check::Close);
        if cert.valid {
            let reasons = validate_certificate(f, &cert);
            rows.push(&format!("revalidation_failures_{tag}"), reasons.len() as f64, Some(0.0), "validator", 0.0, Check::Close);
            rows.push(
                &format!("multiplicity_{tag}"),
                cert.cover.multiplicity as f64,
                Some(allowed as f64),
                "definition",
                0.0,
                Check::AtMost,
            );
            rows.push(&format!("max_radius_{tag}"), cert.cover.max_radius(), Some(r), "definition", 0.0, Check::AtMost);
            rows.artifact(rows.stem(&format!("certificate_{tag}")) + ".toml", write_certificate(f.grid(), &cert));
        }
    }
    Ok(())
}

fn width_volume(rows: &mut Rows, f: &MetricField, p: &toml::Table, opts: RunOptions) -> Result<()> {
    let vol = volume_with(f, opts.exec);
    let n = f.dim() as f64;
    let r_star = n * vol.powf(1.0 / n);
    let cert = width_upper_bound_with(f, r_star, opts.exec)?;
    rows.flag("valid_at_r_star", cert.valid, "theorem");
    if cert.valid {
        rows.push("revalidation_failures", validate_certificate(f, &cert).len() as f64, Some(0.0), "validator", 0.0, Check::Close);
        rows.artifact(rows.stem("certificate") + ".toml", write_certificate(f.grid(), &cert));
    }
    // the pigeonhole check runs on a cut well below the trivial radius
    let r = param_f64(p, "cut_r", 0.5)?;
    let a = param_f64(p, "r0_fraction", 0.5)?;
    let (r0, r1) = (a * r, r);
    let cut = separating_cut_with(f, r, r0, r1, CutStrategy::FarthestPoint, CUT_BUDGET, opts.exec)?;
    let volpro = volume_profile_with(f, &[r1], param_usize(p, "centers", 16)?, opts.exec)?.volpro[0];
    let bound = volpro / (r1 - r0);
    let tol = param_f64(p, "tol", 0.05)?;
    rows.flag("cut_valid", cut.valid, "construction");
    for (k, c) in cut.curves.iter().enumerate() {
        rows.push(&format!("curve{k}_length"), c.length, Some(bound), "coarea pigeonhole", tol, Check::AtMost);
    }
    rows.info("curves", cut.curves.len() as f64);
    rows.figure(opts, "cut", |name| {
        let mut fig = Figure { name, ..Default::default() };
        for c in &cut.curves {
            fig.lines.extend(c.segments.iter().map(|s| s.to_vec()));
        }
        fig
    });
    Ok(())
}

struct SuiteEntry {
    name: &'static str,
    domain: DomainSection,
    metric: MetricSection,
    /// Fixed resolution, for domains that need a matching lattice.
    resolution: Option<usize>,
}

fn entry(name: &'static str, kind: &str, builder: &str, params: &str) -> SuiteEntry {
    SuiteEntry {
        name,
        domain: DomainSection { kind: kind.into(), stencil_order: 3, ..Default::default() },
        metric: MetricSection { builder: builder.into(), params: toml::from_str(params).expect("suite params") },
        resolution: None,
    }
}

/// Metrics of the gallery, in a fixed order.
fn gallery_suite() -> Vec<SuiteEntry> {
    let mut tee = entry("thin-hexagon", "hexagon", "physical-flat", "");
    tee.domain.mask = Some("tee".into());
    tee.domain.arm = Some(1.0);
    tee.domain.width = Some(0.05);
    tee.resolution = Some(206);
    vec![
        entry("flat-square", "square", "flat", ""),
        entry("random-square", "square", "random", "seed = 1"),
        entry("flat-torus", "torus2", "flat", ""),
        entry("hexagonal-torus", "torus2", "hexagonal", ""),
        entry("bumps-torus", "torus2", "bumps", "seed = 3\ncount = 4"),
        entry("flat-cylinder", "cylinder", "product", ""),
        entry("round-rp2", "rp2", "round", ""),
        entry("involution-sphere", "sphere2", "round", &format!("radius = {}", 1.0 / PI)),
        entry("gadograph-disk", "square", "disk", ""),
        tee,
    ]
}

/// Surfaces with a systole where the volume inequality applies.
fn systolic_suite() -> Vec<SuiteEntry> {
    vec![
        entry("flat-torus", "torus2", "flat", ""),
        entry("hexagonal-torus", "torus2", "hexagonal", ""),
        entry("bumps-torus", "torus2", "bumps", "seed = 3\ncount = 4"),
        entry("random-torus", "torus2", "random", "seed = 2"),
        entry("round-rp2", "rp2", "round", ""),
    ]
}

fn sys_crosschecks(rows: &mut Rows, exec: Exec) -> Result<()> {
    for e in systolic_suite() {
        let f = build_field(&e.domain, &e.metric, e.resolution.unwrap_or(rows.n), None)?;
        let certs = match f.grid().kind() {
            DomainKind::Torus2 => {
                let root = volume_with(&f, exec).sqrt();
                [0.5 * root, 2.0 * root].iter().map(|&r| width_upper_bound_with(&f, r, exec)).collect::<Result<Vec<_>>>()?
            }
            _ => Vec::new(),
        };
        let rep = check_sys_width(&f, &certs)?;
        let name = e.name;
        rows.push(&format!("{name}.sys_vs_volume_bound"), rep.sys, Some(rep.vol_bound), "theorem bound", 0.0, Check::AtMost);
        for (r, _, _) in &rep.width_checks {
            rows.push(&format!("{name}.sys_vs_6r_r{r:.6}"), rep.sys, Some(6.0 * r), "theorem bound", 0.0, Check::AtMost);
        }
        rows.info(&format!("{name}.valid_certificates"), rep.width_checks.len() as f64);
    }
    Ok(())
}

fn invariants(rows: &mut Rows, p: &toml::Table, exec: Exec) -> Result<()> {
    let triples = param_usize(p, "triples", 10_000)?;
    let sources = param_usize(p, "sources", 20)?;
    let scale = param_f64(p, "scale", 3.0)?;
    let seed = rows.cfg.run.seed.unwrap_or(0);
    for e in gallery_suite() {
        let f = build_field(&e.domain, &e.metric, e.resolution.unwrap_or(rows.n), Some(seed))?;
        invariants_for(rows, e.name, &f, triples, sources, scale, seed, exec)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn invariants_for(
    rows: &mut Rows,
    name: &str,
    f: &MetricField,
    triples: usize,
    sources: usize,
    scale: f64,
    seed: u64,
    exec: Exec,
) -> Result<()> {
    let grid = f.grid();
    let p0 = grid.active_vertices().next().ok_or(Error::EmptyMask)?;
    let d0 = distance_field(f, &[p0])?;
    let reach = grid.active_vertices().map(|v| d0.dist[v]).fold(0.0, f64::max);
    let cover = slicing_cover(f, p0, reach / 3.0)?;
    let pu = partition_of_unity_with(f, &cover, exec)?;
    let nv = nerve(&cover, grid);
    let q = |s: &str| format!("{name}.{s}");
    rows.push(&q("pu_sum_defect"), pu.sum_defect(grid), Some(0.0), "definition", 1e-12, Check::AtMost);
    rows.flag(&q("pu_support_exact"), pu.support_exact(grid, &cover), "definition");
    let mut lip_excess: f64 = 0.0;
    for phi in &pu.phi {
        for v in grid.active_vertices() {
            for e in grid.neighbors(v) {
                lip_excess = lip_excess.max((phi[v] - phi[e.to]).abs() - f.edge_length_at(e.index));
            }
        }
    }
    rows.push(&q("phi_lipschitz_excess"), lip_excess, Some(0.0), "definition", 1e-12, Check::AtMost);
    rows.push(
        &q("nerve_dim_plus_one"),
        (nv.dimension + 1) as f64,
        Some(cover.multiplicity as f64),
        "definition",
        0.0,
        Check::Close,
    );
    rows.flag(&q("nerve_closed"), nv.closed_under_faces(), "definition");
    rows.flag(&q("star_containment"), star_containment(&nv, &cover, &pu, grid), "definition");
    rows.push(&q("slicing_multiplicity"), cover.multiplicity as f64, Some(2.0), "construction", 0.0, Check::AtMost);

    // triangle inequality on random triples through a fixed source set
    let src = stratified_centers(f, sources);
    let fields: Vec<Vec<f64>> = exec.map(&src, |&s| dijkstra(f, &[(s, 0.0)], f64::INFINITY).dist);
    let active: Vec<usize> = grid.active_vertices().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7269_656d);
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        let a = rng.gen_range(0..src.len());
        let b = rng.gen_range(0..src.len());
        let c = active[rng.gen_range(0..active.len())];
        let lhs = fields[a][c];
        let rhs = fields[a][src[b]] + fields[b][c];
        worst = worst.max((lhs - rhs) / rhs.max(1e-300));
    }
    rows.push(&q("triangle_excess"), worst, Some(0.0), "metric axiom", 1e-12, Check::AtMost);

    // scaling: lengths by c, volume by cⁿ
    let g = f.scaled(scale);
    let n = f.dim() as i32;
    let vol = volume_with(f, exec);
    rows.push(&q("scaled_volume"), volume_with(&g, exec), Some(scale.powi(n) * vol), "scaling law", 1e-12, Check::Close);
    let ds = distance_field(&g, &[p0])?;
    let dist_err = grid
        .active_vertices()
        .filter(|&v| d0.dist[v] > 0.0)
        .map(|v| (ds.dist[v] / (scale * d0.dist[v]) - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(&q("scaled_distance_error"), dist_err, Some(0.0), "scaling law", 1e-12, Check::AtMost);
    Ok(())
}

/// Per-cell heatmap (surfaces only).
fn cell_figure(name: String, grid: &Grid, values: &[f64]) -> Figure {
    let cells = grid.cells();
    let mut fig = Figure { name, ..Default::default() };
    if grid.dim() == 2 {
        for c in 0..cells.len() {
            let o = cells.origin_of(c, 2);
            let s = cells.size_of(c, 2);
            fig.cells.push(([o[0], o[1]], [s[0], s[1]], values[c]));
        }
    }
    fig
}

/// Heatmap of a vertex function through its cell means.
fn vertex_figure(name: String, grid: &Grid, f: &[f64]) -> Figure {
    let cells = grid.cells();
    let vals: Vec<f64> = (0..cells.len())
        .map(|c| {
            let cs = cells.corners_of(c);
            cs.iter().map(|&v| f[v]).sum::<f64>() / cs.len() as f64
        })
        .collect();
    cell_figure(name, grid, &vals)
}

/// Unwrapped polyline folded into the unit chart, broken at the seams.
fn wrapped_lines(pl: &Polyline) -> Vec<Vec<[f64; 2]>> {
    let mut lines = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    let mut last_wrap: Option<[f64; 2]> = None;
    for pt in &pl.points {
        let wrap = [pt[0].floor(), pt[1].floor()];
        let local = [pt[0] - wrap[0], pt[1] - wrap[1]];
        if last_wrap.is_some_and(|w| w != wrap) {
            lines.push(std::mem::take(&mut cur));
        }
        cur.push(local);
        last_wrap = Some(wrap);
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    lines.retain(|l| l.len() > 1);
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::all_pass;

    #[test]
    fn constants() {
        assert!((loewner_constant() - 1.074569931823542).abs() < 1e-12);
        assert!((pu_constant() - 1.2533141373155).abs() < 1e-12);
    }

    #[test]
    fn wrapped_lines_split_at_seam() {
        let pl = Polyline::new(vec![vec![0.75, 0.5], vec![0.875, 0.5], vec![1.0, 0.5], vec![1.25, 0.5], vec![1.5, 0.5]]);
        let lines = wrapped_lines(&pl);
        assert_eq!(lines, vec![vec![[0.75, 0.5], [0.875, 0.5]], vec![[0.0, 0.5], [0.25, 0.5], [0.5, 0.5]]]);
    }

    #[test]
    fn every_operation_dispatches() {
        for op in OPERATIONS.iter().filter(|op| needs_field(op) || **op == "hausdorff") {
            let cfg = ExperimentConfig {
                operation: super::super::OperationSection { name: op.to_string(), params: toml::Table::new() },
                run: super::super::RunSection { resolutions: vec![8], ..Default::default() },
                ..Default::default()
            };
            let mut out = RunOutput::default();
            let r = execute(&cfg, 8, None, RunOptions::default(), &mut out);
            if needs_field(op) {
                assert!(matches!(r, Err(Error::InvalidParameter(_))), "{op}");
            } else {
                assert!(r.is_ok() && all_pass(&out.rows), "{op}");
            }
        }
    }
}
