//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances are pinned here.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use riemgrid::besicovitch::{
    cylinder_check, hexagon_check, involution_check, thin_hexagon_field, verify_besicovitch, Degree,
};
use riemgrid::covers::{check_width_volume, separating_cut, validate_certificate, width_upper_bound};
use riemgrid::experiment::{gallery, refine_rows, run, Check, ReportRow, RunOptions, Verdict};
use riemgrid::geodesy::{face_distance_field, systole};
use riemgrid::io::{read_certificate, write_certificate};
use riemgrid::measure::{coarea_profile, hausdorff_conversion, volume, volume_profile};
use riemgrid::metric::{constant_metric, flat_metric, random_spd_metric, round_sphere_metric};
use riemgrid::{DomainTopology, FaceLabel, Grid, MetricField};

fn grid(t: DomainTopology, n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(t, n, 3).expect("grid"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn gallery_rows(name: &str) -> Vec<ReportRow> {
    let item = gallery::find(name).expect("gallery item");
    let mut rows = Vec::new();
    for cfg in item.parsed().expect("config") {
        rows.extend(run(&cfg, RunOptions::default()).expect("run").rows);
    }
    rows
}

type Outcome = (bool, String);

fn c1_besicovitch_flat() -> Outcome {
    let t = Instant::now();
    let f = flat_metric(grid(DomainTopology::square(), 64));
    let r = verify_besicovitch(&f).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = r.d.iter().all(|d| (d - 1.0).abs() <= 1e-12)
        && (r.vol - 1.0).abs() <= 1e-12
        && (r.jac_max_interior - 1.0).abs() <= 1e-9
        && r.degree == Degree::Computed(1)
        && r.pass
        && secs < 1.0;
    (ok, format!("d = {:?}, vol = {}, jac_max_interior = {}, degree {:?}, {secs:.2}s", r.d, r.vol, r.jac_max_interior, r.degree))
}

fn c2_besicovitch_sweep() -> Outcome {
    let t = Instant::now();
    let g = grid(DomainTopology::square(), 96);
    let mut worst = f64::INFINITY;
    let mut all = true;
    for seed in 0..100 {
        let f = random_spd_metric(g.clone(), seed, 0.25, 4.0).unwrap();
        let r = verify_besicovitch(&f).unwrap();
        worst = worst.min(r.slack / r.product);
        all &= r.pass && r.slack >= -0.01 * r.product;
    }
    let secs = t.elapsed().as_secs_f64();
    (all && secs < 120.0, format!("100 metrics, min slack/product = {worst:.4}, {secs:.1}s"))
}

fn c3_hexagon() -> Outcome {
    let f = thin_hexagon_field(1.0, 0.05, 206, 3).unwrap();
    let r = hexagon_check(&f, 1.0, 0.2).unwrap();
    // three 1 × 0.05 arms around a 0.05 square hub
    let oracle_area = 3.0 * 1.0 * 0.05 + 0.05 * 0.05;
    let ok = r.pass && r.distances.len() == 3 && r.min_distance >= 1.0 && r.area <= 0.2 && (r.area - oracle_area).abs() < 1e-9;
    (ok, format!("min opposite distance {:.6}, area {:.6} (oracle {oracle_area})", r.min_distance, r.area))
}

fn c4_cylinder() -> Outcome {
    let f = flat_metric(grid(DomainTopology::cylinder(), 96));
    let r = cylinder_check(&f, 257, 0.05, 0.01).unwrap();
    let ok = (0.99..=1.01).contains(&r.coarea_total) && r.min_interior_level >= 0.99 && (r.area - 1.0).abs() <= 1e-12;
    (ok, format!("coarea total {:.6}, min interior level {:.6}, area {}", r.coarea_total, r.min_interior_level, r.area))
}

fn c5_loewner() -> Outcome {
    let target = 2f64.sqrt() / 3f64.powf(0.25);
    let mut rows = Vec::new();
    let mut last_secs = 0.0;
    for n in [32, 64, 128] {
        let t = Instant::now();
        let f = constant_metric(grid(DomainTopology::torus2(), n), &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let ratio = systole(&f).unwrap().length / volume(&f).sqrt();
        last_secs = t.elapsed().as_secs_f64();
        rows.push(ReportRow {
            experiment: "loewner".into(),
            resolution: n,
            quantity: "ratio".into(),
            value: ratio,
            reference: Some(target),
            source: "closed-form".into(),
            tolerance: 0.02,
            check: Check::Close,
        });
    }
    let table = refine_rows(&rows, "ratio").unwrap();
    let final_err = rel(rows[2].value, target);
    let ok = final_err <= 0.02 && table.non_increasing && last_secs < 60.0;
    (ok, format!("ratios {:?}, final rel error {final_err:.2e}, N=128 in {last_secs:.2}s", rows.iter().map(|r| r.value).collect::<Vec<_>>()))
}

fn c6_pu() -> Outcome {
    let f = round_sphere_metric(grid(DomainTopology::rp2(), 64), 1.0).unwrap();
    let sys = systole(&f).unwrap().length;
    let vol = volume(&f);
    let ratio = sys / vol.sqrt();
    let ok = rel(sys, PI) <= 0.02 && rel(vol, 2.0 * PI) <= 0.01 && rel(ratio, (PI / 2.0).sqrt()) <= 0.02;
    (ok, format!("sys {sys:.6}, vol {vol:.6}, ratio {ratio:.6} (target {:.6})", (PI / 2.0).sqrt()))
}

fn c7_loewner_bumps() -> Outcome {
    let rows = gallery_rows("loewner-bumps");
    let bound = 2.0 / 3f64.sqrt();
    let bumps: Vec<f64> = rows.iter().filter(|r| r.quantity.starts_with("sys2_over_vol_seed")).map(|r| r.value).collect();
    let hex = rows.iter().find(|r| r.quantity == "sys2_over_vol_hexagonal").unwrap().value;
    let worst = bumps.iter().cloned().fold(0.0, f64::max);
    let ok = bumps.len() == 20 && worst <= bound + 0.02 && (hex - bound).abs() <= 0.02 && worst < hex;
    (ok, format!("20 bump tori, max sys²/vol {worst:.4}; hexagonal {hex:.6}; bound {bound:.6}"))
}

fn c8_coarea() -> Outcome {
    let f = flat_metric(grid(DomainTopology::square(), 64));
    let d = face_distance_field(&f, FaceLabel::new(0, false)).unwrap().dist;
    let p = coarea_profile(&f, &d, 257).unwrap();
    // Fubini: every level is a unit segment over t ∈ [0, 1]
    let oracle = 1.0;
    let ok = rel(p.total, p.volume) <= 0.01 && rel(p.total, oracle) <= 0.01;
    (ok, format!("trapezoid total {:.8}, volume {:.8}", p.total, p.volume))
}

fn c9_hausdorff() -> Outcome {
    let refs = [1.0, PI / 4.0, PI / 6.0, PI * PI / 32.0];
    let got: Vec<f64> = (1..=4).map(|n| hausdorff_conversion(n).unwrap()).collect();
    let ok = got.iter().zip(&refs).all(|(g, r)| rel(*g, *r) <= 4.0 * f64::EPSILON);
    (ok, format!("{got:?}"))
}

fn c10_width_square() -> Outcome {
    let f = flat_metric(grid(DomainTopology::square(), 48));
    let good = width_upper_bound(&f, 0.55).unwrap();
    let (_, back) = read_certificate(&write_certificate(f.grid(), &good)).unwrap();
    let reasons = validate_certificate(&f, &back);
    let bad = width_upper_bound(&f, 0.2).unwrap();
    let ok = good.valid && reasons.is_empty() && back.cover.multiplicity <= 2 && !bad.valid;
    (
        ok,
        format!(
            "R=0.55: valid {}, multiplicity {}, revalidation failures {}; R=0.2: valid {}",
            good.valid,
            back.cover.multiplicity,
            reasons.len(),
            bad.valid
        ),
    )
}

fn c11_width_volume() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, g) in [("flat", [1.0, 0.0, 0.0, 1.0]), ("hexagonal", [1.0, 0.5, 0.5, 1.0])] {
        let f = constant_metric(grid(DomainTopology::torus2(), 32), &g).unwrap();
        let wv = check_width_volume(&f).unwrap();
        let cert_ok = wv.at_r_star.valid && validate_certificate(&f, &wv.at_r_star).is_empty();
        let (r0, r1) = (0.25, 0.5);
        let cut = separating_cut(&f, 0.5, r0, r1).unwrap();
        let bound = volume_profile(&f, &[r1], 16).unwrap().volpro[0] / (r1 - r0);
        let longest = cut.curves.iter().map(|c| c.length).fold(0.0, f64::max);
        let cuts_ok = cut.valid && !cut.curves.is_empty() && longest <= 1.05 * bound;
        ok &= cert_ok && cuts_ok;
        msg.push(format!("{name}: R*={:.4} valid {cert_ok}, {} curves, longest {longest:.4} ≤ {:.4}", wv.r_star, cut.curves.len(), 1.05 * bound));
    }
    (ok, msg.join("; "))
}

fn c12_sys_crosschecks() -> Outcome {
    let rows = gallery_rows("sys-crosschecks");
    let checked: Vec<&ReportRow> = rows.iter().filter(|r| r.check != Check::Info).collect();
    let width_rows = checked.iter().filter(|r| r.quantity.contains("sys_vs_6r")).count();
    let ok = checked.iter().all(|r| r.tolerance == 0.0 && r.verdict() == Verdict::Pass) && width_rows > 0;
    (ok, format!("{} inequalities at zero tolerance ({width_rows} against certified widths)", checked.len()))
}

fn c13_involution() -> Outcome {
    let f: MetricField = round_sphere_metric(grid(DomainTopology::sphere2(), 64), 1.0 / PI).unwrap();
    let r = involution_check(&f).unwrap();
    let ok = r.bound_ok && r.normalized_area >= 0.5;
    let info = (r.conjecture_ratio - 1.0).abs();
    (
        ok,
        format!(
            "min d(x, -x) = {:.6}, normalized area {:.6} ≥ 0.5; vs 4/π off by {:.2}% (informational, {})",
            r.min_antipodal,
            r.normalized_area,
            100.0 * info,
            if info <= 0.02 { "within 2%" } else { "outside 2%" }
        ),
    )
}

fn c14_invariants() -> Outcome {
    let t = Instant::now();
    let rows = gallery_rows("invariant-suites");
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = rows.iter().filter(|r| r.verdict() == Verdict::Fail).map(|r| r.quantity.as_str()).collect();
    let metrics: std::collections::BTreeSet<&str> = rows.iter().filter_map(|r| r.quantity.split('.').next()).collect();
    let ok = failed.is_empty() && secs < 300.0;
    (ok, format!("{} checks over {} metrics, failures {failed:?}, {secs:.1}s", rows.len(), metrics.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("besicovitch-equality", c1_besicovitch_flat),
        ("besicovitch-sweep", c2_besicovitch_sweep),
        ("hexagon-non-bound", c3_hexagon),
        ("cylinder-optimal", c4_cylinder),
        ("loewner-constant", c5_loewner),
        ("pu-constant", c6_pu),
        ("loewner-strictness", c7_loewner_bumps),
        ("coarea-equality", c8_coarea),
        ("hausdorff-constants", c9_hausdorff),
        ("width-square", c10_width_square),
        ("width-volume", c11_width_volume),
        ("systolic-crosschecks", c12_sys_crosschecks),
        ("involution-bound", c13_involution),
        ("invariant-suites", c14_invariants),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        failures += !ok as usize;
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
