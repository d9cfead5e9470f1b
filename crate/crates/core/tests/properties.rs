use std::sync::Arc;

use proptest::prelude::*;
use riemgrid::besicovitch::verify_besicovitch_with;
use riemgrid::covers::{nerve, partition_of_unity, slicing_cover};
use riemgrid::exec::Exec;
use riemgrid::experiment::{rows_from_csv, rows_to_csv, Check, ReportRow};
use riemgrid::geodesy::{dijkstra, systole_with};
use riemgrid::io::{decode_runs, encode_runs, fmt_f64, parse_f64, read_field, write_field};
use riemgrid::measure::volume;
use riemgrid::metric::random_spd_metric;
use riemgrid::{DomainTopology, Grid, MetricField};

fn random_field(t: DomainTopology, n: usize, seed: u64) -> MetricField {
    let g = Arc::new(Grid::new(t, n, 3).unwrap());
    random_spd_metric(g, seed, 0.25, 4.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distances_form_a_metric(seed in 0u64..1000, a in 0usize..144, b in 0usize..144, c in 0usize..144) {
        let f = random_field(DomainTopology::square(), 12, seed);
        let da = dijkstra(&f, &[(a, 0.0)], f64::INFINITY).dist;
        let db = dijkstra(&f, &[(b, 0.0)], f64::INFINITY).dist;
        prop_assert_eq!(da[a], 0.0);
        prop_assert!((da[b] - db[a]).abs() <= 1e-12 * da[b].max(1.0));
        prop_assert!(da[c] <= da[b] + db[c] + 1e-12);
    }

    #[test]
    fn scaling_laws(seed in 0u64..1000, c in 0.25f64..4.0) {
        let f = random_field(DomainTopology::torus2(), 10, seed);
        let g = f.scaled(c);
        prop_assert!((volume(&g) / (c * c * volume(&f)) - 1.0).abs() < 1e-12);
        let s0 = systole_with(&f, Exec::Sequential).unwrap().length;
        let s1 = systole_with(&g, Exec::Sequential).unwrap().length;
        prop_assert!((s1 / (c * s0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slicing_partition_of_unity(seed in 0u64..1000, frac in 0.1f64..0.6) {
        let f = random_field(DomainTopology::square(), 12, seed);
        let reach = dijkstra(&f, &[(0, 0.0)], f64::INFINITY).max_finite();
        let cover = slicing_cover(&f, 0, frac * reach).unwrap();
        prop_assert!(cover.multiplicity <= 2);
        let pu = partition_of_unity(&f, &cover).unwrap();
        prop_assert!(pu.sum_defect(f.grid()) <= 1e-12);
        prop_assert!(pu.support_exact(f.grid(), &cover));
        let nv = nerve(&cover, f.grid());
        prop_assert_eq!(nv.dimension + 1, cover.multiplicity);
        prop_assert!(nv.closed_under_faces());
    }

    #[test]
    fn besicovitch_bound_holds(seed in 0u64..100_000) {
        let f = random_field(DomainTopology::square(), 24, seed);
        let rep = verify_besicovitch_with(&f, 0.01, Exec::Sequential).unwrap();
        prop_assert!(rep.pass, "slack {} product {}", rep.slack, rep.product);
    }

    #[test]
    fn runs_round_trip(mut set in proptest::collection::vec(0usize..500, 0..80)) {
        set.sort_unstable();
        set.dedup();
        prop_assert_eq!(decode_runs(&encode_runs(&set)).unwrap(), set);
    }

    #[test]
    fn floats_round_trip(x in proptest::num::f64::ANY) {
        let y = parse_f64(&fmt_f64(x)).unwrap();
        prop_assert!(y.to_bits() == x.to_bits() || (x.is_nan() && y.is_nan()));
    }

    #[test]
    fn verdicts_survive_csv(value in -10.0f64..10.0, reference in -10.0f64..10.0, tol in 0.0f64..1.0, k in 0usize..4) {
        let check = [Check::Close, Check::AtLeast, Check::AtMost, Check::Info][k];
        let row = ReportRow {
            experiment: "p".into(),
            resolution: 4,
            quantity: "q".into(),
            value,
            reference: Some(reference),
            source: "oracle".into(),
            tolerance: tol,
            check,
        };
        let back = rows_from_csv(&rows_to_csv(std::slice::from_ref(&row))).unwrap();
        prop_assert_eq!(back[0].verdict(), row.verdict());
    }
}

#[test]
fn field_file_round_trip() {
    let f = random_field(DomainTopology::torus2(), 9, 4);
    let g = read_field(&write_field(&f)).unwrap();
    assert_eq!(f.hash_hex(), g.hash_hex());
}

#[test]
fn sequential_and_parallel_agree() {
    let f = random_field(DomainTopology::square(), 32, 9);
    let a = verify_besicovitch_with(&f, 0.01, Exec::Sequential).unwrap();
    let b = verify_besicovitch_with(&f, 0.01, Exec::Parallel).unwrap();
    assert_eq!(a.vol.to_bits(), b.vol.to_bits());
    assert_eq!(a.slack.to_bits(), b.slack.to_bits());
    assert_eq!(a.histogram, b.histogram);
    let t = random_field(DomainTopology::torus2(), 24, 9);
    let s = systole_with(&t, Exec::Sequential).unwrap();
    let p = systole_with(&t, Exec::Parallel).unwrap();
    assert_eq!(s.length.to_bits(), p.length.to_bits());
    assert_eq!(s.polyline, p.polyline);
}
