//! Text import and export: CSV tables (17 significant digits, LF endings)
//! and TOML documents for descriptors, certificates and reports.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::besicovitch::{BesicovitchReport, Degree};
use crate::covers::{Cover, Reason, WidthCertificate};
use crate::error::{Error, Result};
use crate::geodesy::{LoopClass, LoopWitness};
use crate::grid::{DomainKind, DomainTopology, Grid, HexagonMask, VertexId};
use crate::metric::MetricField;

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{t}'"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub kind: String,
    pub resolution: usize,
    pub stencil_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl DomainDescriptor {
    pub fn of(grid: &Grid) -> Self {
        let mask = grid.topology().mask;
        let (arm, width) = match mask {
            Some(HexagonMask::Tee { arm, width }) => (Some(arm), Some(width)),
            _ => (None, None),
        };
        DomainDescriptor {
            kind: grid.kind().to_string(),
            resolution: grid.resolution(),
            stencil_order: grid.stencil_order() as usize,
            mask: mask.map(|m| m.name().to_string()),
            arm,
            width,
        }
    }

    pub fn topology(&self) -> Result<DomainTopology> {
        let kind: DomainKind = self.kind.parse()?;
        let mask = match self.mask.as_deref() {
            None | Some("regular") => None,
            Some("tee") => Some(HexagonMask::Tee {
                arm: self.arm.ok_or_else(|| Error::Parse("tee mask needs arm".into()))?,
                width: self.width.ok_or_else(|| Error::Parse("tee mask needs width".into()))?,
            }),
            Some(other) => return Err(Error::Parse(format!("unknown mask '{other}'"))),
        };
        if mask.is_some() && kind != DomainKind::Hexagon {
            return Err(Error::Parse("masks apply to hexagon domains only".into()));
        }
        Ok(DomainTopology::from_kind(kind, mask))
    }

    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.topology()?, self.resolution, self.stencil_order)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn upper_indices(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// One row per vertex: index, chart coordinates, upper-triangle tensor
/// entries. The domain descriptor leads as `#` comment lines.
pub fn write_field(field: &MetricField) -> String {
    let grid = field.grid();
    let n = grid.dim();
    let mut s = String::new();
    for line in DomainDescriptor::of(grid).to_toml().lines() {
        let _ = writeln!(s, "# {line}");
    }
    let mut header = vec!["vertex".to_string()];
    header.extend((0..n).map(|a| format!("x{a}")));
    header.extend(upper_indices(n).iter().map(|(i, j)| format!("g{i}{j}")));
    let _ = writeln!(s, "{}", header.join(","));
    for v in 0..grid.vertex_count() {
        let t = field.tensor(v);
        let mut row = vec![v.to_string()];
        row.extend(grid.coords(v).iter().map(|&x| fmt_f64(x)));
        row.extend(upper_indices(n).iter().map(|&(i, j)| fmt_f64(t[i * n + j])));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn read_field(text: &str) -> Result<MetricField> {
    let desc: String =
        text.lines().filter_map(|l| l.strip_prefix('#')).map(|l| l.trim_start()).collect::<Vec<_>>().join("\n");
    let grid = Arc::new(DomainDescriptor::from_toml(&desc)?.build()?);
    let n = grid.dim();
    let upper = upper_indices(n);
    let mut tensors = vec![f64::NAN; grid.vertex_count() * n * n];
    let mut seen = vec![false; grid.vertex_count()];
    let mut rows = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = rows.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    if header.split(',').count() != 1 + n + upper.len() {
        return Err(Error::Parse("field header does not match the domain".into()));
    }
    for line in rows {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 1 + n + upper.len() {
            return Err(Error::Parse(format!("bad field row '{line}'")));
        }
        let v: VertexId = cols[0].trim().parse().map_err(|_| Error::Parse(format!("bad vertex '{}'", cols[0])))?;
        if v >= grid.vertex_count() || seen[v] {
            return Err(Error::Parse(format!("vertex {v} out of range or repeated")));
        }
        seen[v] = true;
        for a in 0..n {
            let x = parse_f64(cols[1 + a])?;
            if (x - grid.coords(v)[a]).abs() > 1e-12 {
                return Err(Error::Parse(format!("vertex {v} coordinate mismatch")));
            }
        }
        for (k, &(i, j)) in upper.iter().enumerate() {
            let x = parse_f64(cols[1 + n + k])?;
            tensors[v * n * n + i * n + j] = x;
            tensors[v * n * n + j * n + i] = x;
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("vertex {v} missing")));
    }
    MetricField::from_tensors(grid, tensors)
}

/// `class` and `length` lines, then one row per polyline point with chart
/// coordinates and wrap counters along the periodic axes.
pub fn write_witness(grid: &Grid, w: &LoopWitness) -> String {
    let mut s = String::new();
    let class = match &w.class {
        LoopClass::Lattice(c) => c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        LoopClass::Antipodal => "antipodal".into(),
    };
    let _ = writeln!(s, "class,{class}");
    let _ = writeln!(s, "length,{}", fmt_f64(w.length));
    let n = grid.dim();
    let axes = grid.periodic_axes();
    let mut header: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
    header.extend(axes.iter().map(|a| format!("wrap{a}")));
    let _ = writeln!(s, "{}", header.join(","));
    for (p, wr) in w.polyline.points.iter().zip(w.polyline.wraps(grid)) {
        let mut row: Vec<String> = p.iter().map(|&x| fmt_f64(x)).collect();
        row.extend(wr.iter().map(|k| k.to_string()));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn write_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Two-column profile table, e.g. ("t", "a") or ("r", "volpro").
pub fn write_profile(x_name: &str, y_name: &str, xs: &[f64], ys: &[f64]) -> String {
    let rows: Vec<Vec<f64>> = xs.iter().zip(ys).map(|(&x, &y)| vec![x, y]).collect();
    write_table(&[x_name, y_name], &rows)
}

/// Sorted vertex ids as runs: `0-15,20,22-31`.
pub fn encode_runs(set: &[VertexId]) -> String {
    let mut out = Vec::new();
    let mut i = 0;
    while i < set.len() {
        let mut j = i;
        while j + 1 < set.len() && set[j + 1] == set[j] + 1 {
            j += 1;
        }
        out.push(if i == j { set[i].to_string() } else { format!("{}-{}", set[i], set[j]) });
        i = j + 1;
    }
    out.join(",")
}

pub fn decode_runs(s: &str) -> Result<Vec<VertexId>> {
    let bad = || Error::Parse(format!("bad run list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SetDoc {
    center: VertexId,
    radius: f64,
    runs: String,
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    n_width: usize,
    r: f64,
    field_hash: String,
    multiplicity: usize,
    valid: bool,
    method: String,
    reasons: Vec<String>,
    domain: DomainDescriptor,
    sets: Vec<SetDoc>,
}

pub fn write_certificate(grid: &Grid, cert: &WidthCertificate) -> String {
    let doc = CertificateDoc {
        n_width: cert.n_width,
        r: cert.r,
        field_hash: cert.field_hash.clone(),
        multiplicity: cert.cover.multiplicity,
        valid: cert.valid,
        method: cert.method.clone(),
        reasons: cert.reasons.iter().map(|r| r.to_string()).collect(),
        domain: DomainDescriptor::of(grid),
        sets: (0..cert.cover.len())
            .map(|i| SetDoc {
                center: cert.cover.centers[i],
                radius: cert.cover.radii[i],
                runs: encode_runs(&cert.cover.sets[i]),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("certificate serializes")
}

/// Reads a certificate back. Its `valid` flag and reasons are carried as
/// written; callers re-check with [`crate::covers::validate_certificate`].
pub fn read_certificate(text: &str) -> Result<(DomainDescriptor, WidthCertificate)> {
    let doc: CertificateDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut sets = Vec::with_capacity(doc.sets.len());
    for s in &doc.sets {
        sets.push(decode_runs(&s.runs)?);
    }
    let cover = Cover {
        centers: doc.sets.iter().map(|s| s.center).collect(),
        radii: doc.sets.iter().map(|s| s.radius).collect(),
        sets,
        multiplicity: doc.multiplicity,
    };
    let reasons = doc.reasons.into_iter().map(Reason::CutFailed).collect();
    Ok((
        doc.domain,
        WidthCertificate {
            n_width: doc.n_width,
            r: doc.r,
            cover,
            field_hash: doc.field_hash,
            valid: doc.valid,
            reasons,
            method: doc.method,
        },
    ))
}

#[derive(Serialize)]
struct BesicovitchDoc<'a> {
    d: &'a [f64],
    vol: f64,
    product: f64,
    slack: f64,
    jac_max: f64,
    jac_max_interior: f64,
    row_norm_max: f64,
    hadamard_excess: f64,
    degree: String,
    degree_ok: bool,
    containment_ok: bool,
    jac_within_slack: bool,
    flatness: f64,
    rel_tol: f64,
    verdict: &'static str,
}

/// Key-value block for one report.
pub fn write_besicovitch(report: &BesicovitchReport) -> String {
    let doc = BesicovitchDoc {
        d: &report.d,
        vol: report.vol,
        product: report.product,
        slack: report.slack,
        jac_max: report.jac_max,
        jac_max_interior: report.jac_max_interior,
        row_norm_max: report.row_norm_max,
        hadamard_excess: report.hadamard_excess,
        degree: match report.degree {
            Degree::Computed(k) => k.to_string(),
            Degree::Skipped => "skipped".into(),
        },
        degree_ok: report.degree_ok,
        containment_ok: report.containment_ok,
        jac_within_slack: report.jac_within_slack,
        flatness: report.flatness,
        rel_tol: report.rel_tol,
        verdict: if report.pass { "PASS" } else { "FAIL" },
    };
    toml::to_string(&doc).expect("report serializes")
}

/// Per-cell |jac| histogram with its bin edges.
pub fn write_histogram(report: &BesicovitchReport) -> String {
    use crate::besicovitch::{HISTOGRAM_BINS, HISTOGRAM_MAX};
    let w = HISTOGRAM_MAX / HISTOGRAM_BINS as f64;
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (k, c) in report.histogram.iter().enumerate() {
        let hi = if k + 1 == HISTOGRAM_BINS { f64::INFINITY } else { (k + 1) as f64 * w };
        let _ = writeln!(s, "{},{},{c}", fmt_f64(k as f64 * w), fmt_f64(hi));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::random_spd_metric;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan());
    }

    #[test]
    fn runs_round_trip() {
        let set = vec![0, 1, 2, 3, 7, 9, 10, 11];
        assert_eq!(encode_runs(&set), "0-3,7,9-11");
        assert_eq!(decode_runs("0-3,7,9-11").unwrap(), set);
        assert!(decode_runs("5-2").is_err());
        assert_eq!(decode_runs("").unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn field_round_trip() {
        let g = Arc::new(Grid::new(DomainTopology::torus2(), 12, 3).unwrap());
        let m = random_spd_metric(g, 5, 0.25, 4.0).unwrap();
        let text = write_field(&m);
        assert!(!text.contains('\r'));
        let back = read_field(&text).unwrap();
        assert_eq!(back.hash_hex(), m.hash_hex());
    }

    #[test]
    fn tee_descriptor_round_trip() {
        let mask = HexagonMask::Tee { arm: 1.0, width: 0.25 };
        let g = Grid::new(DomainTopology::hexagon(mask), 19, 2).unwrap();
        let d = DomainDescriptor::of(&g);
        let back = DomainDescriptor::from_toml(&d.to_toml()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build().unwrap().descriptor(), g.descriptor());
    }
}
