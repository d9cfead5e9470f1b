//! Named metric builders used by experiment configs.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainSection, MetricSection};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::{
    conformal_from_fn, constant_metric, flat_metric, piecewise_metric, random_spd_metric, round_sphere_metric,
    MetricField,
};

pub const BUILDERS: &[&str] =
    &["flat", "constant", "hexagonal", "random", "round", "bumps", "disk", "physical-flat", "product"];

pub fn is_randomized(builder: &str) -> bool {
    matches!(builder, "random" | "bumps")
}

pub(crate) fn param_f64(t: &toml::Table, key: &str, default: f64) -> Result<f64> {
    match t.get(key) {
        None => Ok(default),
        Some(toml::Value::Float(x)) => Ok(*x),
        Some(toml::Value::Integer(i)) => Ok(*i as f64),
        Some(v) => Err(Error::Parse(format!("parameter '{key}' must be a number, got {v}"))),
    }
}

pub(crate) fn param_usize(t: &toml::Table, key: &str, default: usize) -> Result<usize> {
    match t.get(key) {
        None => Ok(default),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
        Some(v) => Err(Error::Parse(format!("parameter '{key}' must be a nonnegative integer, got {v}"))),
    }
}

pub(crate) fn param_f64s(t: &toml::Table, key: &str) -> Result<Option<Vec<f64>>> {
    let Some(v) = t.get(key) else { return Ok(None) };
    let mut out = Vec::new();
    flatten_numbers(v, key, &mut out)?;
    Ok(Some(out))
}

fn flatten_numbers(v: &toml::Value, key: &str, out: &mut Vec<f64>) -> Result<()> {
    match v {
        toml::Value::Float(x) => out.push(*x),
        toml::Value::Integer(i) => out.push(*i as f64),
        toml::Value::Array(a) => {
            for x in a {
                flatten_numbers(x, key, out)?;
            }
        }
        other => return Err(Error::Parse(format!("parameter '{key}' must hold numbers, got {other}"))),
    }
    Ok(())
}

pub(crate) fn param_str<'a>(t: &'a toml::Table, key: &str, default: &'a str) -> Result<&'a str> {
    match t.get(key) {
        None => Ok(default),
        Some(toml::Value::String(s)) => Ok(s),
        Some(v) => Err(Error::Parse(format!("parameter '{key}' must be a string, got {v}"))),
    }
}

fn seed_of(m: &MetricSection, run_seed: Option<u64>) -> Result<u64> {
    match m.params.get("seed") {
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(v) => Err(Error::Parse(format!("seed must be a nonnegative integer, got {v}"))),
        None => run_seed.ok_or_else(|| Error::Parse(format!("builder '{}' needs a seed", m.builder))),
    }
}

/// Builds the configured field at one resolution. `run_seed` stands in for
/// a missing `seed` parameter.
pub fn build_field(d: &DomainSection, m: &MetricSection, resolution: usize, run_seed: Option<u64>) -> Result<MetricField> {
    let grid = Arc::new(d.descriptor(resolution).build()?);
    let p = &m.params;
    let n = grid.dim();
    match m.builder.as_str() {
        "flat" => Ok(flat_metric(grid)),
        "constant" => {
            let g = param_f64s(p, "g")?.ok_or_else(|| Error::Parse("constant builder needs g".into()))?;
            constant_metric(grid, &g)
        }
        "hexagonal" => {
            need_dim(&grid, 2)?;
            let s = param_f64(p, "scale", 1.0)?;
            let s2 = s * s;
            constant_metric(grid, &[s2, 0.5 * s2, 0.5 * s2, s2])
        }
        "random" => {
            let lo = param_f64(p, "lo", 0.25)?;
            let hi = param_f64(p, "hi", 4.0)?;
            random_spd_metric(grid, seed_of(m, run_seed)?, lo, hi)
        }
        "round" => round_sphere_metric(grid, param_f64(p, "radius", 1.0)?),
        "bumps" => {
            need_dim(&grid, 2)?;
            let count = param_usize(p, "count", 4)?;
            let amplitude = param_f64(p, "amplitude", 0.5)?;
            let kappa = param_f64(p, "sharpness", 4.0)?;
            let bumps = sample_bumps(seed_of(m, run_seed)?, count, amplitude);
            conformal_from_fn(grid, |x| bump_sum(&bumps, kappa, x))
        }
        "disk" => {
            need_dim(&grid, 2)?;
            let (c, r) = disk_of(p)?;
            let inside = param_f64(p, "inside", 4.0)?;
            let g1 = constant_metric(grid.clone(), &[inside, 0.0, 0.0, inside])?;
            let g2 = flat_metric(grid.clone());
            piecewise_metric(|v| in_disk(&grid, v, c, r), &g1, &g2)
        }
        "physical-flat" => {
            let l = grid.topology().mask.map(|mk| mk.chart_scale()).unwrap_or(1.0);
            let g: Vec<f64> = crate::linalg::identity(n).iter().map(|x| x * l * l).collect();
            constant_metric(grid, &g)
        }
        "product" => {
            need_dim(&grid, 2)?;
            let c = param_f64(p, "circumference", 1.0)?;
            let h = param_f64(p, "height", 1.0)?;
            constant_metric(grid, &[c * c, 0.0, 0.0, h * h])
        }
        other => Err(Error::Parse(format!("unknown metric builder '{other}'"))),
    }
}

fn need_dim(grid: &Grid, n: usize) -> Result<()> {
    if grid.dim() != n {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if grid.kind().is_spherical() {
        return Err(Error::WrongTopology { expected: "a box-like chart", found: grid.kind().to_string() });
    }
    Ok(())
}

/// (centre, radius) of the disk builder's region.
pub(crate) fn disk_of(p: &toml::Table) -> Result<([f64; 2], f64)> {
    let c = param_f64s(p, "center")?.unwrap_or_else(|| vec![0.5, 0.5]);
    if c.len() != 2 {
        return Err(Error::Parse("disk center needs two coordinates".into()));
    }
    Ok(([c[0], c[1]], param_f64(p, "radius", 0.3)?))
}

pub(crate) fn in_disk(grid: &Grid, v: usize, c: [f64; 2], r: f64) -> bool {
    let x = grid.coords(v);
    (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= r * r + 1e-12
}

/// (cx, cy, a) per bump; amplitudes uniform in [−amplitude, amplitude].
fn sample_bumps(seed: u64, count: usize, amplitude: f64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen::<f64>(), rng.gen::<f64>(), amplitude * rng.gen_range(-1.0..=1.0))).collect()
}

/// Periodic bumps a·exp(κ(cos 2π(x−cx) + cos 2π(y−cy) − 2)).
fn bump_sum(bumps: &[(f64, f64, f64)], kappa: f64, x: &[f64]) -> f64 {
    bumps
        .iter()
        .map(|&(cx, cy, a)| a * (kappa * ((2.0 * PI * (x[0] - cx)).cos() + (2.0 * PI * (x[1] - cy)).cos() - 2.0)).exp())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section(kind: &str) -> DomainSection {
        DomainSection { kind: kind.into(), stencil_order: 3, ..Default::default() }
    }

    fn metric(builder: &str, params: &str) -> MetricSection {
        MetricSection { builder: builder.into(), params: toml::from_str(params).unwrap() }
    }

    #[test]
    fn bumps_deterministic_and_periodic() {
        let m = metric("bumps", "seed = 5\ncount = 3");
        let a = build_field(&section("torus2"), &m, 16, None).unwrap();
        let b = build_field(&section("torus2"), &m, 16, None).unwrap();
        assert_eq!(a.hash_hex(), b.hash_hex());
        let bumps = sample_bumps(5, 3, 0.5);
        let u0 = bump_sum(&bumps, 4.0, &[0.0, 0.3]);
        let u1 = bump_sum(&bumps, 4.0, &[1.0, 0.3]);
        assert!((u0 - u1).abs() < 1e-12);
        let c = build_field(&section("torus2"), &metric("bumps", "seed = 6\ncount = 3"), 16, None).unwrap();
        assert_ne!(a.hash_hex(), c.hash_hex());
    }

    #[test]
    fn builder_errors() {
        assert!(build_field(&section("torus2"), &metric("random", ""), 8, None).is_err());
        assert!(build_field(&section("torus2"), &metric("random", ""), 8, Some(1)).is_ok());
        assert!(build_field(&section("square"), &metric("constant", "g = [[1.0, 2.0], [2.0, 1.0]]"), 8, None).is_err());
        assert!(build_field(&section("square"), &metric("constant", "g = [[2, 0], [0, 1]]"), 8, None).is_ok());
        assert!(build_field(&section("square"), &metric("hexagonal", "scale = \"big\""), 8, None).is_err());
    }

    #[test]
    fn disk_inflates_inside_only() {
        let f = build_field(&section("square"), &metric("disk", "radius = 0.25\ninside = 9.0"), 9, None).unwrap();
        let g = f.grid();
        let centre = g.vertex_at(&[4, 4]).unwrap();
        let corner = g.vertex_at(&[0, 0]).unwrap();
        assert_eq!(f.tensor(centre), &[9.0, 0.0, 0.0, 9.0]);
        assert_eq!(f.tensor(corner), &[1.0, 0.0, 0.0, 1.0]);
    }
}
