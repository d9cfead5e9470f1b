//! Canonical experiments. Names are stable; configs are plain TOML so they
//! can be dumped, edited and run again.

use super::ExperimentConfig;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct GalleryItem {
    pub name: &'static str,
    pub description: &'static str,
    /// One or more configs, run in order.
    pub configs: Vec<String>,
}

impl GalleryItem {
    pub fn parsed(&self) -> Result<Vec<ExperimentConfig>> {
        self.configs.iter().map(|c| ExperimentConfig::from_toml(c)).collect()
    }
}

fn item(name: &'static str, description: &'static str, configs: &[&str]) -> GalleryItem {
    GalleryItem { name, description, configs: configs.iter().map(|c| c.trim_start().to_string()).collect() }
}

pub fn gallery() -> Vec<GalleryItem> {
    vec![
        item(
            "besicovitch-flat",
            "Face-distance certificate on the flat unit square: d = (1, 1), vol = 1, slack 0.",
            &[r#"
id = "besicovitch-flat"
[domain]
kind = "square"
[metric]
builder = "flat"
[operation]
name = "besicovitch"
expect = "flat"
[run]
resolutions = [16, 32, 64]
"#],
        ),
        item(
            "besicovitch-random",
            "Volume against the face-distance product for random SPD metrics with eigenvalues in [1/4, 4].",
            &[r#"
id = "besicovitch-random"
[domain]
kind = "square"
[metric]
builder = "random"
lo = 0.25
hi = 4.0
[operation]
name = "besicovitch-sweep"
count = 100
[run]
resolutions = [96]
seed = 1
"#],
        ),
        item(
            "hexagon-thin",
            "Thin flat tee: opposite sides at distance at least 1 with area below 0.2.",
            &[r#"
id = "hexagon-thin"
[domain]
kind = "hexagon"
mask = "tee"
arm = 1.0
width = 0.05
[metric]
builder = "physical-flat"
[operation]
name = "hexagon"
min_distance = 1.0
max_area = 0.2
[run]
resolutions = [206]
"#],
        ),
        item(
            "cylinder-equality",
            "Flat cylinder of circumference 1 and height 1: every level circle of the height has length 1.",
            &[r#"
id = "cylinder-equality"
[domain]
kind = "cylinder"
[metric]
builder = "product"
circumference = 1.0
height = 1.0
[operation]
name = "cylinder"
[run]
resolutions = [96]
"#],
        ),
        item(
            "loewner-hexagonal",
            "Systolic ratio of the flat hexagonal torus against sqrt(2)/3^(1/4).",
            &[r#"
id = "loewner-hexagonal"
[domain]
kind = "torus2"
[metric]
builder = "hexagonal"
[operation]
name = "systolic-ratio"
constant = "loewner"
[run]
resolutions = [32, 64, 128]
"#],
        ),
        item(
            "loewner-square",
            "Systole, area and ratio of the flat square torus (all equal to 1).",
            &[r#"
id = "loewner-square"
[domain]
kind = "torus2"
[metric]
builder = "flat"
[operation]
name = "systolic-ratio"
constant = "flat-square"
[run]
resolutions = [16, 32, 64]
"#],
        ),
        item(
            "loewner-bumps",
            "Twenty conformal bump metrics on the square torus stay below 2/sqrt(3) in sys^2/area.",
            &[r#"
id = "loewner-bumps"
[domain]
kind = "torus2"
[metric]
builder = "bumps"
count = 4
amplitude = 0.5
sharpness = 4.0
[operation]
name = "loewner-bumps"
count = 20
[run]
resolutions = [32]
seed = 11
"#],
        ),
        item(
            "pu-rp2",
            "Round projective plane of radius 1: systole pi, area 2 pi, ratio sqrt(pi/2).",
            &[r#"
id = "pu-rp2"
[domain]
kind = "rp2"
[metric]
builder = "round"
radius = 1.0
[operation]
name = "systolic-ratio"
constant = "pu"
[run]
resolutions = [32, 48, 64]
"#],
        ),
        item(
            "coarea-square",
            "Trapezoid coarea integral of the distance to a side of the flat square against its area.",
            &[r#"
id = "coarea-square"
[domain]
kind = "square"
[metric]
builder = "flat"
[operation]
name = "coarea"
face = "A"
[run]
resolutions = [64]
"#],
        ),
        item(
            "hausdorff-constants",
            "Volume to Hausdorff measure conversion factors for n = 1..4.",
            &[r#"
id = "hausdorff-constants"
[operation]
name = "hausdorff"
[run]
resolutions = [1]
"#],
        ),
        item(
            "width-square",
            "Width certificates on the flat unit square: valid at R = 0.55, none at R = 0.2.",
            &[r#"
id = "width-square"
[domain]
kind = "square"
[metric]
builder = "flat"
[operation]
name = "width"
r = [0.55, 0.2]
expect_valid = [true, false]
[run]
resolutions = [48]
"#],
        ),
        item(
            "width-volume-tori",
            "Width certificate at 2 sqrt(area) and pigeonhole bounds on separating cuts for flat tori.",
            &[
                r#"
id = "width-volume-flat-torus"
[domain]
kind = "torus2"
[metric]
builder = "flat"
[operation]
name = "width-volume"
[run]
resolutions = [32]
"#,
                r#"
id = "width-volume-hexagonal-torus"
[domain]
kind = "torus2"
[metric]
builder = "hexagonal"
[operation]
name = "width-volume"
[run]
resolutions = [32]
"#,
            ],
        ),
        item(
            "sys-crosschecks",
            "Systole against 4 n vol^(1/n) and against 6 R for every valid width certificate.",
            &[r#"
id = "sys-crosschecks"
[operation]
name = "sys-crosschecks"
[run]
resolutions = [32]
"#],
        ),
        item(
            "involution-sphere",
            "Round sphere with antipodal displacement 1: area at least 1/2, near 4/pi.",
            &[r#"
id = "involution-sphere"
[domain]
kind = "sphere2"
[metric]
builder = "round"
radius = 0.3183098861837907
[operation]
name = "involution"
[run]
resolutions = [32, 64]
"#],
        ),
        item(
            "gadograph-disk",
            "Disk with an inflated metric inside a flat square: vol(V, g) at least the Euclidean area.",
            &[r#"
id = "gadograph-disk"
[domain]
kind = "square"
[metric]
builder = "disk"
center = [0.5, 0.5]
radius = 0.3
inside = 4.0
[operation]
name = "gadograph"
[run]
resolutions = [33]
"#],
        ),
        item(
            "sphere-volume",
            "Area of the round unit sphere under refinement.",
            &[r#"
id = "sphere-volume"
[domain]
kind = "sphere2"
[metric]
builder = "round"
radius = 1.0
[operation]
name = "sphere-volume"
[run]
resolutions = [32, 64, 128, 256]
"#],
        ),
        item(
            "invariant-suites",
            "Partition of unity, nerve, slicing cover, triangle inequality and scaling checks on every gallery metric.",
            &[r#"
id = "invariant-suites"
[operation]
name = "invariants"
[run]
resolutions = [32]
seed = 5
"#],
        ),
    ]
}

pub fn find(name: &str) -> Option<GalleryItem> {
    gallery().into_iter().find(|g| g.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_snapshot() {
        let names: Vec<&str> = gallery().iter().map(|g| g.name).collect();
        assert_eq!(
            names,
            [
                "besicovitch-flat",
                "besicovitch-random",
                "hexagon-thin",
                "cylinder-equality",
                "loewner-hexagonal",
                "loewner-square",
                "loewner-bumps",
                "pu-rp2",
                "coarea-square",
                "hausdorff-constants",
                "width-square",
                "width-volume-tori",
                "sys-crosschecks",
                "involution-sphere",
                "gadograph-disk",
                "sphere-volume",
                "invariant-suites",
            ]
        );
    }

    #[test]
    fn configs_parse_and_round_trip() {
        for g in gallery() {
            for cfg in g.parsed().unwrap() {
                let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
                assert_eq!(again.to_toml(), cfg.to_toml(), "{}", g.name);
            }
        }
    }
}
