//! Experiment configuration: parsing, validation, and construction of the
//! contact map and search options an experiment describes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::census::CensusOpts;
use crate::flow::FlowOpts;
use crate::map::{make_family, ContactMap, FamilyParams};
use crate::newton::NewtonOpts;
use crate::translated::FindOpts;
use crate::{Error, Result};

/// Which manifold the experiment lives on. The circle-fibered case keeps
/// real z lifts internally; it only changes the geometric distance in z and
/// the seed sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    #[serde(rename = "r2n1")]
    Euclidean,
    #[serde(rename = "r2n-s1")]
    CircleFibered,
}

impl Manifold {
    pub fn periodic_z(self) -> bool {
        matches!(self, Manifold::CircleFibered)
    }
}

/// Seed-grid resolution: a single number applied to every axis, or explicit
/// per-axis counts (planar x block, planar y block, z axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform(usize),
    Axes([usize; 3]),
}

impl GridSpec {
    pub fn resolve(self) -> [usize; 3] {
        match self {
            GridSpec::Uniform(r) => [r, r, r],
            GridSpec::Axes(v) => v,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform(24)
    }
}

/// Optional artifact destinations; when omitted the CLI derives them from
/// the config path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_n() -> usize {
    1
}

fn default_k_max() -> usize {
    2
}

fn default_z_window() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_newton_tol() -> f64 {
    1e-9
}

fn default_geom_tol() -> f64 {
    0.05
}

fn default_steps_per_unit() -> usize {
    400
}

fn default_true() -> bool {
    true
}

/// A complete census experiment: the family, the manifold, and every
/// numerical knob. Unknown keys are rejected so typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: String,
    pub params: FamilyParams,
    pub manifold: Manifold,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub grid: GridSpec,
    /// Seed z range; on the circle the window is sampled half-open.
    #[serde(default = "default_z_window")]
    pub z_window: [f64; 2],
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_geom_tol")]
    pub geom_tol: f64,
    #[serde(default = "default_steps_per_unit")]
    pub steps_per_unit: usize,
    /// Seed for any randomized sampling (verification suites); the census
    /// search itself is grid-deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Extend degenerate clusters by continuation along their null
    /// directions so circles of solutions are reported whole.
    #[serde(default = "default_true")]
    pub trace_continua: bool,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputPaths,
}

fn is_default_output(o: &OutputPaths) -> bool {
    o.json.is_none() && o.csv.is_none()
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                origin,
                serde_field_hint(&e),
                format!("{e} (line {}, column {})", e.line(), e.column()),
            )
        })?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self, origin: &str) -> Result<()> {
        let fail = |field: &str, reason: String| Err(Error::config(origin, field, reason));
        if self.n == 0 {
            return fail("n", "dimension n must be at least 1".into());
        }
        if self.k_max == 0 {
            return fail("k_max", "the census needs at least the first iterate".into());
        }
        let grid = self.grid.resolve();
        if grid.iter().any(|&r| r == 0) {
            return fail("grid", format!("grid resolutions must be positive, got {grid:?}"));
        }
        if !(self.newton_tol > 0.0) {
            return fail("newton_tol", format!("must be positive, got {}", self.newton_tol));
        }
        if !(self.geom_tol > 0.0) {
            return fail("geom_tol", format!("must be positive, got {}", self.geom_tol));
        }
        if self.steps_per_unit == 0 {
            return fail("steps_per_unit", "integrator needs at least one step per unit time".into());
        }
        if !self.z_window.iter().all(|v| v.is_finite()) || self.z_window[0] > self.z_window[1] {
            return fail(
                "z_window",
                format!("expected finite [lo, hi] with lo <= hi, got {:?}", self.z_window),
            );
        }
        // Building the map validates the family name, the parameters, and
        // the manifold/periodicity consistency in one place.
        self.build_map_impl(origin)?;
        Ok(())
    }

    fn build_map_impl(&self, origin: &str) -> Result<ContactMap> {
        let map = make_family(
            &self.family,
            &self.params,
            self.n,
            self.manifold.periodic_z(),
            FlowOpts::with_steps(self.steps_per_unit),
        )
        .map_err(|e| match e {
            Error::InvalidFamily { family, reason } => {
                Error::config(origin, "family", format!("`{family}`: {reason}"))
            }
            other => other,
        })?;
        if self.manifold.periodic_z() && !map.z_periodic() {
            return Err(Error::config(
                origin,
                "manifold",
                format!(
                    "family `{}` is not 1-periodic in z, so it does not descend to the circle-fibered manifold",
                    self.family
                ),
            ));
        }
        Ok(map)
    }

    pub fn build_map(&self) -> Result<ContactMap> {
        self.build_map_impl("<config>")
    }

    pub fn find_opts(&self) -> FindOpts {
        FindOpts {
            newton: NewtonOpts::with_tol(self.newton_tol),
            geom_tol: self.geom_tol,
            trace_continua: self.trace_continua,
            ..FindOpts::default()
        }
    }

    pub fn census_opts(&self) -> CensusOpts {
        CensusOpts {
            k_max: self.k_max,
            grid: self.grid.resolve(),
            z_window: (self.z_window[0], self.z_window[1]),
            find: self.find_opts(),
            ..CensusOpts::default()
        }
    }

    /// Canonical serialization used for the report's `config_echo`; field
    /// order is fixed by the struct, so equal configs render identically.
    pub fn canonical_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialization cannot fail")
    }
}

/// Best-effort extraction of the offending field from a serde message like
/// "unknown field `gyrd`" or "missing field `family`".
fn serde_field_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `", "invalid type", "invalid value"] {
        if let Some(idx) = msg.find(marker) {
            if let Some(start) = msg[idx..].find('`') {
                let rest = &msg[idx + start + 1..];
                if let Some(end) = rest.find('`') {
                    return rest[..end].to_string();
                }
            }
            return "<document>".into();
        }
    }
    "<document>".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "family": "radial_twist",
            "params": { "c": 3.141592653589793, "power": 2 },
            "manifold": "r2n1",
            "k_max": 2,
            "grid": [40, 40, 40]
        }"#
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(minimal(), "<test>").unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.grid.resolve(), [40, 40, 40]);
        assert_eq!(cfg.z_window, [0.0, 1.0]);
        assert_eq!(cfg.newton_tol, 1e-9);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.trace_continua);
        assert_eq!(cfg.steps_per_unit, 400);
        let opts = cfg.census_opts();
        assert_eq!(opts.k_max, 2);
        assert_eq!(opts.grid, [40, 40, 40]);
    }

    #[test]
    fn uniform_grid_shorthand() {
        let text = minimal().replace("[40, 40, 40]", "12");
        let cfg = ExperimentConfig::from_json(&text, "<test>").unwrap();
        assert_eq!(cfg.grid.resolve(), [12, 12, 12]);
    }

    #[test]
    fn unknown_field_is_rejected_with_its_name() {
        let text = minimal().replace("\"k_max\": 2", "\"k_max\": 2, \"gyrd\": 7");
        let err = ExperimentConfig::from_json(&text, "<test>").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gyrd"), "{msg}");
        assert!(msg.contains("<test>"), "{msg}");
    }

    #[test]
    fn zero_grid_axis_is_rejected() {
        let text = minimal().replace("[40, 40, 40]", "[40, 0, 1]");
        let err = ExperimentConfig::from_json(&text, "<test>").unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
    }

    #[test]
    fn circle_manifold_requires_z_periodicity() {
        // The radial twist is z-independent, hence trivially periodic; a
        // non-periodic z dependence does not exist in the catalog, so the
        // consistency check is exercised through the family validator
        // instead: an unknown family must surface as a config error.
        let text = minimal().replace("radial_twist", "square_twist");
        let err = ExperimentConfig::from_json(&text, "<test>").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "family"), "{err}");
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ExperimentConfig::from_json(minimal(), "<test>").unwrap();
        let text = serde_json::to_string_pretty(&cfg.canonical_value()).unwrap();
        let back = ExperimentConfig::from_json(&text, "<round-trip>").unwrap();
        assert_eq!(cfg, back);
        let again = serde_json::to_string_pretty(&back.canonical_value()).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn s1_experiment_builds_periodic_map() {
        let text = r#"{
            "family": "z_perturbed_twist",
            "params": { "c": 1.0, "eps": 0.3 },
            "manifold": "r2n-s1",
            "k_max": 3
        }"#;
        let cfg = ExperimentConfig::from_json(text, "<test>").unwrap();
        let map = cfg.build_map().unwrap();
        assert!(map.periodic_z());
        assert!(map.z_periodic());
    }
}
