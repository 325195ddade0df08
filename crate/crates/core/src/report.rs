//! Report rendering: the census as a JSON document and a CSV action table.
//!
//! Rendering is deterministic byte for byte: field order is fixed by the
//! struct declarations, map keys are ordered, and floats print through the
//! shortest round-trip form, so identical runs produce identical artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::census::{Census, CensusFlags, KCensus, PeriodicPoint};
use crate::{Error, Result};

/// The full census report. Top-level JSON keys, in order: `config_echo`,
/// `per_k`, `distinct_clusters`, `periodic_points`, `flags`, `errors`.
#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub config_echo: Value,
    pub per_k: Vec<KCensus>,
    pub distinct_clusters: usize,
    pub periodic_points: Vec<PeriodicPoint>,
    pub flags: CensusFlags,
    pub errors: Vec<String>,
}

impl CensusReport {
    pub fn new(config_echo: Value, census: &Census) -> Self {
        CensusReport {
            config_echo,
            per_k: census.per_k.clone(),
            distinct_clusters: census.distinct_clusters,
            periodic_points: census.periodic_points.clone(),
            flags: census.flags.clone(),
            errors: census.errors.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }
}

#[derive(Serialize)]
struct CsvRow {
    k: usize,
    action: f64,
    orbit_id: usize,
    nondegenerate: bool,
    residual_norm: f64,
    continuum_flag: bool,
}

/// The action table: one row per interior cluster, iterates ascending,
/// canonical cluster order within an iterate.
pub fn census_csv(census: &Census) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for kc in &census.per_k {
        for p in &kc.points {
            writer
                .serialize(CsvRow {
                    k: p.k,
                    action: p.action,
                    orbit_id: p.orbit_id,
                    nondegenerate: p.nondegenerate,
                    residual_norm: p.residual_norm,
                    continuum_flag: p.continuum,
                })
                .expect("csv row serialization cannot fail");
        }
    }
    let bytes = writer.into_inner().expect("csv buffer flush cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn write_artifacts(
    report: &CensusReport,
    census: &Census,
    json_path: &Path,
    csv_path: &Path,
) -> Result<()> {
    write_text(json_path, &report.to_json())?;
    write_text(csv_path, &census_csv(census))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{run_census, CensusOpts};
    use crate::flow::FlowOpts;
    use crate::map::{make_family, FamilyParams};
    use crate::translated::FindOpts;
    use std::f64::consts::PI;

    fn tiny_census() -> Census {
        let m = make_family(
            "radial_twist",
            &FamilyParams::new(PI).with_power(2),
            1,
            false,
            FlowOpts::with_steps(400),
        )
        .unwrap();
        run_census(
            &m,
            &CensusOpts {
                k_max: 1,
                grid: [16, 16, 1],
                z_window: (0.0, 0.0),
                find: FindOpts {
                    geom_tol: 0.12,
                    ..FindOpts::default()
                },
                ..CensusOpts::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn json_has_exactly_the_contract_keys_in_order() {
        let census = tiny_census();
        let report = CensusReport::new(serde_json::json!({"family": "radial_twist"}), &census);
        let text = report.to_json();
        let value: Value = serde_json::from_str(&text).unwrap();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec![
                "config_echo",
                "distinct_clusters",
                "errors",
                "flags",
                "per_k",
                "periodic_points",
            ]
        );
        // Order in the rendered document follows the contract: top-level
        // keys sit at two-space indentation.
        let offsets: Vec<usize> = [
            "\n  \"config_echo\"",
            "\n  \"per_k\"",
            "\n  \"distinct_clusters\"",
            "\n  \"periodic_points\"",
            "\n  \"flags\"",
            "\n  \"errors\"",
        ]
        .iter()
        .map(|needle| text.find(needle).unwrap_or_else(|| panic!("missing {needle:?}")))
        .collect();
        assert!(offsets.windows(2).all(|w| w[0] < w[1]), "{offsets:?}");
    }

    #[test]
    fn csv_header_matches_the_contract() {
        let census = tiny_census();
        let text = census_csv(&census);
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "k,action,orbit_id,nondegenerate,residual_norm,continuum_flag"
        );
        // One row per interior cluster.
        let rows = text.lines().count() - 1;
        let expected: usize = census.per_k.iter().map(|kc| kc.points.len()).sum();
        assert_eq!(rows, expected);
        assert!(rows >= 2, "expected at least axis and circle rows");
    }

    #[test]
    fn rendering_is_reproducible() {
        let census = tiny_census();
        let echo = serde_json::json!({"seed": 0});
        let a = CensusReport::new(echo.clone(), &census).to_json();
        let b = CensusReport::new(echo, &census).to_json();
        assert_eq!(a, b);
        assert_eq!(census_csv(&census), census_csv(&census));
    }

    #[test]
    fn artifacts_land_on_disk() {
        let census = tiny_census();
        let report = CensusReport::new(serde_json::json!({}), &census);
        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("out/report.json");
        let csv_path = dir.path().join("out/actions.csv");
        write_artifacts(&report, &census, &json_path, &csv_path).unwrap();
        let json_text = fs::read_to_string(&json_path).unwrap();
        let csv_text = fs::read_to_string(&csv_path).unwrap();
        assert_eq!(json_text, report.to_json());
        assert_eq!(csv_text, census_csv(&census));
    }
}
