//! Command-line front end: census runs, invariant suites, and the
//! jet-graph cross-check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use contact_lab::census::run_census;
use contact_lab::config::ExperimentConfig;
use contact_lab::jet::zero_wall_cross_check;
use contact_lab::report::{write_artifacts, CensusReport};
use contact_lab::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "contact-lab",
    version,
    about = "Census of translated points of contact Hamiltonian flows, with invariant suites and a jet-graph cross-check"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iterated translated-point census described by a config file
    /// and write the JSON report and CSV action table.
    Census {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// JSON report destination (default: config's `output.json`, else
        /// `<config stem>.report.json` next to the config).
        #[arg(long)]
        json: Option<PathBuf>,
        /// CSV action-table destination (default: config's `output.csv`,
        /// else `<config stem>.actions.csv` next to the config).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the JSON report to stdout instead of only writing files.
        #[arg(long)]
        print: bool,
    },
    /// Run an invariant suite: core | maps | translated | graph | all.
    Verify {
        #[arg(long)]
        suite: String,
        /// Seed for randomized sampling inside the suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve the translated-point problem through the residual channel and
    /// the jet-graph wall channel independently and compare the results.
    GraphCheck {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Which iterate to cross-check.
        #[arg(long)]
        k: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Census {
            config,
            json,
            csv,
            print,
        } => run_census_command(&config, json, csv, print),
        Command::Verify { suite, seed } => run_verify_command(&suite, seed),
        Command::GraphCheck { config, k } => run_graph_check_command(&config, k),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn derived_path(config_path: &Path, suffix: &str) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "census".into());
    config_path.with_file_name(format!("{stem}.{suffix}"))
}

fn run_census_command(
    config_path: &Path,
    json_override: Option<PathBuf>,
    csv_override: Option<PathBuf>,
    print: bool,
) -> contact_lab::Result<ExitCode> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let map = cfg.build_map()?;
    let census = run_census(&map, &cfg.census_opts())?;
    let report = CensusReport::new(cfg.canonical_value(), &census);

    let json_path = json_override
        .or_else(|| cfg.output.json.clone())
        .unwrap_or_else(|| derived_path(config_path, "report.json"));
    let csv_path = csv_override
        .or_else(|| cfg.output.csv.clone())
        .unwrap_or_else(|| derived_path(config_path, "actions.csv"));
    write_artifacts(&report, &census, &json_path, &csv_path)?;

    if print {
        print!("{}", report.to_json());
    }
    for kc in &census.per_k {
        let max_action = kc
            .points
            .iter()
            .map(|p| p.action)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "k = {}: {} interior cluster(s), {} boundary, max action {}",
            kc.k,
            kc.points.len(),
            kc.boundary_clusters,
            if kc.points.is_empty() {
                "n/a".to_string()
            } else {
                format!("{max_action:.9}")
            }
        );
    }
    println!(
        "distinct clusters: {}; periodic points: {}; monotone max action: {}; identity-like: {}; integer coincidences: {}",
        census.distinct_clusters,
        census.periodic_points.len(),
        census.flags.monotone_max_action,
        census.flags.identity_like,
        census.flags.integer_action_coincidences
    );
    for err in &census.errors {
        eprintln!("census: {err}");
    }
    println!("report: {}", json_path.display());
    println!("actions: {}", csv_path.display());
    Ok(if census.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_verify_command(suite: &str, seed: u64) -> contact_lab::Result<ExitCode> {
    let reports = run_suite(suite, seed)?;
    let mut all_pass = true;
    for report in &reports {
        for check in &report.checks {
            println!(
                "{:<12} {:<34} max {:>12.3e}  bound {:>12.3e}  samples {:>6}  {}",
                report.suite,
                check.name,
                check.max_error,
                check.bound,
                check.samples,
                if check.pass { "PASS" } else { "FAIL" }
            );
        }
        all_pass &= report.pass;
    }
    println!("verify {suite}: {}", if all_pass { "PASS" } else { "FAIL" });
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_graph_check_command(config_path: &Path, k: usize) -> contact_lab::Result<ExitCode> {
    let cfg = ExperimentConfig::from_path(config_path)?;
    let map = cfg.build_map()?;
    let report = zero_wall_cross_check(
        &map,
        k,
        cfg.grid.resolve(),
        (cfg.z_window[0], cfg.z_window[1]),
        &cfg.find_opts(),
    )?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
    );
    println!(
        "graph-check k = {k}: {} residual cluster(s), {} wall point(s), max |p| {:.3e}, max |theta - action| {:.3e}: {}",
        report.residual_clusters,
        report.graph_points,
        report.max_p_norm,
        report.max_theta_dev,
        if report.pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
