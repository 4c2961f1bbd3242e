//! Command-line front end for Volterra kernel identification: reproduce the
//! reference experiment tables, run custom identification jobs, export the
//! assembled systems.

mod config;
mod output;
mod tables;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use volterra_id_core::assembly::{assemble, Coefficient, NodeGrid};
use volterra_id_core::solver::{
    identify_collocation, identify_lsm, stability_experiment, Method, StabilityOptions,
};
use volterra_id_core::Error as CoreError;

use config::ExperimentConfig;
use output::{ensure_dir, kernel_k1_csv, kernel_k2_csv, residual_curve_csv, write_atomic};
use tables::{Model1Variant, TableId, TableRun};

/// Exit codes: 0 success, 2 configuration/validation, 3 numerical failure,
/// 4 filesystem I/O.
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Self { code, error }
    }

    pub fn config(error: anyhow::Error) -> Self {
        Self::new(2, error)
    }

    pub fn numerical(error: anyhow::Error) -> Self {
        Self::new(3, error)
    }

    pub fn io(error: anyhow::Error) -> Self {
        Self::new(4, error)
    }

    pub fn from_core(error: CoreError) -> Self {
        let code = match &error {
            CoreError::Config(_) | CoreError::Domain { .. } | CoreError::SignalData(_) => 2,
            CoreError::Integrand(_) | CoreError::Assembly { .. } | CoreError::Numerical(_) => 3,
        };
        Self::new(code, anyhow::Error::new(error))
    }
}

#[derive(Parser)]
#[command(
    name = "volterra-id",
    version,
    about = "Identify first- and second-order Volterra kernels from an input/output signal pair"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-run a reference experiment table; writes reference and computed
    /// values side by side as CSV.
    Reproduce {
        /// Table to reproduce (T1-T6).
        #[arg(long)]
        table: TableId,
        /// Output formula for the periodic model (tables T1/T2).
        #[arg(long, value_enum, default_value_t = Model1Variant::Corrected)]
        model1_variant: Model1Variant,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// RNG seed for the stability tables (T4/T6); VOLTERRA_ID_SEED
        /// overrides it.
        #[arg(long)]
        seed: Option<u64>,
        /// Trial count for the stability tables.
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Run one identification job described by a JSON config file.
    Identify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the linear system for a config and export matrix plus
    /// right-hand side as CSV.
    ExportSystem {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Reproduce {
            table,
            model1_variant,
            out,
            seed,
            trials,
        } => cmd_reproduce(table, model1_variant, out, seed, trials),
        Command::Identify { config, out } => cmd_identify(config, out),
        Command::ExportSystem { config, out } => cmd_export_system(config, out),
    }
}

fn cmd_reproduce(
    table: TableId,
    variant: Model1Variant,
    out: PathBuf,
    seed: Option<u64>,
    trials: usize,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::config(anyhow::anyhow!(
            "trials: must be at least 1"
        )));
    }
    ensure_dir(&out)?;
    let run = TableRun {
        table,
        variant,
        seed: config::resolve_seed(seed)?,
        trials,
    };
    let path = run.execute(&out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_identify(config_path: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let experiment = ExperimentConfig::load(&config_path)?.validate()?;
    ensure_dir(&out)?;
    let pair = experiment.build_pair()?;

    let report = match experiment.method {
        Method::Collocation => identify_collocation(
            &pair,
            experiment.sizes,
            &experiment.quadrature,
            &experiment.options,
        ),
        Method::LeastSquares => identify_lsm(
            &pair,
            experiment.sizes,
            experiment.lsm_nodes.expect("validated"),
            &experiment.quadrature,
            &experiment.options,
        ),
    }
    .map_err(CliError::from_core)?;

    let mut report_json = serde_json::json!({
        "label": pair.label(),
        "model": experiment.config.model.label(),
        "seed": experiment.seed,
        "report": report.to_json_value(),
    });

    if let Some(noise) = &experiment.noise {
        let outcome = stability_experiment(
            &pair,
            experiment.method,
            experiment.sizes,
            experiment.lsm_nodes,
            noise,
            &experiment.quadrature,
            &StabilityOptions {
                identify: experiment.options.clone(),
                ..Default::default()
            },
        )
        .map_err(CliError::from_core)?;
        report_json["stability"] = serde_json::json!({
            "delta": noise.delta,
            "trials": noise.trials,
            "seed": noise.seed,
            "mean_residual": outcome.mean_residual,
            "trial_residuals": outcome.trial_residuals,
        });
        let mut stability_csv = String::new();
        let _ = writeln!(stability_csv, "# config_digest: {}", report.config_digest);
        let _ = writeln!(stability_csv, "trial,residual_max");
        for (i, r) in outcome.trial_residuals.iter().enumerate() {
            let _ = writeln!(stability_csv, "{i},{r:e}");
        }
        let _ = writeln!(stability_csv, "mean,{:e}", outcome.mean_residual);
        write_atomic(&out.join("stability.csv"), &stability_csv)?;
    }

    let pretty = serde_json::to_string_pretty(&report_json)
        .map_err(|e| CliError::numerical(anyhow::anyhow!("cannot serialize report: {e}")))?;
    write_atomic(&out.join("report.json"), &(pretty + "\n"))?;
    write_atomic(&out.join("kernel_k1.csv"), &kernel_k1_csv(&report, 200)?)?;
    write_atomic(&out.join("kernel_k2.csv"), &kernel_k2_csv(&report, 100)?)?;
    write_atomic(
        &out.join("residual_curve.csv"),
        &residual_curve_csv(
            &report,
            &pair,
            experiment.options.eval_points,
            &experiment.quadrature,
        )?,
    )?;

    println!(
        "{} {}: residual_max={:e} node_residual_max={:e} rank={} -> {}",
        pair.label(),
        report.method.as_str(),
        report.residual_max,
        report.node_residual_max,
        report.numerical_rank,
        out.display()
    );
    Ok(())
}

fn cmd_export_system(config_path: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let experiment = ExperimentConfig::load(&config_path)?.validate()?;
    ensure_dir(&out)?;
    let pair = experiment.build_pair()?;

    let node_count = experiment
        .lsm_nodes
        .unwrap_or_else(|| experiment.sizes.column_count());
    let grid = NodeGrid::uniform(experiment.options.grid_scheme, node_count, pair.horizon())
        .map_err(CliError::from_core)?;
    let system = assemble(experiment.sizes, &grid, &pair, &experiment.quadrature)
        .map_err(CliError::from_core)?;

    let digest = {
        use sha2::{Digest, Sha256};
        let canonical = format!(
            "export;model={};method={};m={};m1={};m2={};scheme={:?};nodes={};horizon={:e};quad={},{},{},{:e},{}",
            experiment.config.model.label(),
            experiment.method.as_str(),
            experiment.sizes.first,
            experiment.sizes.second_rows,
            experiment.sizes.second_cols,
            experiment.options.grid_scheme,
            node_count,
            pair.horizon(),
            experiment.quadrature.points_per_panel,
            experiment.quadrature.min_panels_per_unit,
            experiment.quadrature.refine_factor,
            experiment.quadrature.abs_tol,
            experiment.quadrature.max_refinements,
        );
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    };

    let mut csv = String::new();
    let _ = writeln!(csv, "# config_digest: {digest}");
    let _ = writeln!(csv, "# model: {}", experiment.config.model.label());
    let _ = writeln!(csv, "# method: {}", experiment.method.as_str());
    let _ = writeln!(
        csv,
        "# sizes: m={} m1={} m2={}",
        experiment.sizes.first, experiment.sizes.second_rows, experiment.sizes.second_cols
    );
    let mut header = String::from("t");
    for column in &system.column_map {
        match column {
            Coefficient::FirstOrder(i) => {
                let _ = write!(header, ",A{i}");
            }
            Coefficient::SecondOrder(i, j) => {
                let _ = write!(header, ",C_{i}_{j}");
            }
        }
    }
    header.push_str(",rhs");
    let _ = writeln!(csv, "{header}");
    for (k, &t) in system.grid.nodes().iter().enumerate() {
        let _ = write!(csv, "{t:e}");
        for value in system.matrix.row(k) {
            let _ = write!(csv, ",{value:e}");
        }
        let _ = writeln!(csv, ",{:e}", system.rhs[k]);
    }

    let path = out.join("system.csv");
    write_atomic(&path, &csv)?;
    println!(
        "assembled {}x{} system -> {}",
        system.matrix.rows(),
        system.matrix.cols(),
        path.display()
    );
    Ok(())
}
