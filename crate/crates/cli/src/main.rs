//! Command line driver: runs the adaptive loop on a named benchmark problem
//! and writes run.csv, summary.json, and optional per-level VTK / matrix
//! files into the output directory. Rows are flushed as levels complete, so
//! a failed run still leaves everything it finished on disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, CommandFactory, Parser};
use serde_json::json;

use mwg::space::project_pi0;
use mwg::vtk::write_vtk;
use mwg::{by_name, fit_slope, run_adaptive, LevelContext, RunRecord, StopRule};

#[derive(Parser, Debug)]
#[command(
    name = "mwg",
    about = "Adaptive finite element runs for elliptic obstacle problems",
    group(ArgGroup::new("stop").required(true).args(["max_dof", "max_levels", "eta_below"]))
)]
struct Cli {
    /// Benchmark problem: example1-f0, example1-fm15, example2, example3
    #[arg(long)]
    problem: String,

    /// Bulk marking fraction, strictly between 0 and 1
    #[arg(long, default_value_t = 0.4, value_parser = parse_theta)]
    theta: f64,

    /// Stop once a level reaches at least this many degrees of freedom
    #[arg(long)]
    max_dof: Option<usize>,

    /// Run exactly this many levels
    #[arg(long)]
    max_levels: Option<usize>,

    /// Stop once the total estimator drops below this value
    #[arg(long, value_parser = parse_positive)]
    eta_below: Option<f64>,

    /// Refine every element instead of the marked set
    #[arg(long)]
    uniform: bool,

    /// Output directory for run.csv, summary.json and exports
    #[arg(long)]
    out: PathBuf,

    /// Write level_<k>.vtk with per-element solution, multiplier, indicator
    #[arg(long)]
    export_vtk: bool,

    /// Write level_<k>.mtx with the assembled matrix in Matrix Market form
    #[arg(long)]
    export_matrix: bool,

    /// Seed echoed into summary.json for downstream property tooling
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| "not a number".to_string())?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("theta must lie strictly between 0 and 1".to_string())
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| "not a number".to_string())?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("value must be positive".to_string())
    }
}

const CSV_HEADER: &str =
    "level,ndof,eta1,eta2,eta3,pospart,contact,eta_total,energy_error,eff_index,contact_count,pdas_iters,wall_s";

fn csv_row(r: &RunRecord) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.level,
        r.ndof,
        r.eta1,
        r.eta2,
        r.eta3,
        r.pospart,
        r.contact,
        r.eta_total,
        opt(r.energy_error),
        opt(r.eff_index),
        r.contact_count,
        r.pdas_iters,
        r.wall_s
    )
}

/// Least squares slope of log10(column) against log10(ndof) over the last
/// min(8, levels - 2) records; absent when fewer than two points qualify.
fn tail_slope(records: &[RunRecord], value: impl Fn(&RunRecord) -> Option<f64>) -> Option<f64> {
    let window = records.len().saturating_sub(2).min(8);
    if window < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = records[records.len() - window..]
        .iter()
        .filter_map(|r| {
            let v = value(r)?;
            (v > 0.0).then(|| ((r.ndof as f64).log10(), v.log10()))
        })
        .collect();
    (pts.len() >= 2).then(|| fit_slope(&pts))
}

fn record_json(r: &RunRecord) -> serde_json::Value {
    json!({
        "level": r.level,
        "ndof": r.ndof,
        "eta1": r.eta1,
        "eta2": r.eta2,
        "eta3": r.eta3,
        "pospart": r.pospart,
        "contact": r.contact,
        "eta_total": r.eta_total,
        "energy_error": r.energy_error,
        "eff_index": r.eff_index,
        "contact_count": r.contact_count,
        "pdas_iters": r.pdas_iters,
        "wall_s": r.wall_s,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let Some(problem) = by_name(&cli.problem) else {
        let mut cmd = Cli::command();
        eprintln!(
            "error: unknown problem '{}'; expected one of example1-f0, example1-fm15, example2, example3\n",
            cli.problem
        );
        let _ = cmd.print_help();
        return ExitCode::from(2);
    };
    let stop = if let Some(n) = cli.max_dof {
        StopRule::MaxDof(n)
    } else if let Some(n) = cli.max_levels {
        StopRule::MaxLevels(n)
    } else {
        StopRule::EtaBelow(cli.eta_below.expect("clap enforces one stop rule"))
    };

    if let Err(e) = fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory {}: {e}", cli.out.display());
        return ExitCode::from(3);
    }
    let csv_path = cli.out.join("run.csv");
    let mut csv = match File::create(&csv_path) {
        Ok(f) => BufWriter::new(f),
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", csv_path.display());
            return ExitCode::from(3);
        }
    };
    if let Err(e) = writeln!(csv, "{CSV_HEADER}") {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return ExitCode::from(3);
    }

    let mut io_error: Option<String> = None;
    let mut on_level = |ctx: &LevelContext<'_>| {
        let mut step = || -> std::io::Result<()> {
            writeln!(csv, "{}", csv_row(ctx.record))?;
            csv.flush()?;
            if cli.export_vtk {
                let path = cli.out.join(format!("level_{}.vtk", ctx.level));
                let mut out = BufWriter::new(File::create(path)?);
                let means = project_pi0(ctx.mesh, &ctx.solution.u_h);
                write_vtk(
                    &mut out,
                    ctx.mesh,
                    &[
                        ("solution_mean", &means.values),
                        ("lambda", &ctx.solution.lambda_h.values),
                        ("indicator_sq", &ctx.breakdown.local.values),
                    ],
                )?;
            }
            if cli.export_matrix {
                let path = cli.out.join(format!("level_{}.mtx", ctx.level));
                let mut out = BufWriter::new(File::create(path)?);
                ctx.sys.a.write_matrix_market(&mut out)?;
            }
            Ok(())
        };
        if let Err(e) = step() {
            io_error.get_or_insert(e.to_string());
        }
    };

    let outcome = run_adaptive(&problem, cli.theta, stop, cli.uniform, Some(&mut on_level));
    if let Some(e) = io_error {
        eprintln!("error: writing outputs failed: {e}");
        return ExitCode::from(3);
    }

    let (records, failure) = match &outcome {
        Ok(records) => (records.as_slice(), None),
        Err(err) => (err.records.as_slice(), Some(err.to_string())),
    };

    let summary = json!({
        "config": {
            "problem": cli.problem,
            "theta": cli.theta,
            "max_dof": cli.max_dof,
            "max_levels": cli.max_levels,
            "eta_below": cli.eta_below,
            "uniform": cli.uniform,
            "out": cli.out.display().to_string(),
            "export_vtk": cli.export_vtk,
            "export_matrix": cli.export_matrix,
            "seed": cli.seed,
        },
        "levels": records.len(),
        "final": records.last().map(record_json),
        "slopes": {
            "eta_total": tail_slope(records, |r| Some(r.eta_total)),
            "energy_error": tail_slope(records, |r| r.energy_error),
        },
        "error": failure,
    });
    let summary_path = cli.out.join("summary.json");
    let write_summary = || -> std::io::Result<()> {
        let mut f = BufWriter::new(File::create(&summary_path)?);
        serde_json::to_writer_pretty(&mut f, &summary)?;
        writeln!(f)?;
        Ok(())
    };
    if let Err(e) = write_summary() {
        eprintln!("error: cannot write {}: {e}", summary_path.display());
        return ExitCode::from(3);
    }

    match failure {
        None => ExitCode::SUCCESS,
        Some(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
