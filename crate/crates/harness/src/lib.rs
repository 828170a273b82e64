//! Experiment runner: table reproduction, the `γ` sweep, process validation
//! and single-option pricing, with CSV/JSON/gnuplot output.

pub mod config;
pub mod error;
pub mod output;
pub mod reference;
pub mod single;
pub mod sweep;
pub mod tables;
pub mod validate;

use std::io::Write;

use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, Format};
pub use error::{HarnessError, Result, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL};

use single::SingleReport;
use sweep::SweepReport;
use tables::{Check, RunMeta, TableResult};
use validate::ValidationReport;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    Table(TableResult),
    Sweep(SweepReport),
    Validation(ValidationReport),
    Single(SingleReport),
}

impl Report {
    pub fn checks(&self) -> &[Check] {
        match self {
            Report::Table(r) => &r.checks,
            Report::Sweep(r) => &r.checks,
            Report::Validation(r) => &r.checks,
            Report::Single(_) => &[],
        }
    }

    pub fn meta(&self) -> &RunMeta {
        match self {
            Report::Table(r) => &r.meta,
            Report::Sweep(r) => &r.meta,
            Report::Validation(r) => &r.meta,
            Report::Single(r) => &r.meta,
        }
    }

    /// 3 when any table cell failed, 1 when a check failed, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Report::Table(t) if t.failed_cells() > 0 => EXIT_NUMERICAL,
            _ if self.checks().iter().any(|c| !c.passed) => EXIT_CHECK_FAILED,
            _ => 0,
        }
    }
}

/// Runs the configured experiment on a pool of `cfg.jobs` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {:?} worker threads: {e}", cfg.jobs)))?;
    pool.install(|| match cfg.experiment {
        Experiment::Table2 | Experiment::Table3 | Experiment::Table5 => tables::run_table(cfg).map(Report::Table),
        Experiment::GammaSweep => sweep::run_gamma_sweep(cfg).map(Report::Sweep),
        Experiment::ValidateProcesses => validate::run_validation(cfg).map(Report::Validation),
        Experiment::PriceSingle => single::price_single(cfg).map(Report::Single),
    })
}

#[derive(Serialize)]
struct MetaFile<'a> {
    meta: &'a RunMeta,
    checks: &'a [Check],
    config: &'a ExperimentConfig,
}

fn write_csv<W: Write>(report: &Report, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    match report {
        Report::Table(t) => {
            output::write_table_records(t, &mut out)?;
        }
        Report::Sweep(s) => {
            out.write_record(["gamma", "mc_price", "stderr", "approx", "gap", "n_paths", "seed", "conclusive"])?;
            for r in &s.rows {
                out.write_record([
                    output::sig6(r.gamma),
                    output::sig6(r.mc.mean),
                    output::sig6(r.mc.stderr),
                    output::sig6(r.approx),
                    output::sig6(r.gap),
                    r.n_paths.to_string(),
                    r.seed.to_string(),
                    r.conclusive.to_string(),
                ])?;
            }
        }
        Report::Validation(v) => {
            out.write_record(["check", "passed", "detail"])?;
            for c in &v.checks {
                out.write_record([c.name.as_str(), if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
            }
        }
        Report::Single(s) => {
            out.write_record(["preset", "payoff", "K", "T", "gamma", "mc_price", "stderr", "approx", "gap", "closed_form"])?;
            out.write_record([
                s.preset.clone(),
                format!("{:?}", s.payoff).to_lowercase(),
                output::sig6(s.strike),
                output::sig6(s.horizon),
                output::sig6(s.gamma),
                output::sig6(s.mc.mean),
                output::sig6(s.mc.stderr),
                output::sig6(s.approx),
                output::sig6(s.gap),
                s.closed_form.map(output::sig6).unwrap_or_default(),
            ])?;
        }
    }
    out.flush().map_err(|e| HarnessError::io("csv output", e))?;
    Ok(())
}

fn write_report<W: Write>(report: &Report, format: Format, w: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(report, w),
        Format::Json => output::write_json(report, w),
    }
}

/// Writes the report to `cfg.output_path` (plus `.meta.json` and, for
/// tables, a gnuplot `.dat` file) or to standard output.
pub fn emit(report: &Report, cfg: &ExperimentConfig) -> Result<()> {
    match &cfg.output_path {
        None => write_report(report, cfg.format, std::io::stdout().lock()),
        Some(path) => {
            write_report(report, cfg.format, output::create(path)?)?;
            let meta = MetaFile {
                meta: report.meta(),
                checks: report.checks(),
                config: cfg,
            };
            output::write_json(&meta, output::create(&output::sibling(path, "meta.json"))?)?;
            if let Report::Table(t) = report {
                let dat = output::sibling(path, "dat");
                output::write_table_dat(t, output::create(&dat)?).map_err(|e| HarnessError::io(&dat, e))?;
            }
            Ok(())
        }
    }
}

/// Human-readable summary for standard error.
pub fn summary(report: &Report) -> String {
    let mut s = String::new();
    let meta = report.meta();
    s += &format!(
        "{:?}: seed {}, {} paths, {} steps, {} threads, {:.1} s\n",
        meta.experiment, meta.master_seed, meta.n_paths, meta.n_steps, meta.threads, meta.wall_time_s
    );
    match report {
        Report::Table(t) => {
            let n = t.cells.iter().filter(|c| c.discrepancy).count();
            if n > 0 {
                s += &format!("{n} published values disagree with the Black–Scholes closed form\n");
            }
            if t.failed_cells() > 0 {
                s += &format!("{} cells failed\n", t.failed_cells());
            }
        }
        Report::Sweep(r) => {
            for row in &r.rows {
                s += &format!(
                    "γ = {:<6} mc {:.6} ± {:.2e}  approx {:.6}  gap {:+.3e}  ({} paths)\n",
                    row.gamma, row.mc.mean, row.mc.stderr, row.approx, row.gap, row.n_paths
                );
            }
        }
        Report::Validation(v) => {
            for line in &v.info {
                s += &format!("info: {line}\n");
            }
        }
        Report::Single(r) => {
            s += &format!(
                "mc {:.6} ± {:.2e}  approx {:.6}  gap {:+.3e}\n",
                r.mc.mean, r.mc.stderr, r.approx, r.gap
            );
            if let Some(cf) = r.closed_form {
                s += &format!("closed form {cf:.6}\n");
            }
            for l in &r.residuals.lines {
                s += &format!("residual {}: max {:.2e}, rms {:.2e}\n", l.name, l.linf, l.l2);
            }
            if let Some(lit) = &r.literal {
                s += "triangular heat step (comparison only):\n";
                match (lit.price, &lit.error) {
                    (Some(p), _) => s += &format!("  price {p:.6}\n"),
                    (None, Some(e)) => s += &format!("  price unavailable: {e}\n"),
                    _ => {}
                }
                s += "  ζ      heat equation (ζ)   triangular (ζ²/2)\n";
                for row in &lit.unit_source {
                    s += &format!("  {:<6} {:<19.6} {:.6}\n", row.zeta, row.duhamel, row.triangular);
                }
            }
        }
    }
    for c in report.checks() {
        s += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}
