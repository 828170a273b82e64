//! CSV, JSON and gnuplot writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::tables::{Cell, TableResult};

/// Six significant digits; `NaN` for failed cells.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else { format!("{x}") };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..=9).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new leading digit.
        let rounded: f64 = s.parse().unwrap_or(x);
        let exp2 = rounded.abs().log10().floor() as i32;
        if exp2 != exp {
            format!("{rounded:.prec$}", prec = (5 - exp2).max(0) as usize)
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 14] = [
    "model",
    "alpha",
    "T",
    "K",
    "price",
    "stderr",
    "n_paths",
    "n_steps",
    "seed",
    "paper_ref",
    "closed_form",
    "discrepancy",
    "price_raw",
    "stderr_raw",
];

fn cell_record(c: &Cell) -> Vec<String> {
    vec![
        c.model.clone(),
        sig6(c.alpha),
        sig6(c.horizon),
        sig6(c.strike),
        sig6(c.price),
        sig6(c.stderr),
        c.n_paths.to_string(),
        c.n_steps.to_string(),
        c.seed.to_string(),
        opt(c.paper_ref),
        opt(c.closed_form),
        if c.discrepancy { "DISCREPANCY".into() } else { String::new() },
        format!("{:?}", c.price),
        format!("{:?}", c.stderr),
    ]
}

pub fn write_table_records<W: Write>(result: &TableResult, out: &mut csv::Writer<W>) -> Result<()> {
    out.write_record(CSV_HEADER)?;
    for c in &result.cells {
        out.write_record(cell_record(c))?;
    }
    Ok(())
}

/// One gnuplot data block per model and row, separated by two blank lines:
/// `K price stderr paper_ref`.
pub fn write_table_dat<W: Write>(result: &TableResult, mut w: W) -> std::io::Result<()> {
    let mut models: Vec<&str> = Vec::new();
    for c in &result.cells {
        if !models.contains(&c.model.as_str()) {
            models.push(&c.model);
        }
    }
    let mut first = true;
    for m in models {
        for row in result.rows(m) {
            if !first {
                writeln!(w, "\n")?;
            }
            first = false;
            let c0 = row[0];
            writeln!(w, "# model={} alpha={} T={}", m, sig6(c0.alpha), sig6(c0.horizon))?;
            writeln!(w, "# K price stderr paper_ref")?;
            for c in row {
                let published = c.paper_ref.map(sig6).unwrap_or_else(|| "NaN".into());
                writeln!(w, "{} {} {} {}", sig6(c.strike), sig6(c.price), sig6(c.stderr), published)?;
            }
        }
    }
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| HarnessError::io("json output", e))?;
    Ok(())
}

/// `out.csv` → `out.dat`, `out.meta.json`.
pub fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}
