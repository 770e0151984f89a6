//! CSV and JSON rendering of sweep results.
//!
//! Reals are printed in scientific notation with 17 significant digits, so
//! identical results give byte-identical files.

use std::io::{self, Write};

use serde_json::{json, Value};

use super::config::SweepConfig;
use super::sweep::SweepResult;

pub const CSV_HEADER: &str =
    "k,strategy,mean_throughput,stderr,mean_u0sq,mean_alpha,fallback_rate,law_value,gap";

fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            r.strategy.label(),
            real(r.mean_throughput),
            real(r.stderr),
            real(r.mean_u0sq),
            real(r.mean_alpha),
            real(r.fallback_rate),
            real(r.law_value),
            real(r.gap),
        )?;
    }
    Ok(())
}

pub fn csv_string(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Rows plus the configuration and seed that produced them. Undefined law
/// values are `null`.
pub fn summary_json(result: &SweepResult, config: &SweepConfig) -> Value {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "strategy": r.strategy.label(),
                "mean_throughput": num(r.mean_throughput),
                "stderr": num(r.stderr),
                "mean_u0sq": num(r.mean_u0sq),
                "mean_alpha": num(r.mean_alpha),
                "fallback_rate": num(r.fallback_rate),
                "law_value": num(r.law_value),
                "gap": num(r.gap),
                "strategy1_length": r.strategy1_length,
            })
        })
        .collect();
    json!({
        "seed": config.seed,
        "config": config.to_json(),
        "rows": rows,
    })
}
