//! Runner for the acceptance criteria.
//!
//! Each criterion is a plain function returning a [`Verdict`]. The runner
//! executes them in order, turns panics into failures, and prints exactly one
//! `PASS`/`FAIL` line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }

    /// Combine sub-checks: passes only if every part passes.
    pub fn all(parts: Vec<Verdict>) -> Self {
        let pass = parts.iter().all(|v| v.pass);
        let detail = parts
            .iter()
            .map(|v| if v.pass { v.detail.clone() } else { format!("[failed] {}", v.detail) })
            .collect::<Vec<_>>()
            .join("; ");
        Verdict { pass, detail }
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub check: fn() -> Verdict,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_slope(&lx, &ly)
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Run every criterion, print one line each, and fail if any did.
pub fn run_all(criteria: &[Criterion]) -> ExitCode {
    // Keep panic messages out of the report; they are folded into the verdict.
    panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for c in criteria {
        let start = Instant::now();
        let verdict = match panic::catch_unwind(AssertUnwindSafe(c.check)) {
            Ok(v) => v,
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Verdict::new(false, format!("panicked: {msg}"))
            }
        };
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {tag}  {}: {} ({:.1} s)",
            c.id,
            c.title,
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
        if !verdict.pass {
            failed.push(c.id);
        }
    }
    let _ = panic::take_hook();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria failed: {:?}", failed.len(), criteria.len(), failed);
        ExitCode::FAILURE
    }
}
