use std::io::Write;
use std::path::Path;

use anyhow::Result;
use meshkit::harness::{run_suite, GoldenStatus, HarnessError};

/// Run the suite in `dir`, report to `out` and return the exit code.
pub fn simulate(dir: &Path, update_golden: bool, out: &mut dyn Write) -> Result<i32> {
    let summary = match run_suite(dir, update_golden) {
        Ok(s) => s,
        Err(e @ HarnessError::MissingDirectory(_)) => {
            writeln!(out, "error: {e}")?;
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };
    for w in &summary.warnings {
        writeln!(out, "warning: {w}")?;
    }
    for o in &summary.outcomes {
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict} {}", o.name)?;
        if let Some(e) = &o.error {
            writeln!(out, "  error: {e}")?;
        }
        for f in &o.failures {
            writeln!(out, "  step {}: expected {}, got {}", f.step, f.expected, f.actual)?;
        }
        match &o.golden {
            GoldenStatus::Missing => writeln!(out, "  no golden file; run with --update-golden")?,
            GoldenStatus::Differs(lines) => {
                writeln!(out, "  golden mismatch:")?;
                for l in lines {
                    writeln!(out, "    {l}")?;
                }
            }
            GoldenStatus::Written => writeln!(out, "  golden written")?,
            GoldenStatus::Matched | GoldenStatus::Skipped => {}
        }
    }
    writeln!(out, "{} passed, {} failed", summary.passed(), summary.failed())?;
    Ok(summary.exit_code())
}
