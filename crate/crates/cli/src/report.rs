//! Renders the artifacts of a completed run directory.

use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

pub fn render(run_dir: &Path) -> Result<String, String> {
    let summary_path = run_dir.join("summary.jsonl");
    let checks_path = run_dir.join("checks.txt");
    if !summary_path.exists() && !checks_path.exists() {
        return Err(format!(
            "{} contains neither summary.jsonl nor checks.txt — not a run directory",
            run_dir.display()
        ));
    }
    let mut out = String::new();
    let _ = writeln!(out, "run directory: {}", run_dir.display());

    if summary_path.exists() {
        let text = std::fs::read_to_string(&summary_path)
            .map_err(|e| format!("cannot read {}: {e}", summary_path.display()))?;
        let _ = writeln!(out, "\n== summary ==");
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: Value = serde_json::from_str(line)
                .map_err(|e| format!("malformed summary line: {e}"))?;
            render_object(&mut out, &v, 0);
        }
    } else {
        let _ = writeln!(out, "\n(summary.jsonl absent)");
    }

    if checks_path.exists() {
        let text = std::fs::read_to_string(&checks_path)
            .map_err(|e| format!("cannot read {}: {e}", checks_path.display()))?;
        let _ = writeln!(out, "\n== invariant checks ==");
        out.push_str(&text);
    } else {
        let _ = writeln!(out, "\n(checks.txt absent)");
    }

    // Known auxiliary series, listed if present.
    let _ = writeln!(out, "\n== artifacts ==");
    for name in [
        "run.csv",
        "trajectory.csv",
        "convergence.csv",
        "scattering.csv",
        "norms.csv",
        "sweep.csv",
    ] {
        let p = run_dir.join(name);
        if p.exists() {
            let lines = std::fs::read_to_string(&p)
                .map(|t| t.lines().count().saturating_sub(1))
                .unwrap_or(0);
            let _ = writeln!(out, "{name}: {lines} rows");
        }
    }
    Ok(out)
}

fn render_object(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        let _ = writeln!(out, "{pad}{k}:");
                        render_object(out, val, indent + 1);
                    }
                    other => {
                        let _ = writeln!(out, "{pad}{k} = {other}");
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => render_object(out, item, indent),
                    other => {
                        let _ = writeln!(out, "{pad}- {other}");
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{other}");
        }
    }
}
