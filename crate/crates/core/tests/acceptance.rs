//! Acceptance grid. Prints one PASS/FAIL line per criterion, then the full
//! report, and exits nonzero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=1,9` restricts the run; `ACCEPTANCE_WORKERS` sets the
//! thread count (results do not depend on it).

use std::process::ExitCode;
use std::time::Instant;

use porous_renewal::validation::{run_criterion, ValidationConfig, CRITERIA};

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let workers = std::env::var("ACCEPTANCE_WORKERS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let cfg = ValidationConfig {
        workers,
        ..Default::default()
    };

    let mut lines = Vec::new();
    let mut details = Vec::new();
    let mut failed = 0;
    for (id, title) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let line = match run_criterion(id, &cfg) {
            Ok(rep) => {
                if !rep.passed() {
                    failed += 1;
                }
                details.push(rep.to_text());
                format!("{} [{:.1}s]", rep.summary_line(), start.elapsed().as_secs_f64())
            }
            Err(e) => {
                failed += 1;
                format!("FAIL criterion {id} ({title}): error: {e}")
            }
        };
        println!("{line}");
        lines.push(line);
    }

    println!("\n---- acceptance report ----");
    for d in &details {
        println!("{d}");
    }
    println!("---- summary ----");
    for l in &lines {
        println!("{l}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
