//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! runtime; the process exits non-zero if any fails.

mod behaviour;
mod equations;
mod formats;
mod oracles;

use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Detail line on success, reason on failure.
pub type Outcome = Result<String, String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn budget(secs: u64) -> Option<Duration> {
    Some(Duration::from_secs(secs))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "equation exactness", budget: budget(1), check: equations::check },
        Criterion { name: "iou vs monte carlo", budget: budget(30), check: oracles::iou },
        Criterion { name: "kalman vs matrix oracle", budget: budget(10), check: oracles::kalman },
        Criterion { name: "joint nms vs brute force", budget: budget(5), check: oracles::nms },
        Criterion { name: "clear/hota vs brute force", budget: budget(60), check: oracles::metrics },
        Criterion { name: "occlusion ramp confidence", budget: budget(5), check: behaviour::ramp },
        Criterion { name: "nms order ablation", budget: budget(120), check: behaviour::nms_order },
        Criterion { name: "feature memory ablation", budget: budget(120), check: behaviour::n_hist },
        Criterion { name: "2d branch ablation", budget: budget(60), check: behaviour::two_d },
        Criterion { name: "crossing identity", budget: budget(60), check: behaviour::crossing },
        Criterion { name: "format fidelity", budget: budget(1), check: formats::fidelity },
        Criterion { name: "cli determinism", budget: None, check: formats::determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let outcome = (c.check)();
        let elapsed = t.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let limit = c.budget.map(|b| format!(" / {} s", b.as_secs())).unwrap_or_default();
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag}  {:<28} {:>8.3} s{limit:<7}  {detail}", c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
