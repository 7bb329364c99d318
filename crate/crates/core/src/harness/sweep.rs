use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::config::{Architecture, ExperimentConfig};
use super::log::write_log_file;
use super::metrics::{format_metrics, Metrics};
use super::run::{run_experiment, Outcome, RunOutput};
use super::HarnessError;
use crate::planner::format_footsteps;

fn outcome_line(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Completed => "outcome = \"completed\"\n".into(),
        Outcome::Fell { time } => format!("outcome = \"fell\"\noutcome_time = {time}\n"),
        Outcome::Aborted { time, reason } => {
            format!("outcome = \"aborted\"\noutcome_time = {time}\nreason = {reason:?}\n")
        }
    }
}

/// Writes `log.csv`, `metrics.txt` and `footsteps.txt` (realized steps) into
/// `dir`, creating it if needed.
pub fn export(run: &RunOutput, metrics: &Metrics, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_log_file(&run.log, &dir.join("log.csv"))?;
    let summary = format!(
        "architecture = \"{}\"\nseed = {}\n{}{}",
        run.config.architecture,
        run.config.seed,
        outcome_line(&run.outcome),
        format_metrics(metrics)
    );
    let path = dir.join("metrics.txt");
    std::fs::write(&path, summary).map_err(|e| HarnessError::io(&path, e))?;
    let path = dir.join("footsteps.txt");
    std::fs::write(&path, format_footsteps(&metrics.steps)).map_err(|e| HarnessError::io(&path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub architecture: String,
    pub speed: f64,
    pub outcome: String,
    pub max_dcm_error: f64,
    pub max_com_error: f64,
    pub walking_velocity: Option<f64>,
    pub cost_of_transport: Option<f64>,
}

fn sweep_row(config: &ExperimentConfig) -> SweepRow {
    let mut row = SweepRow {
        architecture: config.architecture.to_string(),
        speed: config.walk.speed,
        outcome: String::new(),
        max_dcm_error: f64::NAN,
        max_com_error: f64::NAN,
        walking_velocity: None,
        cost_of_transport: None,
    };
    match run_experiment(config) {
        Ok(run) => {
            let m = run.metrics();
            row.outcome = match run.outcome {
                Outcome::Completed => "completed".into(),
                Outcome::Fell { .. } => "fell".into(),
                Outcome::Aborted { reason, .. } => format!("aborted: {reason}"),
            };
            row.max_dcm_error = m.max_dcm_error;
            row.max_com_error = m.max_com_error;
            row.walking_velocity = m.walking_velocity;
            row.cost_of_transport = m.cost_of_transport;
        }
        Err(e) => row.outcome = format!("error: {e}"),
    }
    row
}

/// Runs every (architecture, speed) cell of `base.sweep` in parallel. Rows
/// come back in grid order regardless of scheduling.
pub fn run_sweep(base: &ExperimentConfig) -> Vec<SweepRow> {
    let cells: Vec<(Architecture, f64)> = base
        .sweep
        .architectures
        .iter()
        .flat_map(|&a| base.sweep.speeds.iter().map(move |&s| (a, s)))
        .collect();
    let threads = match base.sweep.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(cells.len().max(1));
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(architecture, speed)) = cells.get(i) else {
                    break;
                };
                let mut config = base.clone();
                config.architecture = architecture;
                config.walk.speed = speed;
                let row = sweep_row(&config);
                results.lock().expect("sweep worker panicked")[i] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .expect("sweep worker panicked")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}
