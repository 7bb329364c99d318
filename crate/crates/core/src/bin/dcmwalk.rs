use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcmwalk::harness::{
    compute_metrics, export, format_metrics, load_experiment_model, read_log_file, run_experiment, run_sweep, Architecture,
    ExperimentConfig, HarnessError, Outcome,
};
use dcmwalk::planner::{plan_walk, write_footsteps, write_plan_csv, PendulumConstants, Pose2};
use dcmwalk::rigidbody::math::yaw_of;
use dcmwalk::rigidbody::{standing_state, Kinematics, GRAVITY};

#[derive(Parser)]
#[command(name = "dcmwalk", version, about = "DCM walking controllers on a simulated biped")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan footsteps and references; writes plan.csv and footsteps.txt.
    Plan(Common),
    /// Run one experiment; writes log.csv, metrics.txt and footsteps.txt.
    Run(Common),
    /// Recompute metrics.txt from an existing log.csv in --out.
    Metrics(Common),
    /// Run the speed x architecture grid of the config in parallel; writes sweep.csv.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// <inst|mpc>x<pos|vel|trq>
    #[arg(long)]
    arch: Option<Architecture>,
    /// Forward speed (m/s).
    #[arg(long)]
    speed: Option<f64>,
    /// Duration (s).
    #[arg(long)]
    duration: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = self.arch {
            c.architecture = a;
        }
        if let Some(v) = self.speed {
            c.walk.speed = v;
        }
        if let Some(d) = self.duration {
            c.duration = d;
        }
        if let Some(o) = &self.out {
            c.output = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(c: &ExperimentConfig) -> PathBuf {
    c.output.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn io(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn plan(c: &ExperimentConfig) -> Result<ExitCode, HarnessError> {
    let model = load_experiment_model(c)?;
    let state = standing_state(&model, &dcmwalk::harness::nominal_posture(&model))?;
    let kin = Kinematics::new(&model, &state)?;
    let pose2 = |p: dcmwalk::rigidbody::math::Pose| Pose2::new(p.translation.x, p.translation.y, yaw_of(p.rotation.matrix()));
    let com = kin.com_position();
    let plan = plan_walk(
        &c.walk,
        PendulumConstants::new(com.z, -GRAVITY.z),
        pose2(kin.frame_pose(model.left_foot_frame)?),
        pose2(kin.frame_pose(model.right_foot_frame)?),
        com.xy(),
        c.period,
        c.duration,
    )?;
    let dir = out_dir(c);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let p = dir.join("plan.csv");
    write_plan_csv(&plan.refs, &p).map_err(|e| io(&p, e))?;
    let p = dir.join("footsteps.txt");
    write_footsteps(&plan.footsteps, &p).map_err(|e| io(&p, e))?;
    println!("{} footsteps, {} samples", plan.footsteps.len(), plan.refs.samples.len());
    Ok(ExitCode::SUCCESS)
}

fn run(c: &ExperimentConfig) -> Result<ExitCode, HarnessError> {
    let out = run_experiment(c)?;
    let metrics = out.metrics();
    export(&out, &metrics, &out_dir(c))?;
    print!("{}", format_metrics(&metrics));
    Ok(match out.outcome {
        Outcome::Completed => ExitCode::SUCCESS,
        Outcome::Fell { time } => {
            eprintln!("fell at t = {time} s");
            ExitCode::from(2)
        }
        Outcome::Aborted { time, reason } => {
            eprintln!("aborted at t = {time} s: {reason}");
            ExitCode::from(1)
        }
    })
}

fn metrics(c: &ExperimentConfig) -> Result<ExitCode, HarnessError> {
    let dir = out_dir(c);
    let log = read_log_file(&dir.join("log.csv"))?;
    let model = load_experiment_model(c)?;
    let m = compute_metrics(&log, model.total_mass(), c.period, c.walk.bounds.lateral_offset);
    let text = format_metrics(&m);
    let p = dir.join("metrics.txt");
    std::fs::write(&p, &text).map_err(|e| io(&p, e))?;
    print!("{text}");
    Ok(if m.fell { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn sweep(c: &ExperimentConfig) -> Result<ExitCode, HarnessError> {
    let rows = run_sweep(c);
    let dir = out_dir(c);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let p = dir.join("sweep.csv");
    let csv_err = |e: csv::Error| HarnessError::Io {
        path: p.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
        println!("{} {:.3} m/s: {}", r.architecture, r.speed, r.outcome);
    }
    w.flush().map_err(|e| io(&p, e))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Usage errors exit 1 like any other error; 2 is reserved for a fall.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (common, f): (&Common, fn(&ExperimentConfig) -> Result<ExitCode, HarnessError>) = match &cli.command {
        Command::Plan(c) => (c, plan),
        Command::Run(c) => (c, run),
        Command::Metrics(c) => (c, metrics),
        Command::Sweep(c) => (c, sweep),
    };
    match common.config().and_then(|c| f(&c)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
