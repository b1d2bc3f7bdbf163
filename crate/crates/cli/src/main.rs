use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use swarmloop::agent::{
    AgentConfig, MissionKind, PromptSet, Reasoner, ReasonerError, RemoteConfig, RemoteReasoner, ScriptedReasoner,
};
use swarmloop::eval::{run_batch, BatchOptions, BatchReport, MissionSpec, RunRecord};
use swarmloop::gateway::{serve_stdio, JsonRpcServer};

#[derive(Parser)]
#[command(name = "swarmloop", version, about = "Run, score and report UAV swarm missions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mission {
    Coverage,
    CoverageNoTool,
    Formation,
    Irrigation,
}

impl From<Mission> for MissionKind {
    fn from(m: Mission) -> Self {
        match m {
            Mission::Coverage => MissionKind::CoverageWithTool,
            Mission::CoverageNoTool => MissionKind::CoverageNoTool,
            Mission::Formation => MissionKind::Formation,
            Mission::Irrigation => MissionKind::Irrigation,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReasonerKind {
    Scripted,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(clap::Args)]
struct MissionArgs {
    #[arg(long, value_enum)]
    mission: Mission,
    /// World seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planning tool; defaults to on except for coverage-no-tool.
    #[arg(long, value_enum)]
    planner: Option<Switch>,
    #[arg(long, value_enum, default_value = "off")]
    helpers: Switch,
    /// Mission spec JSON overriding the defaults for the chosen mission.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl MissionArgs {
    fn spec(&self) -> Result<MissionSpec> {
        let kind: MissionKind = self.mission.into();
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let spec: MissionSpec =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                if spec.kind != kind {
                    bail!("{} describes a {} mission, not {}", path.display(), spec.kind, kind);
                }
                spec
            }
            None => MissionSpec::new(kind),
        };
        spec.seed = self.seed;
        spec.helpers = self.helpers.on();
        match (kind, self.planner) {
            (MissionKind::CoverageNoTool, Some(Switch::On)) => {
                eprintln!("note: coverage-no-tool always runs without the planning tool");
                spec.planner = false;
            }
            (MissionKind::CoverageNoTool, _) => spec.planner = false,
            (_, Some(s)) => spec.planner = s.on(),
            (_, None) => {}
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of missions and write batch.json plus one file per run.
    Run {
        #[command(flatten)]
        mission: MissionArgs,
        #[arg(long, value_enum, default_value = "scripted")]
        reasoner: ReasonerKind,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Run the batch's worlds on parallel threads.
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        max_iterations: Option<u32>,
        /// Simulated seconds before a run is cut off.
        #[arg(long)]
        sim_timeout: Option<f64>,
        /// Directory with replacement prompt files.
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long)]
        no_guardrails: bool,
    },
    /// Re-score a persisted run file.
    Score {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print the report of a batch directory.
    Report {
        #[arg(long)]
        batch: PathBuf,
    },
    /// Serve the gateway over JSON-RPC on stdin/stdout.
    ServeMcp {
        #[command(flatten)]
        mission: MissionArgs,
        /// Simulated seconds per wall-clock second; 0 freezes the clock.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            mission,
            reasoner,
            runs,
            out,
            parallel,
            max_iterations,
            sim_timeout,
            prompts,
            no_guardrails,
        } => {
            let spec = mission.spec()?;
            let mut agent = AgentConfig::default();
            if let Some(n) = max_iterations {
                agent.max_iterations = n;
            }
            if let Some(t) = sim_timeout {
                agent.sim_timeout_s = t;
            }
            agent.guardrails.enabled = !no_guardrails;
            let prompts = match prompts {
                Some(dir) => PromptSet::load_dir(&dir).with_context(|| format!("loading prompts from {}", dir.display()))?,
                None => PromptSet::default(),
            };
            let remote = match reasoner {
                ReasonerKind::Remote => Some(RemoteConfig::from_env()?),
                ReasonerKind::Scripted => None,
            };
            let kind = spec.kind;
            let factory = move |_i: usize| -> Result<Box<dyn Reasoner + Send>, ReasonerError> {
                Ok(match &remote {
                    Some(config) => Box::new(RemoteReasoner::from_config(config.clone())),
                    None => Box::new(ScriptedReasoner::new(kind)),
                })
            };
            let opts = BatchOptions {
                agent,
                prompts,
                out_dir: Some(out.clone()),
                parallel,
            };
            let (batch, _) = run_batch(&spec, &factory, runs, spec.seed, &opts)?;
            print!("{}", batch.summary_table());
            println!("wrote {}", out.join("batch.json").display());
        }
        Command::Score { trace } => {
            let record = RunRecord::load(&trace)?;
            let report = record.report();
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Report { batch } => {
            let path = if batch.is_dir() { batch.join("batch.json") } else { batch };
            let report = BatchReport::load(&path)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            print!("{}", report.summary_table());
        }
        Command::ServeMcp { mission, time_scale } => serve(mission.spec()?, time_scale)?,
    }
    Ok(())
}

fn serve(spec: MissionSpec, time_scale: f64) -> Result<()> {
    if !(time_scale >= 0.0 && time_scale.is_finite()) {
        bail!("--time-scale must be a non-negative number");
    }
    let env = spec.build_environment()?;
    let stop = Arc::new(AtomicBool::new(false));
    let ticker = (time_scale > 0.0).then(|| {
        let servient = env.servient.clone();
        let stop = stop.clone();
        let period = Duration::from_millis(100);
        thread::spawn(move || {
            while !stop.load(Ordering::Relaxed) {
                thread::sleep(period);
                servient.advance(period.as_secs_f64() * time_scale);
            }
        })
    });
    let server = JsonRpcServer::new(env.gateway.clone());
    let stdin = io::stdin();
    let result = serve_stdio(&server, stdin.lock(), io::stdout().lock());
    stop.store(true, Ordering::Relaxed);
    if let Some(t) = ticker {
        let _ = t.join();
    }
    result.context("serving stdio")?;
    Ok(())
}
