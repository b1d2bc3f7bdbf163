use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::score::{count_collisions, measure_energy, measure_exec_time, score_run, Reason, SuccessVerdict};
use super::spec::MissionSpec;
use super::EvalError;
use crate::agent::{run_mission, AgentConfig, PromptSet, Reasoner, ReasonerError, RunTrace, Termination};
use crate::sim::WorldSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub prompt: u64,
    pub completion: u64,
    pub total: u64,
}

impl TokenTotals {
    pub fn of(trace: &RunTrace) -> Self {
        Self {
            prompt: trace.ledger.prompt_total(),
            completion: trace.ledger.completion_total(),
            total: trace.ledger.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub reasoner_seed: u64,
    pub verdict: SuccessVerdict,
    pub exec_time_s: f64,
    pub energy_mah: f64,
    pub collisions: usize,
    pub tokens: TokenTotals,
    pub iterations: usize,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

/// Everything persisted for one run; enough to re-score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub spec: MissionSpec,
    pub run: usize,
    pub reasoner_seed: u64,
    pub initial_world: WorldSnapshot,
    pub trace: RunTrace,
    pub final_world: WorldSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn verdict(&self) -> SuccessVerdict {
        if self.error.is_some() {
            return SuccessVerdict::fail(vec![Reason::RunError]);
        }
        score_run(&self.spec, &self.trace, &self.final_world)
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            run: self.run,
            reasoner_seed: self.reasoner_seed,
            verdict: self.verdict(),
            exec_time_s: measure_exec_time(&self.trace),
            energy_mah: measure_energy(&self.final_world),
            collisions: count_collisions(&self.final_world),
            tokens: TokenTotals::of(&self.trace),
            iterations: self.trace.iterations.len(),
            termination: self.trace.termination,
            trace_file: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| EvalError::Format(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
}

impl Stat {
    /// Population statistics; None for an empty sample.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            stddev: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub mission: String,
    pub reasoner: String,
    pub base_seed: u64,
    pub runs: Vec<RunReport>,
    pub full: usize,
    pub early_exit: usize,
    pub success_rate: f64,
    /// Over full successes only; absent when there are none.
    pub exec_time_s: Option<Stat>,
    pub energy_mah: Option<Stat>,
    pub tokens: Option<Stat>,
}

impl BatchReport {
    pub fn from_runs(mission: &str, reasoner: &str, base_seed: u64, runs: Vec<RunReport>) -> Self {
        let full: Vec<&RunReport> = runs.iter().filter(|r| r.verdict.is_full()).collect();
        let pick = |f: fn(&RunReport) -> f64| Stat::of(&full.iter().map(|r| f(r)).collect::<Vec<_>>());
        let early_exit = runs
            .iter()
            .filter(|r| r.verdict.class == super::SuccessClass::EarlyExit)
            .count();
        Self {
            mission: mission.to_string(),
            reasoner: reasoner.to_string(),
            base_seed,
            success_rate: if runs.is_empty() {
                0.0
            } else {
                full.len() as f64 / runs.len() as f64
            },
            full: full.len(),
            early_exit,
            exec_time_s: pick(|r| r.exec_time_s),
            energy_mah: pick(|r| r.energy_mah),
            tokens: pick(|r| r.tokens.total as f64),
            runs,
        }
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| EvalError::Format(format!("{}: {e}", path.display())))
    }

    /// Plain-text summary table.
    pub fn summary_table(&self) -> String {
        let fmt_stat = |s: &Option<Stat>, digits: usize| match s {
            Some(s) => format!("{:.*} ± {:.*}", digits, s.mean, digits, s.stddev),
            None => "N/A".to_string(),
        };
        let mut out = format!(
            "mission {}  reasoner {}  base seed {}\n",
            self.mission, self.reasoner, self.base_seed
        );
        out.push_str(&format!(
            "{:>4} {:>10} {:<28} {:>9} {:>11} {:>5} {:>9} {:>5}\n",
            "run", "verdict", "reasons", "time_s", "energy_mAh", "coll", "tokens", "iters"
        ));
        for r in &self.runs {
            let class = serde_json::to_value(r.verdict.class).unwrap_or_default();
            let reasons: Vec<&str> = r.verdict.reasons.iter().map(|x| x.as_str()).collect();
            out.push_str(&format!(
                "{:>4} {:>10} {:<28} {:>9.1} {:>11.1} {:>5} {:>9} {:>5}\n",
                r.run,
                class.as_str().unwrap_or_default(),
                if reasons.is_empty() { "-".to_string() } else { reasons.join(",") },
                r.exec_time_s,
                r.energy_mah,
                r.collisions,
                r.tokens.total,
                r.iterations
            ));
        }
        out.push_str(&format!(
            "success rate {:.2} ({} full, {} early exit of {})\n",
            self.success_rate,
            self.full,
            self.early_exit,
            self.runs.len()
        ));
        out.push_str(&format!(
            "over full successes: time {} s, energy {} mAh, tokens {}\n",
            fmt_stat(&self.exec_time_s, 1),
            fmt_stat(&self.energy_mah, 1),
            fmt_stat(&self.tokens, 0)
        ));
        out
    }
}

/// Builds a fresh reasoner for run `i`.
pub type ReasonerFactory<'a> = dyn Fn(usize) -> Result<Box<dyn Reasoner + Send>, ReasonerError> + Sync + 'a;

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub agent: AgentConfig,
    pub prompts: PromptSet,
    /// Where batch.json and run-NN.json go; nothing is written when None.
    pub out_dir: Option<PathBuf>,
    /// Run isolated worlds on separate threads.
    pub parallel: bool,
}

/// Runs one mission instance end to end.
pub fn run_single(
    spec: &MissionSpec,
    reasoner: &mut dyn Reasoner,
    run: usize,
    reasoner_seed: u64,
    agent: &AgentConfig,
    prompts: &PromptSet,
) -> Result<RunRecord, EvalError> {
    let env = spec.build_environment()?;
    let initial_world = env.servient.snapshot();
    reasoner.reseed(reasoner_seed);
    let (trace, error) = match run_mission(&spec.prompt(), reasoner, env.gateway.as_ref(), prompts, agent) {
        Ok(trace) => (trace, None),
        Err(failure) => (failure.trace, Some(failure.error.to_string())),
    };
    Ok(RunRecord {
        spec: spec.clone(),
        run,
        reasoner_seed,
        initial_world,
        trace,
        final_world: env.servient.snapshot(),
        error,
    })
}

fn empty_record(spec: &MissionSpec, run: usize, reasoner_seed: u64, error: String) -> Result<RunRecord, EvalError> {
    let env = spec.build_environment()?;
    let world = env.servient.snapshot();
    let mut trace = RunTrace::new(&spec.prompt().mission_id, "unavailable", Vec::new(), world.time_s);
    trace.termination_detail = Some(error.clone());
    Ok(RunRecord {
        spec: spec.clone(),
        run,
        reasoner_seed,
        initial_world: world.clone(),
        trace,
        final_world: world,
        error: Some(error),
    })
}

fn one_run(spec: &MissionSpec, factory: &ReasonerFactory<'_>, i: usize, base_seed: u64, opts: &BatchOptions) -> Result<RunRecord, EvalError> {
    let seed = base_seed + i as u64;
    match factory(i) {
        Ok(mut r) => run_single(spec, r.as_mut(), i, seed, &opts.agent, &opts.prompts),
        Err(e) => empty_record(spec, i, seed, e.to_string()),
    }
}

/// Runs `n_runs` runs with world seed `base_seed` and reasoner seed
/// `base_seed + i`.
pub fn run_batch(
    spec: &MissionSpec,
    factory: &ReasonerFactory<'_>,
    n_runs: usize,
    base_seed: u64,
    opts: &BatchOptions,
) -> Result<(BatchReport, Vec<RunRecord>), EvalError> {
    if n_runs == 0 {
        return Err(EvalError::InvalidSpec("n_runs must be at least 1".into()));
    }
    let spec = MissionSpec {
        seed: base_seed,
        ..spec.clone()
    };
    spec.validate()?;
    let records: Vec<RunRecord> = if opts.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n_runs)
                .map(|i| {
                    let spec = &spec;
                    s.spawn(move || one_run(spec, factory, i, base_seed, opts))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("run thread panicked"))
                .collect::<Result<_, _>>()
        })?
    } else {
        (0..n_runs)
            .map(|i| one_run(&spec, factory, i, base_seed, opts))
            .collect::<Result<_, _>>()?
    };
    let reasoner = records
        .iter()
        .map(|r| r.trace.reasoner.clone())
        .find(|r| r != "unavailable")
        .unwrap_or_else(|| "unavailable".into());
    let mut reports: Vec<RunReport> = records.iter().map(RunRecord::report).collect();
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(|e| EvalError::Io(format!("{}: {e}", dir.display())))?;
        for (record, report) in records.iter().zip(reports.iter_mut()) {
            let name = format!("run-{:02}.json", record.run);
            write_json(&dir.join(&name), record)?;
            report.trace_file = Some(name);
        }
    }
    let batch = BatchReport::from_runs(spec.kind.as_str(), &reasoner, base_seed, reports);
    if let Some(dir) = &opts.out_dir {
        write_json(&dir.join("batch.json"), &batch)?;
    }
    Ok((batch, records))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), EvalError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| EvalError::Format(e.to_string()))?;
    fs::write(path, text).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}
