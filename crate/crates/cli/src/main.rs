use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coplan::config::Config;
use coplan::dataset::{dataset_to_jsonl, load_dataset, load_predictions};
use coplan::domain::{validate_goals, validate_scene, Goal, Level, Sample, Scene};
use coplan::eval::evaluate;
use coplan::grpo::{curve_to_csv, run_demo};
use coplan::parse::{answer_text, parse_plan};
use coplan::refine::{pass_at_k, GeneratorClient, HttpGenerator, ScriptedMock, PLANNING_TEMPLATE};
use coplan::rewards::score_response;
use coplan::sim::{make_feedback, run_plan};
use coplan::synth::gen_synthetic;

#[derive(Parser)]
#[command(name = "coplan", version, about = "Check, score and refine multi-robot plans")]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a plan against a scene and report feasibility and goals.
    Check {
        /// JSON file with `scene` and `goals`.
        #[arg(long)]
        problem: PathBuf,
        /// Plan JSON, or a full response containing an answer block.
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Score one response against a dataset sample.
    Score {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        response: PathBuf,
        #[arg(long, value_enum)]
        step_penalty: Option<Switch>,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a predictions file against a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        level: Option<u8>,
        #[arg(long, value_enum)]
        step_penalty: Option<Switch>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write per-sample rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Measure pass@k with or without feedback between attempts.
    Refine {
        /// Planning samples. Omit to use the built-in feedback suite.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Size of the built-in suite.
        #[arg(long, default_value_t = 20)]
        suite: usize,
        /// Scripted mock rules (JSON). Omit to use the HTTP generator.
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        feedback: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Train the toy policy from cold and warm starts and run the
    /// step-penalty ablation.
    GrpoDemo {
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for reward-curve CSV files.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a synthetic dataset with one sample per level per scene.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// Failures that should exit with status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_problem(path: &Path) -> Result<(Scene, Vec<Goal>)> {
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("{}: invalid JSON", path.display()))?;
    let scene: Scene = serde_json::from_value(v.get("scene").cloned().ok_or_else(|| anyhow!("missing field `scene`"))?)
        .context("field `scene`")?;
    let goals: Vec<Goal> = serde_json::from_value(v.get("goals").cloned().unwrap_or(json!([]))).context("field `goals`")?;
    let mut problems: Vec<String> = validate_scene(&scene).iter().map(ToString::to_string).collect();
    problems.extend(validate_goals(&scene, &goals).iter().map(ToString::to_string));
    if !problems.is_empty() {
        bail!("invalid scene: {}", problems.join("; "));
    }
    Ok((scene, goals))
}

fn find_sample(samples: Vec<Sample>, task: &str) -> Result<Sample> {
    samples.into_iter().find(|s| s.task_id == task).ok_or_else(|| anyhow!("no task `{task}` in dataset"))
}

fn penalty(flag: Option<Switch>, cfg: &Config) -> bool {
    flag.map_or(cfg.step_penalty, |s| matches!(s, Switch::On))
}

fn run(cli: Cli) -> Result<ExitCode, Usage> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| Usage(e.into()))?,
        None => Config::default(),
    };
    let usage = |e: anyhow::Error| Usage(e);
    match cli.command {
        Command::Check { problem, plan, output } => {
            let (scene, goals) = load_problem(&problem).map_err(usage)?;
            let text = read(&plan).map_err(usage)?;
            let plan = parse_plan(answer_text(&text)).map_err(|e| Usage(anyhow!("plan: {e}")))?;
            let report = run_plan(&scene, &goals, &plan);
            let body = json!({"success": report.success(), "feedback": make_feedback(&report), "report": report});
            emit(&output, &pretty(&body)).map_err(usage)?;
            Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Score { dataset, task, response, step_penalty, output } => {
            let sample = find_sample(load_dataset(&dataset).map_err(|e| Usage(e.into()))?, &task).map_err(usage)?;
            let text = read(&response).map_err(usage)?;
            let r = score_response(&sample, &text, cfg.rewards, penalty(step_penalty, &cfg));
            emit(&output, &pretty(&r)).map_err(usage)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { dataset, predictions, level, step_penalty, jobs, csv, output } => {
            let data = load_dataset(&dataset).map_err(|e| Usage(e.into()))?;
            let preds: BTreeMap<String, String> = load_predictions(&predictions).map_err(|e| Usage(e.into()))?;
            let level = level.and_then(Level::from_number);
            let report = evaluate(&data, &preds, level, penalty(step_penalty, &cfg), jobs.unwrap_or(cfg.jobs))
                .map_err(|e| Usage(e.into()))?;
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display())).map_err(usage)?;
            }
            emit(&output, &format!("{}\n", report.to_json())).map_err(usage)?;
            Ok(if report.all_correct() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Refine { dataset, suite, mock, k, feedback, seed, jobs, output } => {
            let (samples, suite_mock) = match dataset {
                Some(path) => (load_dataset(&path).map_err(|e| Usage(e.into()))?, None),
                None => {
                    let (s, m) = coplan::refine::feedback_suite(suite, seed).map_err(|e| Usage(e.into()))?;
                    (s, Some(m))
                }
            };
            let gen: Box<dyn GeneratorClient> = match (mock, suite_mock) {
                (Some(path), _) => {
                    let m: ScriptedMock = serde_json::from_str(&read(&path).map_err(usage)?)
                        .with_context(|| format!("{}: invalid mock rules", path.display()))
                        .map_err(usage)?;
                    Box::new(m)
                }
                (None, Some(m)) => Box::new(m),
                (None, None) => Box::new(HttpGenerator::new(cfg.generator.clone()).map_err(|e| Usage(e.into()))?),
            };
            let result = pass_at_k(&samples, gen.as_ref(), k, feedback, PLANNING_TEMPLATE, seed, jobs.unwrap_or(cfg.jobs))
                .map_err(|e| Usage(e.into()))?;
            emit(&output, &pretty(&result)).map_err(usage)?;
            Ok(if result.results.iter().all(|r| r.success) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::GrpoDemo { seed, csv_dir, output } => {
            let mut demo = cfg.grpo.clone();
            if let Some(s) = seed {
                demo.train.seed = s;
            }
            let report = run_demo(&demo, cfg.rewards).map_err(|e| Usage(e.into()))?;
            if let Some(dir) = csv_dir {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).map_err(usage)?;
                for (name, curve) in [("cold.csv", &report.cold_curve), ("warm.csv", &report.warm_curve)] {
                    let path = dir.join(name);
                    fs::write(&path, curve_to_csv(curve))
                        .with_context(|| format!("writing {}", path.display()))
                        .map_err(usage)?;
                }
            }
            let last = |c: &[coplan::grpo::CurvePoint]| c.last().map(|p| p.expected_reward);
            let summary = json!({
                "seed": demo.train.seed,
                "iterations": demo.train.iterations,
                "threshold": demo.threshold,
                "cold_crossing": report.cold_crossing,
                "warm_crossing": report.warm_crossing,
                "cold_final_expected_reward": last(&report.cold_curve),
                "warm_final_expected_reward": last(&report.warm_curve),
                "delta_steps_penalty_on": report.delta_steps_penalty_on,
                "delta_steps_penalty_off": report.delta_steps_penalty_off,
            });
            emit(&output, &pretty(&summary)).map_err(usage)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { n, seed, output } => {
            let samples = gen_synthetic(n, seed).map_err(|e| Usage(e.into()))?;
            emit(&output, &dataset_to_jsonl(&samples)).map_err(usage)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
