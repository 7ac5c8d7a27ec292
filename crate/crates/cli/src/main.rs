//! `gmner`: datasets in, scores and reports out.
//!
//! Every subcommand is a pure function of its input files, flags and the
//! optional JSON config: output lines follow input order and reruns are
//! byte-identical. Warnings go to stderr; results go to the named output
//! files or stdout.

mod config;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::CliConfig;
use gmner_core::{
    filter_grec_multitarget, group_advantages, io, load_predictions, load_reward_groups,
    load_samples, load_schema_records, parse_completion, render_prompt, score_completion,
    split_schema_dataset, GmnerSample, GroupStats, MetricsReport, ParsedCompletion, PromptSpec,
    ReasoningStyle, RewardBreakdown, RewardGroup, RewardGroupRecord, SamplePrediction, Shot,
    TaskMode, TemplateId,
};

#[derive(Parser)]
#[command(
    name = "gmner",
    version,
    about = "Score, filter and evaluate grounded multimodal NER predictions"
)]
struct Cli {
    /// JSON configuration document (all keys optional).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse tagged completions into structured predictions.
    Parse {
        #[arg(long = "in", value_name = "completions.jsonl")]
        input: PathBuf,
        #[arg(long, default_value = "formal")]
        style: ReasoningStyle,
        #[arg(long, value_name = "parsed.jsonl")]
        out: PathBuf,
    },
    /// Score completions against gold samples with the verifiable rewards.
    Score {
        #[arg(long, value_name = "completions.jsonl")]
        pred: PathBuf,
        #[arg(long, value_name = "samples.jsonl")]
        gold: PathBuf,
        #[arg(long, default_value = "formal")]
        style: ReasoningStyle,
        #[arg(long, value_name = "rewards.jsonl")]
        out: PathBuf,
    },
    /// Standardize reward groups into advantages.
    Advantage {
        #[arg(long, value_name = "groups.jsonl")]
        groups: PathBuf,
        #[arg(long, value_name = "advantages.jsonl")]
        out: PathBuf,
    },
    /// Keep only groups whose reward statistics clear the thresholds.
    Filter {
        #[arg(long, value_name = "groups.jsonl")]
        groups: PathBuf,
        #[arg(long, value_name = "kept.jsonl")]
        out: PathBuf,
        #[arg(long, value_name = "stats.json")]
        report: Option<PathBuf>,
    },
    /// Evaluate predictions: per-mode PRF, VG accuracy and bias metrics.
    Eval {
        #[arg(long, value_name = "predictions.jsonl")]
        pred: PathBuf,
        #[arg(long, value_name = "samples.jsonl")]
        gold: PathBuf,
        #[arg(long, default_value = "gmner")]
        mode: TaskMode,
        #[arg(long, value_name = "report.json")]
        out: PathBuf,
    },
    /// Deterministically split schema records into two disjoint sets.
    Split {
        #[arg(long = "in", value_name = "schema.jsonl")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "out-d1", value_name = "d1.jsonl")]
        out_d1: PathBuf,
        #[arg(long = "out-d2", value_name = "d2.jsonl")]
        out_d2: PathBuf,
    },
    /// Drop samples whose expression maps to two or more gold regions.
    GrecFilter {
        #[arg(long = "in", value_name = "grec.jsonl")]
        input: PathBuf,
        #[arg(long, value_name = "filtered.jsonl")]
        out: PathBuf,
    },
    /// Render a prompt template to stdout.
    RenderPrompt {
        #[arg(long)]
        template: TemplateId,
        #[arg(long)]
        sentence: String,
        #[arg(long, default_value = "<image>")]
        image: String,
        #[arg(long, value_name = "shots.jsonl")]
        shots: Option<PathBuf>,
    },
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = CliConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Parse { input, style, out } => cmd_parse(&input, style, &out),
        Command::Score {
            pred,
            gold,
            style,
            out,
        } => cmd_score(&pred, &gold, style, &out, &config),
        Command::Advantage { groups, out } => cmd_advantage(&groups, &out),
        Command::Filter {
            groups,
            out,
            report,
        } => cmd_filter(&groups, &out, report.as_deref(), &config),
        Command::Eval {
            pred,
            gold,
            mode,
            out,
        } => cmd_eval(&pred, &gold, mode, &out, &config),
        Command::Split {
            input,
            fraction,
            seed,
            out_d1,
            out_d2,
        } => cmd_split(&input, fraction, seed, &out_d1, &out_d2),
        Command::GrecFilter { input, out } => cmd_grec_filter(&input, &out, &config),
        Command::RenderPrompt {
            template,
            sentence,
            image,
            shots,
        } => cmd_render_prompt(template, sentence, image, shots.as_deref()),
    }
}

#[derive(Serialize)]
struct ParsedLine<'a> {
    sample_id: &'a str,
    #[serde(flatten)]
    parsed: ParsedCompletion,
}

fn cmd_parse(input: &Path, style: ReasoningStyle, out: &Path) -> Result<()> {
    let records = load_predictions(input)?;
    let mut lines = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let completion = record.completion.as_deref().with_context(|| {
            format!(
                "{}:{}: record for sample {:?} has no completion text",
                input.display(),
                i + 1,
                record.sample_id
            )
        })?;
        lines.push(ParsedLine {
            sample_id: &record.sample_id,
            parsed: parse_completion(completion, style),
        });
    }
    io::write_jsonl(out, &lines)?;
    Ok(())
}

#[derive(Serialize)]
struct ScoredLine<'a> {
    sample_id: &'a str,
    #[serde(flatten)]
    breakdown: RewardBreakdown,
}

fn load_sample_index(
    path: &Path,
    config: &CliConfig,
) -> Result<(Vec<GmnerSample>, HashMap<String, usize>)> {
    let loaded = load_samples(path, config.strict_io)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let mut index = HashMap::new();
    for (i, s) in loaded.samples.iter().enumerate() {
        if index.insert(s.id.clone(), i).is_some() {
            bail!("{}: duplicate sample id {:?}", path.display(), s.id);
        }
    }
    Ok((loaded.samples, index))
}

fn cmd_score(
    pred: &Path,
    gold: &Path,
    style: ReasoningStyle,
    out: &Path,
    config: &CliConfig,
) -> Result<()> {
    let (samples, index) = load_sample_index(gold, config)?;
    let records = load_predictions(pred)?;
    let mut lines = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let completion = record.completion.as_deref().with_context(|| {
            format!(
                "{}:{}: record for sample {:?} has no completion text to score",
                pred.display(),
                i + 1,
                record.sample_id
            )
        })?;
        let sample = index
            .get(&record.sample_id)
            .map(|&idx| &samples[idx])
            .with_context(|| {
                format!(
                    "{}:{}: no gold sample with id {:?}",
                    pred.display(),
                    i + 1,
                    record.sample_id
                )
            })?;
        lines.push(ScoredLine {
            sample_id: &record.sample_id,
            breakdown: score_completion(completion, style, sample, &config.reward),
        });
    }
    io::write_jsonl(out, &lines)?;
    Ok(())
}

#[derive(Serialize)]
struct AdvantageLine<'a> {
    sample_id: &'a str,
    advantages: Vec<f64>,
}

fn cmd_advantage(groups: &Path, out: &Path) -> Result<()> {
    let records = load_reward_groups(groups)?;
    let mut lines = Vec::with_capacity(records.len());
    for record in &records {
        let group = RewardGroup::new(record.rewards.clone())
            .with_context(|| format!("group for sample {:?}", record.sample_id))?;
        lines.push(AdvantageLine {
            sample_id: &record.sample_id,
            advantages: group_advantages(&group),
        });
    }
    io::write_jsonl(out, &lines)?;
    Ok(())
}

#[derive(Serialize)]
struct GroupDecision<'a> {
    sample_id: &'a str,
    keep: bool,
    #[serde(flatten)]
    stats: GroupStats,
}

#[derive(Serialize)]
struct FilterReport<'a> {
    total_groups: usize,
    kept: usize,
    dropped: usize,
    thresholds: &'a gmner_core::FilterThresholds,
    groups: Vec<GroupDecision<'a>>,
}

fn cmd_filter(
    groups: &Path,
    out: &Path,
    report_path: Option<&Path>,
    config: &CliConfig,
) -> Result<()> {
    let records = load_reward_groups(groups)?;
    let mut kept: Vec<&RewardGroupRecord> = Vec::new();
    let mut decisions = Vec::with_capacity(records.len());
    for record in &records {
        let group = RewardGroup::new(record.rewards.clone())
            .with_context(|| format!("group for sample {:?}", record.sample_id))?;
        let (keep, stats) = gmner_core::filter_group(&group, &config.filter);
        if keep {
            kept.push(record);
        }
        decisions.push(GroupDecision {
            sample_id: &record.sample_id,
            keep,
            stats,
        });
    }
    io::write_jsonl(out, &kept)?;
    if let Some(path) = report_path {
        let report = FilterReport {
            total_groups: records.len(),
            kept: kept.len(),
            dropped: records.len() - kept.len(),
            thresholds: &config.filter,
            groups: decisions,
        };
        let mut bytes = serde_json::to_vec_pretty(&report)?;
        bytes.push(b'\n');
        io::write_atomic(path, &bytes)?;
    }
    Ok(())
}

fn cmd_eval(
    pred: &Path,
    gold: &Path,
    mode: TaskMode,
    out: &Path,
    config: &CliConfig,
) -> Result<()> {
    let loaded = load_samples(gold, config.strict_io)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let records = load_predictions(pred)?;
    let predictions: Vec<SamplePrediction> = records
        .iter()
        .map(|r| SamplePrediction {
            sample_id: r.sample_id.clone(),
            triples: r.resolve_triples(ReasoningStyle::Formal),
        })
        .collect();
    let report = MetricsReport::compute(&predictions, &loaded.samples, mode, config.iou_threshold)?;
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    io::write_atomic(out, &bytes)?;
    Ok(())
}

fn cmd_split(input: &Path, fraction: f64, seed: u64, out_d1: &Path, out_d2: &Path) -> Result<()> {
    let records = load_schema_records(input)?;
    let (d1, d2) = split_schema_dataset(records, fraction, seed)?;
    io::write_jsonl(out_d1, &d1)?;
    io::write_jsonl(out_d2, &d2)?;
    Ok(())
}

fn cmd_grec_filter(input: &Path, out: &Path, config: &CliConfig) -> Result<()> {
    let loaded = load_samples(input, config.strict_io)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let (kept, dropped) = filter_grec_multitarget(loaded.samples);
    io::write_jsonl(out, &kept)?;
    eprintln!(
        "dropped {dropped} multi-target samples, kept {}",
        kept.len()
    );
    Ok(())
}

fn cmd_render_prompt(
    template: TemplateId,
    sentence: String,
    image: String,
    shots: Option<&Path>,
) -> Result<()> {
    let shots = match shots {
        Some(path) => io::read_jsonl::<Shot>(path)?,
        None => Vec::new(),
    };
    let spec = PromptSpec {
        template_id: template,
        sentence,
        image_placeholder: image,
        shots,
    };
    // tolerate a closed pipe (e.g. `gmner render-prompt ... | head`)
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", render_prompt(&spec)) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing to stdout"),
    }
}
