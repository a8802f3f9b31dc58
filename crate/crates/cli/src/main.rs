//! Command-line surface for the weighted-density sequence toolkit.
//!
//! Every command writes one artifact (JSON by default) that embeds a run
//! manifest — the command, its parameters, the master seed, the tool
//! version, and a timestamp — so any output can be reproduced from the
//! artifact alone. Exit codes follow one contract: `0` for a definite
//! answer (Accept or Reject, found or violated), `2` for Inconclusive
//! ("needs a bigger horizon"), `1` for usage or execution errors.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rhostat::classify::{classify, estimate_level};
use rhostat::compactness::{escaping_witness, extract_downward_witness};
use rhostat::corpus::default_corpus;
use rhostat::density::{default_checkpoints, eps_sweep, profiles_to_csv};
use rhostat::functions::{
    chain_check, closure_harness, falsify_uniform_continuity, image_compactness_check,
    sum_count_inequality, test_deviation_preservation, test_downward_continuity,
    test_ward_continuity, uc_image_check, FalsifyConfig,
};
use rhostat::sequence::SequenceSource;
use rhostat::simulate::{pairing_survivor_sequence, ternary_split_sequence};
use rhostat::weights::{check_conditions, make_weights, ConditionBounds};
use rhostat::{
    ClassifyConfig, DensityProfile, ExtractConfig, LacunaryWindows, Outcome, PredicateTag,
    RealFunction, SequenceClass, SimConfig, SimulatedSequence, Tolerances, Verdict,
    WeightSequence, WeightSpec, Witness,
};

// ---------------------------------------------------------------------------
// Argument surface.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "rhostat",
    version,
    about = "Classify sequences by weighted jump densities, extract witnesses, \
             test function continuity surrogates, and simulate the example processes.",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Weight family: `statistical`, `expr:<rho(n)>[;<i>=<v>...]`, or `table:<path>`.
    #[arg(long, global = true)]
    rho: Option<String>,

    /// Horizon for expression-backed sequences and constructions.
    #[arg(long, global = true, default_value_t = 4096)]
    n_max: usize,

    /// Comma-separated, strictly decreasing jump thresholds.
    #[arg(long, global = true, default_value = "1,0.5,0.1,0.05,0.01")]
    eps_grid: String,

    /// Final density at or below this (with a settling tail) accepts.
    #[arg(long, global = true, default_value_t = 0.01)]
    tol_accept: f64,

    /// Final density at or above this (with a rising tail) rejects.
    #[arg(long, global = true, default_value_t = 0.1)]
    tol_reject: f64,

    /// Master seed; every randomised step derives its stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Artifact encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Weight-family utilities.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// Test one sequence for membership in one class.
    Classify(ClassifyArgs),
    /// Density profiles over the whole eps grid for one jump predicate.
    Sweep(SweepArgs),
    /// Extract a downward-well-behaved witness subsequence from a sample.
    ExtractWitness(ExtractArgs),
    /// Build the diverging construction whose gaps outrun the weights.
    ConstructEscape(EscapeArgs),
    /// Preservation and image checks for a real function on the standard corpus.
    TestFunction(TestFunctionArgs),
    /// Search for a uniform-continuity counterexample of a function.
    FalsifyUc(FalsifyArgs),
    /// Run one of the two example stochastic processes.
    Simulate {
        #[command(subcommand)]
        process: SimulateProcess,
    },
    /// Re-run the bundled invariant checks at desk scale.
    VerifyTheorems(VerifyArgs),
    /// Convert a stored profile artifact into a plotting CSV.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum WeightsAction {
    /// Check the admissibility conditions on a finite prefix.
    Check,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Sequence spec: `expr:<f(k)>`, `table:<path>`, or `json:<path>`.
    #[arg(long)]
    seq: String,

    /// Class to test.
    #[arg(long, value_enum, default_value_t = ClassName::RhoDownward)]
    class: ClassName,

    /// Level for the convergence class; estimated from the tail if omitted.
    #[arg(long)]
    level: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ClassName {
    /// Two-sided pointwise small differences.
    QuasiCauchy,
    /// One-sided pointwise: upward jumps die out.
    Downward,
    /// Weighted density of two-sided jumps tends to zero.
    RhoQuasiCauchy,
    /// Weighted density of upward jumps tends to zero.
    RhoDownward,
    /// Weighted density of deviations from a level tends to zero.
    RhoConvergent,
    /// No late rise between tail pairs.
    HalfCauchy,
    /// Per-window upward jump densities tend to zero.
    Lacunary,
}

impl ClassName {
    fn value_name(self) -> &'static str {
        match self {
            ClassName::QuasiCauchy => "quasi-cauchy",
            ClassName::Downward => "downward",
            ClassName::RhoQuasiCauchy => "rho-quasi-cauchy",
            ClassName::RhoDownward => "rho-downward",
            ClassName::RhoConvergent => "rho-convergent",
            ClassName::HalfCauchy => "half-cauchy",
            ClassName::Lacunary => "lacunary",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Sequence spec: `expr:<f(k)>`, `table:<path>`, or `json:<path>`.
    #[arg(long)]
    seq: String,

    /// Jump predicate to profile.
    #[arg(long, value_enum, default_value_t = TagName::Downward)]
    tag: TagName,

    /// Level for the deviation predicate; estimated from the tail if omitted.
    #[arg(long)]
    level: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum TagName {
    /// Upward jumps `alpha_{k+1} - alpha_k >= eps`.
    Downward,
    /// Two-sided jumps `|alpha_{k+1} - alpha_k| >= eps`.
    Absolute,
    /// Deviations `|alpha_k - level| >= eps`.
    Deviation,
}

impl TagName {
    fn value_name(self) -> &'static str {
        match self {
            TagName::Downward => "downward",
            TagName::Absolute => "absolute",
            TagName::Deviation => "deviation",
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Sequence spec: `expr:<f(k)>`, `table:<path>`, or `json:<path>`.
    #[arg(long)]
    seq: String,

    /// Largest accepted consecutive gap inside a tolerance witness.
    #[arg(long, default_value_t = 0.008)]
    gap_cap: f64,

    /// Minimum witness length.
    #[arg(long, default_value_t = 10)]
    min_len: usize,
}

#[derive(Args)]
struct EscapeArgs {
    /// First term of the construction.
    #[arg(long, default_value_t = 0.0)]
    start: f64,
}

#[derive(Args)]
struct TestFunctionArgs {
    /// Function spec: `affine:a,b`, `square`, `neg`, `abs`, `sin`,
    /// `const:c`, or `lipschitz-pwl:<path>`.
    #[arg(long)]
    func: String,

    /// Which check to run.
    #[arg(long, value_enum, default_value_t = FunctionCheck::Downward)]
    check: FunctionCheck,

    /// Second function, required by the closure check.
    #[arg(long)]
    func2: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum FunctionCheck {
    /// Does the function preserve the one-sided density class?
    Downward,
    /// Does it preserve the two-sided density class?
    Ward,
    /// Does it map level-convergent inputs to level-convergent images?
    Deviation,
    /// Full implication chain including the interleaving constructions.
    Chain,
    /// Sum and composition of two preserving functions stay preserving.
    Closure,
    /// Images of extracted witnesses from bounded noise stay in class.
    ImageCompactness,
    /// Jump-count bound on images of small-difference inputs.
    UcImage,
}

impl FunctionCheck {
    fn value_name(self) -> &'static str {
        match self {
            FunctionCheck::Downward => "downward",
            FunctionCheck::Ward => "ward",
            FunctionCheck::Deviation => "deviation",
            FunctionCheck::Chain => "chain",
            FunctionCheck::Closure => "closure",
            FunctionCheck::ImageCompactness => "image-compactness",
            FunctionCheck::UcImage => "uc-image",
        }
    }
}

#[derive(Args)]
struct FalsifyArgs {
    /// Function spec (same grammar as `test-function`).
    #[arg(long)]
    func: String,

    /// Lower end of the sampled domain.
    #[arg(long, default_value_t = 0.0)]
    lo: f64,

    /// Upper end of the sampled domain.
    #[arg(long, default_value_t = 1.0)]
    hi: f64,

    /// Wall-clock search budget in seconds.
    #[arg(long, default_value_t = 10)]
    budget_secs: u64,

    /// Pairs are required for every index up to this bound.
    #[arg(long, default_value_t = 64)]
    max_n: usize,
}

#[derive(Subcommand)]
enum SimulateProcess {
    /// Random mutual picking; survivors are the unpicked. Tracks the
    /// probability that a lone participant remains.
    Pairing(SimArgs),
    /// Random three-way room splitting; singleton rooms dissolve. Tracks
    /// expected rounds per participant.
    Ternary(SimArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Largest group size simulated.
    #[arg(long, default_value_t = 64)]
    max_n: usize,

    /// Monte Carlo trials per group size beyond the exact range.
    #[arg(long, default_value_t = 20_000)]
    trials: usize,

    /// Group sizes up to this bound are computed exactly.
    #[arg(long, default_value_t = 7)]
    exact_cutoff: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only one check group: thm1, prop1, prop2, chain, parity, or uc.
    #[arg(long)]
    filter: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON artifact from `classify` or `sweep` (or raw profile JSON).
    #[arg(long)]
    input: PathBuf,
}

// ---------------------------------------------------------------------------
// Run manifest plumbing.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    command: String,
    parameters: BTreeMap<String, String>,
    master_seed: u64,
    tool_version: String,
    timestamp: String,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    manifest: &'a RunManifest,
    payload: T,
}

fn build_manifest(global: &GlobalOpts, command: &str, extra: &[(&str, String)]) -> RunManifest {
    let mut parameters = BTreeMap::new();
    if let Some(rho) = &global.rho {
        parameters.insert("rho".to_string(), rho.clone());
    }
    parameters.insert("n_max".to_string(), global.n_max.to_string());
    parameters.insert("eps_grid".to_string(), global.eps_grid.clone());
    parameters.insert("tol_accept".to_string(), global.tol_accept.to_string());
    parameters.insert("tol_reject".to_string(), global.tol_reject.to_string());
    // The output path is deliberately not recorded: the manifest describes
    // the computation, and payloads must be reproducible from it alone.
    parameters.insert("format".to_string(), global.format.name().to_string());
    for (key, value) in extra {
        parameters.insert((*key).to_string(), value.clone());
    }
    RunManifest {
        command: command.to_string(),
        parameters,
        master_seed: global.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    }
}

fn write_artifact(global: &GlobalOpts, text: String) -> Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(global: &GlobalOpts, manifest: &RunManifest, payload: T) -> Result<()> {
    let artifact = Artifact { manifest, payload };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    write_artifact(global, text)
}

fn manifest_comments(manifest: &RunManifest, out: &mut Vec<u8>) -> Result<()> {
    writeln!(out, "# command: {}", manifest.command)?;
    for (key, value) in &manifest.parameters {
        writeln!(out, "# parameter {key}: {value}")?;
    }
    writeln!(out, "# master_seed: {}", manifest.master_seed)?;
    writeln!(out, "# tool_version: {}", manifest.tool_version)?;
    writeln!(out, "# timestamp: {}", manifest.timestamp)?;
    Ok(())
}

fn emit_profiles_csv(
    global: &GlobalOpts,
    manifest: &RunManifest,
    profiles: &[DensityProfile<f64>],
) -> Result<()> {
    let mut buf = Vec::new();
    manifest_comments(manifest, &mut buf)?;
    profiles_to_csv(profiles, &mut buf)?;
    write_artifact(global, String::from_utf8(buf)?)
}

// ---------------------------------------------------------------------------
// Shared construction helpers.
// ---------------------------------------------------------------------------

fn parse_eps_grid(text: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad --eps-grid entry '{}'", piece.trim()))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("--eps-grid must list at least one threshold");
    }
    Ok(grid)
}

fn weight_spec(global: &GlobalOpts) -> Result<WeightSpec> {
    let text = global.rho.as_deref().ok_or_else(|| {
        anyhow!("missing required flag --rho <statistical|expr:...|table:...>")
    })?;
    Ok(WeightSpec::parse(text)?)
}

fn build_weights(global: &GlobalOpts, horizon: usize) -> Result<WeightSequence<f64>> {
    Ok(make_weights(&weight_spec(global)?, horizon)?)
}

fn classify_config(global: &GlobalOpts) -> Result<ClassifyConfig<f64>> {
    Ok(ClassifyConfig {
        tolerances: Tolerances {
            tau_accept: global.tol_accept,
            tau_reject: global.tol_reject,
        },
        eps_grid: parse_eps_grid(&global.eps_grid)?,
        checkpoints: None,
        tail_fraction: 0.5,
        max_pairs: 10_000,
        seed: global.seed,
    })
}

fn load_sequence(global: &GlobalOpts, spec: &str) -> Result<SequenceSource<f64>> {
    Ok(SequenceSource::from_spec(spec, global.n_max)?)
}

fn outcome_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Accept | Outcome::Reject => 0,
        Outcome::Inconclusive => 2,
    }
}

fn reject_csv(command: &str) -> Result<i32> {
    bail!("--format csv is not supported for `{command}`; use --format json")
}

// ---------------------------------------------------------------------------
// Entry point and dispatch.
// ---------------------------------------------------------------------------

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful exits; everything else is a
            // usage error.
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let global = &cli.global;
    match &cli.command {
        Command::Weights { action } => match action {
            WeightsAction::Check => cmd_weights_check(global),
        },
        Command::Classify(args) => cmd_classify(global, args),
        Command::Sweep(args) => cmd_sweep(global, args),
        Command::ExtractWitness(args) => cmd_extract_witness(global, args),
        Command::ConstructEscape(args) => cmd_construct_escape(global, args),
        Command::TestFunction(args) => cmd_test_function(global, args),
        Command::FalsifyUc(args) => cmd_falsify_uc(global, args),
        Command::Simulate { process } => cmd_simulate(global, process),
        Command::VerifyTheorems(args) => cmd_verify_theorems(global, args),
        Command::Report(args) => cmd_report(global, args),
    }
}

// ---------------------------------------------------------------------------
// weights check
// ---------------------------------------------------------------------------

fn cmd_weights_check(global: &GlobalOpts) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("weights check");
    }
    // The increment condition inspects one index past the horizon.
    let w = build_weights_at(global, global.n_max + 1)?;
    let report = check_conditions(&w, global.n_max, &ConditionBounds::default())?;
    let all_ok = report.all_ok();
    let manifest = build_manifest(global, "weights check", &[]);
    emit_json(global, &manifest, &report)?;
    Ok(if all_ok { 0 } else { 2 })
}

fn build_weights_at(global: &GlobalOpts, horizon: usize) -> Result<WeightSequence<f64>> {
    Ok(make_weights(&weight_spec(global)?, horizon)?)
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClassifyPayload {
    sequence: String,
    weights: String,
    class: String,
    verdict: Verdict<f64>,
}

fn cmd_classify(global: &GlobalOpts, args: &ClassifyArgs) -> Result<i32> {
    let s = load_sequence(global, &args.seq)?;
    let w = build_weights(global, s.horizon())?;
    let cfg = classify_config(global)?;
    let class = resolve_class(args, &s)?;
    let verdict = classify(&s, &w, &class, &cfg)?;
    let outcome = verdict.outcome;

    let mut extra = vec![
        ("seq", args.seq.clone()),
        ("class", args.class.value_name().to_string()),
    ];
    if let Some(level) = args.level {
        extra.push(("level", level.to_string()));
    }
    let manifest = build_manifest(global, "classify", &extra);
    match global.format {
        Format::Json => {
            let payload = ClassifyPayload {
                sequence: s.label().to_string(),
                weights: w.label().to_string(),
                class: class.name().to_string(),
                verdict,
            };
            emit_json(global, &manifest, payload)?;
        }
        Format::Csv => emit_profiles_csv(global, &manifest, &verdict.evidence)?,
    }
    Ok(outcome_code(outcome))
}

fn resolve_class(args: &ClassifyArgs, s: &SequenceSource<f64>) -> Result<SequenceClass<f64>> {
    Ok(match args.class {
        ClassName::QuasiCauchy => SequenceClass::QuasiCauchy,
        ClassName::Downward => SequenceClass::DownwardQuasiCauchy,
        ClassName::RhoQuasiCauchy => SequenceClass::RhoStatQuasiCauchy,
        ClassName::RhoDownward => SequenceClass::RhoStatDownwardQuasiCauchy,
        ClassName::RhoConvergent => SequenceClass::RhoStatConvergent {
            level: args.level.unwrap_or_else(|| estimate_level(s, 0.1)),
        },
        ClassName::HalfCauchy => SequenceClass::DownwardHalfCauchy,
        ClassName::Lacunary => SequenceClass::LacunaryStatDownwardQuasiCauchy {
            theta: LacunaryWindows::doubling(s.horizon().saturating_sub(1))?,
        },
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(global: &GlobalOpts, args: &SweepArgs) -> Result<i32> {
    let s = load_sequence(global, &args.seq)?;
    let w = build_weights(global, s.horizon())?;
    let cfg = classify_config(global)?;
    let grid = default_checkpoints(s.horizon())?;
    let (tag, level) = match args.tag {
        TagName::Downward => (PredicateTag::Downward, None),
        TagName::Absolute => (PredicateTag::Absolute, None),
        TagName::Deviation => (
            PredicateTag::Deviation,
            Some(args.level.unwrap_or_else(|| estimate_level(&s, 0.1))),
        ),
    };
    let verdict = eps_sweep(&s, &w, tag, level, &cfg.eps_grid, &grid, cfg.tolerances)?;
    let outcome = verdict.outcome;

    let mut extra = vec![
        ("seq", args.seq.clone()),
        ("tag", args.tag.value_name().to_string()),
    ];
    if let Some(level) = level {
        extra.push(("level", level.to_string()));
    }
    let manifest = build_manifest(global, "sweep", &extra);
    match global.format {
        Format::Json => emit_json(global, &manifest, &verdict)?,
        Format::Csv => emit_profiles_csv(global, &manifest, &verdict.evidence)?,
    }
    Ok(outcome_code(outcome))
}

// ---------------------------------------------------------------------------
// extract-witness / construct-escape
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WitnessPayload {
    sequence: String,
    weights: String,
    witness: Witness<f64>,
}

fn cmd_extract_witness(global: &GlobalOpts, args: &ExtractArgs) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("extract-witness");
    }
    let s = load_sequence(global, &args.seq)?;
    let w = build_weights(global, s.horizon())?;
    let cfg = ExtractConfig {
        gap_cap: args.gap_cap,
        min_witness_len: args.min_len,
        classify: classify_config(global)?,
        ..ExtractConfig::default()
    };
    let witness = extract_downward_witness(&s, &w, &cfg)?;
    let outcome = witness.verification.outcome;

    let manifest = build_manifest(
        global,
        "extract-witness",
        &[
            ("seq", args.seq.clone()),
            ("gap_cap", args.gap_cap.to_string()),
            ("min_len", args.min_len.to_string()),
        ],
    );
    emit_json(
        global,
        &manifest,
        WitnessPayload {
            sequence: s.label().to_string(),
            weights: w.label().to_string(),
            witness,
        },
    )?;
    Ok(outcome_code(outcome))
}

fn cmd_construct_escape(global: &GlobalOpts, args: &EscapeArgs) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("construct-escape");
    }
    let w = build_weights(global, global.n_max)?;
    let cfg = classify_config(global)?;
    let witness = escaping_witness(args.start, &w, global.n_max, &cfg)?;
    let outcome = witness.verification.outcome;

    let manifest = build_manifest(
        global,
        "construct-escape",
        &[("start", args.start.to_string())],
    );
    emit_json(
        global,
        &manifest,
        WitnessPayload {
            sequence: format!("escape(start={})", args.start),
            weights: w.label().to_string(),
            witness,
        },
    )?;
    Ok(outcome_code(outcome))
}

// ---------------------------------------------------------------------------
// test-function
// ---------------------------------------------------------------------------

fn cmd_test_function(global: &GlobalOpts, args: &TestFunctionArgs) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("test-function");
    }
    let f = RealFunction::parse(&args.func)?;
    let cfg = classify_config(global)?;
    let h = global.n_max;

    let mut extra = vec![
        ("func", args.func.clone()),
        ("check", args.check.value_name().to_string()),
    ];
    if let Some(func2) = &args.func2 {
        extra.push(("func2", func2.clone()));
    }
    let manifest = build_manifest(global, "test-function", &extra);

    match args.check {
        FunctionCheck::Downward | FunctionCheck::Ward | FunctionCheck::Deviation => {
            let w = build_weights(global, h)?;
            let corpus = default_corpus(h, &w)?;
            let report = match args.check {
                FunctionCheck::Downward => test_downward_continuity(&f, &corpus, &w, &cfg)?,
                FunctionCheck::Ward => test_ward_continuity(&f, &corpus, &w, &cfg)?,
                _ => test_deviation_preservation(&f, &corpus, &w, &cfg)?,
            };
            let definite = report.is_preserved() || report.is_violated();
            emit_json(global, &manifest, &report)?;
            Ok(if definite { 0 } else { 2 })
        }
        FunctionCheck::Chain => {
            // The interleavings stretch inputs fourfold.
            let w = build_weights(global, 4 * h)?;
            let corpus = default_corpus(h, &w)?;
            let report = chain_check(&f, &corpus, &w, &cfg)?;
            emit_json(global, &manifest, &report)?;
            Ok(0)
        }
        FunctionCheck::Closure => {
            let second = args
                .func2
                .as_deref()
                .ok_or_else(|| anyhow!("--check closure requires --func2"))?;
            let g = RealFunction::parse(second)?;
            let w = build_weights(global, h)?;
            let corpus = default_corpus(h, &w)?;
            let report = closure_harness(&f, &g, &corpus, &w, &cfg)?;
            emit_json(global, &manifest, &report)?;
            Ok(0)
        }
        FunctionCheck::ImageCompactness => {
            let w = build_weights(global, h)?;
            let seqs = vec![
                SequenceSource::uniform_random(0.0, 1.0, h, global.seed)?,
                SequenceSource::uniform_random(0.25, 0.75, h, global.seed.wrapping_add(1))?,
            ];
            let extract = ExtractConfig {
                classify: cfg,
                ..ExtractConfig::default()
            };
            let report = image_compactness_check(&f, &seqs, &w, &extract)?;
            emit_json(global, &manifest, &report)?;
            Ok(0)
        }
        FunctionCheck::UcImage => {
            let w = build_weights(global, h)?;
            let corpus = vec![
                SequenceSource::constant(3.0, h)?,
                SequenceSource::closed_form("3 + 1/k", h)?,
            ];
            let report = uc_image_check(&f, &corpus, &w, &cfg)?;
            emit_json(global, &manifest, &report)?;
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// falsify-uc
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FalsifyPayload {
    function: String,
    sample_lo: f64,
    sample_hi: f64,
    found: bool,
    counterexample: Option<rhostat::functions::UcCounterexample<f64>>,
}

fn cmd_falsify_uc(global: &GlobalOpts, args: &FalsifyArgs) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("falsify-uc");
    }
    let f = RealFunction::parse(&args.func)?;
    // The verifier classifies an interleaved sequence twice as long as the
    // pair list.
    let w = build_weights(global, (4 * args.max_n).max(64))?;
    let cfg = FalsifyConfig {
        max_n: args.max_n,
        budget: Duration::from_secs(args.budget_secs),
        seed: global.seed,
        ..FalsifyConfig::default()
    };
    let counterexample = falsify_uniform_continuity(&f, args.lo, args.hi, &w, &cfg)?;
    let found = counterexample.is_some();

    let manifest = build_manifest(
        global,
        "falsify-uc",
        &[
            ("func", args.func.clone()),
            ("lo", args.lo.to_string()),
            ("hi", args.hi.to_string()),
            ("budget_secs", args.budget_secs.to_string()),
            ("max_n", args.max_n.to_string()),
        ],
    );
    emit_json(
        global,
        &manifest,
        FalsifyPayload {
            function: f.label().to_string(),
            sample_lo: args.lo,
            sample_hi: args.hi,
            found,
            counterexample,
        },
    )?;
    // Absence of a counterexample within budget is not a proof.
    Ok(if found { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulatePayload {
    process: String,
    config: SimConfig,
    result: SimulatedSequence<f64>,
}

fn cmd_simulate(global: &GlobalOpts, process: &SimulateProcess) -> Result<i32> {
    let (name, args) = match process {
        SimulateProcess::Pairing(args) => ("pairing", args),
        SimulateProcess::Ternary(args) => ("ternary", args),
    };
    let config = SimConfig {
        max_n: args.max_n,
        trials: args.trials,
        seed: global.seed,
        exact_cutoff: args.exact_cutoff,
    };
    let result = match process {
        SimulateProcess::Pairing(_) => pairing_survivor_sequence(&config)?,
        SimulateProcess::Ternary(_) => ternary_split_sequence(&config)?,
    };

    let manifest = build_manifest(
        global,
        &format!("simulate {name}"),
        &[
            ("max_n", args.max_n.to_string()),
            ("trials", args.trials.to_string()),
            ("exact_cutoff", args.exact_cutoff.to_string()),
        ],
    );
    match global.format {
        Format::Json => emit_json(
            global,
            &manifest,
            SimulatePayload {
                process: name.to_string(),
                config,
                result,
            },
        )?,
        Format::Csv => {
            let mut buf = Vec::new();
            manifest_comments(&manifest, &mut buf)?;
            writeln!(buf, "n,value,standard_error,exact")?;
            for (idx, (value, se)) in result
                .sequence
                .values()
                .iter()
                .zip(&result.standard_errors)
                .enumerate()
            {
                let n = idx + 1;
                writeln!(buf, "{n},{value},{se},{}", n <= result.exact_upto)?;
            }
            write_artifact(global, String::from_utf8(buf)?)?;
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify-theorems
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckRow {
    group: String,
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyPayload {
    checks: Vec<CheckRow>,
    all_pass: bool,
}

const VERIFY_GROUPS: &[&str] = &["thm1", "prop1", "prop2", "chain", "parity", "uc"];

fn cmd_verify_theorems(global: &GlobalOpts, args: &VerifyArgs) -> Result<i32> {
    if global.format == Format::Csv {
        return reject_csv("verify-theorems");
    }
    if let Some(filter) = &args.filter {
        if !VERIFY_GROUPS.contains(&filter.as_str()) {
            bail!(
                "unknown filter '{}'; expected one of {}",
                filter,
                VERIFY_GROUPS.join(", ")
            );
        }
    }
    let wants = |group: &str| args.filter.as_deref().is_none_or(|f| f == group);

    let mut checks = Vec::new();
    if wants("thm1") {
        verify_thm1(global, &mut checks)?;
    }
    if wants("prop1") {
        verify_prop1(global, &mut checks)?;
    }
    if wants("prop2") {
        verify_prop2(global, &mut checks)?;
    }
    if wants("chain") {
        verify_chain(global, &mut checks)?;
    }
    if wants("parity") {
        verify_parity(global, &mut checks)?;
    }
    if wants("uc") {
        verify_uc(global, &mut checks)?;
    }

    for check in &checks {
        eprintln!(
            "check {} / {}: {} ({})",
            check.group,
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        );
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let extra = match &args.filter {
        Some(filter) => vec![("filter", filter.clone())],
        None => Vec::new(),
    };
    let manifest = build_manifest(global, "verify-theorems", &extra);
    emit_json(global, &manifest, VerifyPayload { checks, all_pass })?;
    Ok(if all_pass { 0 } else { 1 })
}

fn push(checks: &mut Vec<CheckRow>, group: &str, name: &str, pass: bool, detail: String) {
    checks.push(CheckRow {
        group: group.to_string(),
        name: name.to_string(),
        pass,
        detail,
    });
}

/// Statistical weights regardless of --rho: the bundled checks pin their
/// own desk-scale setup so they always measure the same thing.
fn desk_weights(horizon: usize) -> Result<WeightSequence<f64>> {
    Ok(make_weights(&WeightSpec::Statistical, horizon)?)
}

fn verify_thm1(global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let h = 1024;
    let w = desk_weights(h)?;
    let cfg = ClassifyConfig::default();

    let escape = escaping_witness(0.0, &w, h, &cfg)?;
    let coarse_final = escape
        .verification
        .evidence
        .first()
        .map(|p| p.final_density())
        .unwrap_or(0.0);
    push(
        checks,
        "thm1",
        "escape-rejects",
        escape.verification.outcome == Outcome::Reject && coarse_final >= 0.9,
        format!(
            "outcome {}, final density {:.3} at the coarsest threshold",
            escape.verification.outcome, coarse_final
        ),
    );

    let descent = rhostat::compactness::construct_descent_sequence(&w, h)?;
    let witness = extract_downward_witness(&descent, &w, &extract_cfg())?;
    let strictly_falling = witness.values.windows(2).all(|p| p[1] < p[0]);
    push(
        checks,
        "thm1",
        "descent-witness",
        witness.verification.outcome == Outcome::Accept && strictly_falling,
        format!(
            "length {}, outcome {}",
            witness.values.len(),
            witness.verification.outcome
        ),
    );

    let noise = SequenceSource::uniform_random(0.0, 1.0, 1000, global.seed)?;
    let w_noise = desk_weights(noise.horizon())?;
    let tolerance = extract_downward_witness(&noise, &w_noise, &extract_cfg())?;
    push(
        checks,
        "thm1",
        "bounded-noise-witness",
        tolerance.verification.outcome == Outcome::Accept,
        format!(
            "length {}, outcome {}",
            tolerance.values.len(),
            tolerance.verification.outcome
        ),
    );
    Ok(())
}

fn extract_cfg() -> ExtractConfig<f64> {
    ExtractConfig::default()
}

fn verify_prop1(_global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let h = 512;
    let w = desk_weights(h)?;
    let cfg = ClassifyConfig::<f64>::default();
    let grid = default_checkpoints(h)?;
    let corpus = vec![
        SequenceSource::constant(3.0, h)?,
        SequenceSource::closed_form("-k", h)?,
        SequenceSource::closed_form("(-1)^k", h)?,
        SequenceSource::closed_form("3 + 1/k", h)?,
    ];
    let pairs = vec![
        (RealFunction::affine(0.7, -1.0), RealFunction::affine(1.2, 0.0)),
        (RealFunction::affine(-0.3, 2.0), RealFunction::square()),
        (
            RealFunction::pwl("tent", vec![-600.0, 0.0, 600.0], vec![0.0, 5.0, 0.0])?,
            RealFunction::affine(0.5, 1.0),
        ),
        (RealFunction::sin(), RealFunction::abs()),
    ];
    let mut rows = 0usize;
    let mut violations = 0usize;
    for (f, g) in &pairs {
        for s in &corpus {
            for row in sum_count_inequality(f, g, s, &w, &cfg.eps_grid, &grid)? {
                rows += 1;
                if !row.holds {
                    violations += 1;
                }
            }
        }
    }
    push(
        checks,
        "prop1",
        "sum-count-inequality",
        violations == 0 && rows > 0,
        format!("{rows} rows, {violations} violations"),
    );
    Ok(())
}

fn verify_prop2(_global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let h = 256;
    let w = desk_weights(4 * h)?;
    let corpus = default_corpus(h, &w)?;
    let cfg = ClassifyConfig::default();
    let f = RealFunction::pwl(
        "half-ramp",
        vec![-2.0e6, 0.0, 2.0e6],
        vec![-1.0e6, 0.0, 1.0e6],
    )?;
    let g = RealFunction::affine(0.25, -3.0);
    let closure = closure_harness(&f, &g, &corpus, &w, &cfg)?;
    push(
        checks,
        "prop2",
        "sum-and-composition-closure",
        closure.sum.is_preserved() && closure.composition.is_preserved(),
        format!(
            "sum {:?}, composition {:?}",
            closure.sum.summary, closure.composition.summary
        ),
    );
    push(
        checks,
        "prop2",
        "closure-count-inequality",
        closure.inequality_holds,
        format!("{} rows", closure.inequality_rows.len()),
    );
    Ok(())
}

fn verify_chain(_global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let h = 256;
    let w = desk_weights(4 * h)?;
    let corpus = default_corpus(h, &w)?;
    let cfg = ClassifyConfig::default();
    for f in [
        RealFunction::identity(),
        RealFunction::affine(0.5, 1.0),
    ] {
        let chain = chain_check(&f, &corpus, &w, &cfg)?;
        push(
            checks,
            "chain",
            &format!("chain-consistency[{}]", f.label()),
            chain.consistent && chain.downward.is_preserved(),
            format!(
                "downward {:?}, {} interleavings",
                chain.downward.summary,
                chain.interleaves.len()
            ),
        );
    }
    Ok(())
}

fn verify_parity(_global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let h = 1024;
    let w = desk_weights(h)?;
    let cfg = ClassifyConfig::default();
    let corpus = vec![
        SequenceSource::constant(3.0, h)?,
        SequenceSource::closed_form("-k", h)?,
        SequenceSource::closed_form("k", h)?,
        SequenceSource::closed_form("(-1)^k", h)?,
    ];
    let f = RealFunction::neg();
    let ward = test_ward_continuity(&f, &corpus, &w, &cfg)?;
    let downward = test_downward_continuity(&f, &corpus, &w, &cfg)?;
    let witness_is_falling_ramp = matches!(
        &downward.summary,
        rhostat::functions::PreservationSummary::Violated { witness } if witness == "-k"
    );
    push(
        checks,
        "parity",
        "negation-splits-the-classes",
        ward.is_preserved() && downward.is_violated() && witness_is_falling_ramp,
        format!(
            "ward {:?}, downward {:?}",
            ward.summary, downward.summary
        ),
    );
    Ok(())
}

fn verify_uc(global: &GlobalOpts, checks: &mut Vec<CheckRow>) -> Result<()> {
    let w = desk_weights(256)?;
    let falsify = FalsifyConfig {
        max_n: 16,
        seed: global.seed,
        ..FalsifyConfig::default()
    };

    let square = falsify_uniform_continuity(&RealFunction::square(), 0.0, 1.0e6, &w, &falsify)?;
    push(
        checks,
        "uc",
        "square-is-falsified",
        square.is_some(),
        match &square {
            Some(ce) => format!("gap threshold {}", ce.eps0),
            None => "no counterexample found".to_string(),
        },
    );
    for f in [RealFunction::identity(), RealFunction::sin()] {
        let cleared = falsify_uniform_continuity(&f, 0.0, 1.0e6, &w, &falsify)?;
        push(
            checks,
            "uc",
            &format!("{}-is-cleared", f.label()),
            cleared.is_none(),
            match &cleared {
                Some(ce) => format!("unexpected counterexample at gap {}", ce.eps0),
                None => "no counterexample, as expected".to_string(),
            },
        );
    }

    let h = 65_536;
    let w_big = desk_weights(h)?;
    let cfg = ClassifyConfig::default();
    let sqrt = SequenceSource::closed_form("sqrt(k)", h)?;
    let report = uc_image_check(&RealFunction::affine(0.5, 0.0), &[sqrt], &w_big, &cfg)?;
    let all_bounds_hold = report
        .rows
        .iter()
        .all(|r| r.bounds.iter().all(|b| b.holds));
    push(
        checks,
        "uc",
        "image-count-bound",
        all_bounds_hold && !report.rows.is_empty(),
        format!("{} input rows", report.rows.len()),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(global: &GlobalOpts, args: &ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let profiles_value = locate_profiles(&value).ok_or_else(|| {
        anyhow!(
            "{} holds no density profiles (expected a classify/sweep artifact)",
            args.input.display()
        )
    })?;
    let profiles: Vec<DensityProfile<f64>> = serde_json::from_value(profiles_value)?;

    let manifest = build_manifest(
        global,
        "report",
        &[("input", args.input.display().to_string())],
    );
    emit_profiles_csv(global, &manifest, &profiles)?;
    Ok(0)
}

fn looks_like_profile(value: &serde_json::Value) -> bool {
    value.get("epsilon").is_some() && value.get("checkpoints").is_some()
}

/// Digs density profiles out of an arbitrary artifact: raw arrays, single
/// profiles, or anything nested under `payload` / `verdict` / `evidence`.
fn locate_profiles(value: &serde_json::Value) -> Option<serde_json::Value> {
    match value {
        serde_json::Value::Array(items) => {
            if !items.is_empty() && items.iter().all(looks_like_profile) {
                Some(value.clone())
            } else {
                None
            }
        }
        serde_json::Value::Object(map) => {
            if looks_like_profile(value) {
                return Some(serde_json::Value::Array(vec![value.clone()]));
            }
            ["evidence", "verdict", "payload", "verification", "witness"]
                .iter()
                .filter_map(|key| map.get(*key))
                .find_map(locate_profiles)
        }
        _ => None,
    }
}
