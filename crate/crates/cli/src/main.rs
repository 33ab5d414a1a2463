mod error;
mod output;
mod parse;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use migsim_core::experiment::{
    compare_avg_vs_nonavg, downtime_vs_time_curve, regenerate_traces, repeat_fleet, run_sweep, sweep_point_spec,
    ExperimentConfig, MethodSelection, Override, SweepAxis, SweepParameter,
};
use migsim_core::fleet::allocate_equal;
use migsim_core::precopy::DEFAULT_ROUNDS;
use migsim_core::trace::{
    parse_fleet_manifest_str, read_trace_csv, trace_stats, write_fleet_manifest, Manifest, SynthBlock,
    TraceStats, DEFAULT_EVENT_GAP_S, DEFAULT_INTER_ROUND_DELAY_S,
};
use migsim_core::{run_fleet, ContainerProfile, FleetOutcome, FleetSpec, HandoffPolicy, Method};

use error::CliError;
use output::{emit, num, opt, Format};

#[derive(Parser)]
#[command(name = "migsim", version, about = "Pre-copy and mirroring live-migration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Migrate a fleet described by a manifest.
    Run(RunArgs),
    /// Override one parameter on every container over a range of values.
    Sweep(SweepArgs),
    /// Trace-driven mirroring against the same traces averaged.
    Compare(CompareArgs),
    /// Downtime against migration time along a transfer-rate axis.
    Curve(CurveArgs),
    /// Write synthetic traces and a manifest referencing them.
    GenTraces(GenArgs),
    /// Summary statistics of a trace file or a directory of traces.
    Stats(StatsArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodFlag {
    Precopy,
    Migrror,
    Both,
}

impl From<MethodFlag> for MethodSelection {
    fn from(m: MethodFlag) -> Self {
        match m {
            MethodFlag::Precopy => MethodSelection::Precopy,
            MethodFlag::Migrror => MethodSelection::Migrror,
            MethodFlag::Both => MethodSelection::Both,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// Replace the manifest's method.
    #[arg(long, value_enum)]
    method: Option<MethodFlag>,
    #[arg(long)]
    rounds: Option<u32>,
    /// fixed:N, deadline:SECONDS, align:M or align:M:TAU
    #[arg(long)]
    policy: Option<String>,
    /// Regenerate the manifest's synthetic traces from this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of runs with traces regenerated per run.
    #[arg(long, default_value_t = 1)]
    repeat: u64,
}

/// Settings shared by sweeps and curves.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value_t = MethodFlag::Both)]
    method: MethodFlag,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: u32,
    /// Mirroring hand-off; aligned with pre-copy by default.
    #[arg(long)]
    policy: Option<String>,
    /// Pre-copy inter-round delay for averaged containers.
    #[arg(long, default_value_t = DEFAULT_INTER_ROUND_DELAY_S)]
    tau: f64,
    /// Mirroring event gap for averaged containers.
    #[arg(long, default_value_t = DEFAULT_EVENT_GAP_S)]
    gap: f64,
    /// Comma-separated axis values.
    #[arg(long, conflicts_with = "range")]
    values: Option<String>,
    /// START:STOP:STEPS, evenly spaced and inclusive.
    #[arg(long)]
    range: Option<String>,
    /// Regenerate the manifest's synthetic traces from this seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let policy = self.policy.as_deref().map(|p| parse::policy(p, self.tau)).transpose().map_err(CliError::invalid)?;
        if !(self.tau >= 0.0) || !(self.gap >= 0.0) {
            return Err(CliError::invalid("--tau and --gap must be non-negative"));
        }
        Ok(ExperimentConfig { rounds: self.rounds, inter_round_delay_s: self.tau, event_gap_s: self.gap, policy })
    }

    fn axis(&self, parameter: SweepParameter) -> Result<SweepAxis, CliError> {
        let axis = match (&self.values, &self.range) {
            (Some(v), None) => SweepAxis::new(parameter, parse::values(v).map_err(CliError::invalid)?),
            (None, Some(r)) => {
                let (start, stop, steps) = parse::range(r).map_err(CliError::invalid)?;
                SweepAxis::linear(parameter, start, stop, steps)
            }
            _ => return Err(CliError::invalid("exactly one of --values or --range is required")),
        };
        Ok(axis?)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// memory_mb, transfer_rate_mbps, dirty_rate_mbps or lambda
    #[arg(long)]
    axis: String,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Also write the manifest evaluated at every sweep point under this directory.
    #[arg(long)]
    emit_manifests: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// Hand-off policy; defaults to the manifest's mirroring policy or every trace event.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value_t = DEFAULT_INTER_ROUND_DELAY_S)]
    tau: f64,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Directory for the traces and `manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Events per trace.
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// uniform:MIN:MAX, tnorm:MEAN:STD:MIN:MAX or const:VALUE
    #[arg(long, default_value = "uniform:50:150")]
    rate: String,
    #[arg(long, default_value = "tnorm:28.979:31.89:0.02323:145.076")]
    dirty: String,
    #[arg(long, default_value = "const:0.01")]
    gap: String,
    /// Container memory size in MB.
    #[arg(long, default_value = "const:200")]
    memory: String,
    /// shuffled, ascending, descending, front:F or back:F
    #[arg(long, default_value = "shuffled")]
    dirty_ordering: String,
    /// Total bandwidth, split equally for the hand-off rates.
    #[arg(long, default_value_t = 1000.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodFlag::Migrror)]
    method: MethodFlag,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: u32,
    /// Mirroring hand-off; every trace event by default.
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    /// Trace CSV, or a directory of them.
    path: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Curve(args) => cmd_curve(args),
        Command::GenTraces(args) => cmd_gen_traces(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}

fn load_manifest(path: &Path) -> Result<(Manifest, FleetSpec), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new(""));
    Ok(parse_fleet_manifest_str(&text, &path.display().to_string(), base_dir)?)
}

/// The manifest's synth block with its seed replaced by `seed`.
fn reseeded(manifest: &Manifest, seed: Option<u64>) -> Result<Option<SynthBlock>, CliError> {
    match (manifest.synth, seed) {
        (Some(mut synth), seed) => {
            if let Some(s) = seed {
                synth.seed = s;
            }
            Ok(Some(synth))
        }
        (None, Some(_)) => Err(CliError::invalid("--seed needs a manifest with a synth block")),
        (None, None) => Ok(None),
    }
}

fn override_method(spec: &mut FleetSpec, args: &RunArgs) -> Result<(), CliError> {
    let current_rounds = match spec.method {
        Method::Precopy { rounds } => rounds,
        Method::Migrror { .. } => DEFAULT_ROUNDS,
    };
    let rounds = args.rounds.unwrap_or(current_rounds);
    let policy = args
        .policy
        .as_deref()
        .map(|p| parse::policy(p, DEFAULT_INTER_ROUND_DELAY_S))
        .transpose()
        .map_err(CliError::invalid)?;
    let kind = match args.method {
        Some(MethodFlag::Both) => return Err(CliError::invalid("run takes a single method")),
        Some(m) => m,
        None => match spec.method {
            Method::Precopy { .. } => MethodFlag::Precopy,
            Method::Migrror { .. } => MethodFlag::Migrror,
        },
    };
    spec.method = match kind {
        MethodFlag::Precopy => Method::Precopy { rounds },
        _ => {
            let current = match spec.method {
                Method::Migrror { policy } => Some(policy),
                Method::Precopy { .. } => None,
            };
            let fallback = HandoffPolicy::AlignToPrecopy { rounds, inter_round_delay_s: DEFAULT_INTER_ROUND_DELAY_S };
            Method::Migrror { policy: policy.or(current).unwrap_or(fallback) }
        }
    };
    Ok(())
}

fn fleet_json(out: &FleetOutcome) -> Value {
    json!({
        "downtime_s": out.fleet_downtime_s,
        "migration_time_s": out.fleet_migration_time_s,
        "overhead_mb": out.fleet_overhead_mb,
        "bandwidth_feasible": out.is_feasible(),
        "bandwidth_violations": out.bandwidth_report,
    })
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let (manifest, mut spec) = load_manifest(&args.manifest)?;
    override_method(&mut spec, &args)?;
    let synth = reseeded(&manifest, args.seed)?;
    let configuration = json!({
        "method": spec.method,
        "total_bandwidth_mbps": spec.total_bandwidth_mbps,
        "containers": spec.containers.len(),
        "repeat": args.repeat,
        "seed": synth.map(|s| s.seed),
    });

    if args.repeat != 1 {
        let synth = synth.ok_or_else(|| CliError::invalid("--repeat needs a manifest with a synth block"))?;
        let summary = repeat_fleet(&spec, &synth, args.repeat)?;
        let text = match args.output.format {
            Format::Json => output::json(&json!({
                "configuration": configuration,
                "repeat": {
                    "repeats": summary.repeats,
                    "base_seed": summary.base_seed,
                    "downtime_s": summary.fleet_downtime_s,
                    "migration_time_s": summary.fleet_migration_time_s,
                    "overhead_mb": summary.fleet_overhead_mb,
                    "runs": summary.runs.iter().map(fleet_json).collect::<Vec<_>>(),
                },
            })),
            Format::Csv => output::csv(
                &["metric", "mean", "std"],
                &[
                    ("downtime_s", summary.fleet_downtime_s),
                    ("migration_time_s", summary.fleet_migration_time_s),
                    ("overhead_mb", summary.fleet_overhead_mb),
                ]
                .map(|(name, m)| vec![name.to_string(), num(m.mean), num(m.std)]),
            ),
        };
        return emit(args.output.out.as_deref(), &text);
    }

    if args.seed.is_some() {
        spec = regenerate_traces(&spec, &synth.expect("checked by reseeded"), 0)?;
    }
    let outcome = run_fleet(&spec)?;
    let text = match args.output.format {
        Format::Json => output::json(&json!({
            "configuration": configuration,
            "fleet": fleet_json(&outcome),
            "containers": outcome.per_container,
        })),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = outcome
                .per_container
                .iter()
                .map(|o| {
                    vec![
                        o.container_id.clone(),
                        num(o.downtime_s),
                        num(o.migration_time_s),
                        num(o.overhead_mb),
                        num(o.stop_volume_mb),
                        o.steps.len().to_string(),
                    ]
                })
                .collect();
            rows.push(vec![
                "fleet".into(),
                num(outcome.fleet_downtime_s),
                num(outcome.fleet_migration_time_s),
                num(outcome.fleet_overhead_mb),
                String::new(),
                String::new(),
            ]);
            output::csv(&["id", "downtime_s", "migration_time_s", "overhead_mb", "stop_volume_mb", "steps"], &rows)
        }
    };
    emit(args.output.out.as_deref(), &text)
}

/// Base fleet for sweeps and curves, regenerated when `--seed` is given.
fn experiment_base(manifest_path: &Path, seed: Option<u64>) -> Result<FleetSpec, CliError> {
    let (manifest, spec) = load_manifest(manifest_path)?;
    match (reseeded(&manifest, seed)?, seed) {
        (Some(synth), Some(_)) => Ok(regenerate_traces(&spec, &synth, 0)?),
        _ => Ok(spec),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let parameter: SweepParameter = args.axis.parse()?;
    let axis = args.experiment.axis(parameter)?;
    let config = args.experiment.config()?;
    let methods: MethodSelection = args.experiment.method.into();
    let base = experiment_base(&args.manifest, args.experiment.seed)?;
    let mut result = run_sweep(&base, &axis, methods, &config)?;
    result.metadata.source = Some(args.manifest.display().to_string());
    result.metadata.seed = args.experiment.seed;

    if let Some(dir) = &args.emit_manifests {
        for (k, row) in result.rows.iter().enumerate() {
            let point = dir.join(format!("{k:03}_{}", row.method.name()));
            std::fs::create_dir_all(&point).map_err(|e| CliError::io(&point, e))?;
            let spec = sweep_point_spec(&base, Override::Set(parameter, row.axis_value), row.method, &config);
            write_fleet_manifest(&spec, &point.join("manifest.json"), None)?;
        }
    }

    let text = match args.output.format {
        Format::Json => output::json(&result),
        Format::Csv => {
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.axis_value),
                        r.method.name().to_string(),
                        if r.is_ok() { "ok" } else { "failed" }.to_string(),
                        opt(r.downtime_s),
                        opt(r.migration_time_s),
                        opt(r.overhead_mb),
                        opt(r.bandwidth_feasible),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            output::csv(
                &[
                    parameter.name(),
                    "method",
                    "status",
                    "downtime_s",
                    "migration_time_s",
                    "overhead_mb",
                    "bandwidth_feasible",
                    "error",
                ],
                &rows,
            )
        }
    };
    emit(args.output.out.as_deref(), &text)
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (_, spec) = load_manifest(&args.manifest)?;
    let policy = args.policy.as_deref().map(|p| parse::policy(p, args.tau)).transpose().map_err(CliError::invalid)?;
    let report = compare_avg_vs_nonavg(&spec, policy)?;
    let text = match args.output.format {
        Format::Json => output::json(&json!({
            "configuration": {
                "policy": policy,
                "method": spec.method,
                "containers": spec.containers.len(),
            },
            "rows": report.rows,
            "fleet": report.fleet,
        })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .chain(&report.fleet)
                .map(|r| {
                    let metric = serde_json::to_value(r.metric).expect("metric serializes");
                    vec![
                        r.id.clone(),
                        metric.as_str().unwrap_or_default().to_string(),
                        num(r.non_average),
                        num(r.average),
                        num(r.deviation),
                        opt(r.deviation_pct),
                    ]
                })
                .collect();
            output::csv(&["id", "metric", "non_average", "average", "deviation", "deviation_pct"], &rows)
        }
    };
    emit(args.output.out.as_deref(), &text)
}

fn cmd_curve(args: CurveArgs) -> Result<(), CliError> {
    let axis = args.experiment.axis(SweepParameter::TransferRateMbps)?;
    let config = args.experiment.config()?;
    let methods: MethodSelection = args.experiment.method.into();
    let base = experiment_base(&args.manifest, args.experiment.seed)?;
    let rows = downtime_vs_time_curve(&base, &axis.values, methods, &config)?;
    let text = match args.output.format {
        Format::Json => output::json(&json!({
            "configuration": {
                "axis": SweepParameter::TransferRateMbps,
                "values": axis.values,
                "methods": methods,
                "config": config,
                "source": args.manifest.display().to_string(),
                "seed": args.experiment.seed,
            },
            "rows": rows,
        })),
        Format::Csv => {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.method.name().to_string(), num(r.axis_value), num(r.migration_time_s), num(r.downtime_s)])
                .collect();
            output::csv(&["method", "transfer_rate_mbps", "migration_time_s", "downtime_s"], &rows)
        }
    };
    emit(args.output.out.as_deref(), &text)
}

fn cmd_gen_traces(args: GenArgs) -> Result<(), CliError> {
    let synth = SynthBlock {
        seed: args.seed,
        length: args.length,
        rate: parse::distribution(&args.rate).map_err(CliError::invalid)?,
        dirty: parse::distribution(&args.dirty).map_err(CliError::invalid)?,
        gap: parse::distribution(&args.gap).map_err(CliError::invalid)?,
        dirty_ordering: parse::ordering(&args.dirty_ordering).map_err(CliError::invalid)?,
        memory: parse::distribution(&args.memory).map_err(CliError::invalid)?,
    };
    let generated = synth.generate(args.count, 0)?;
    let share = allocate_equal(args.bandwidth, args.count)?;
    let method = match args.method {
        MethodFlag::Precopy => Method::Precopy { rounds: args.rounds },
        MethodFlag::Migrror => {
            let all_events = HandoffPolicy::FixedSteps { count: args.length as u32 };
            let policy = args.policy.as_deref().map(|p| parse::policy(p, DEFAULT_INTER_ROUND_DELAY_S)).transpose();
            Method::Migrror { policy: policy.map_err(CliError::invalid)?.unwrap_or(all_events) }
        }
        MethodFlag::Both => return Err(CliError::invalid("gen-traces takes a single method")),
    };
    let spec = FleetSpec {
        containers: generated
            .into_iter()
            .enumerate()
            .map(|(i, (memory_mb, trace))| ContainerProfile::traced(format!("c{:04}", i + 1), memory_mb, share, trace))
            .collect(),
        total_bandwidth_mbps: args.bandwidth,
        method,
    };
    spec.check()?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let path = args.out.join("manifest.json");
    write_fleet_manifest(&spec, &path, Some(synth))?;
    println!("{}", path.display());
    Ok(())
}

fn trace_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(path, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "csv") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::invalid(format!("{}: no .csv traces", path.display())));
    }
    Ok(files)
}

struct ColumnStats {
    name: String,
    events: usize,
    columns: [TraceStats; 3],
}

const STAT_COLUMNS: [&str; 3] = ["rate_mbps", "dirty_mbps", "gap_s"];

fn column_stats(name: String, columns: [&[f64]; 3]) -> Result<ColumnStats, CliError> {
    Ok(ColumnStats {
        name,
        events: columns[0].len(),
        columns: [trace_stats(columns[0])?, trace_stats(columns[1])?, trace_stats(columns[2])?],
    })
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let files = trace_files(&args.path)?;
    let mut pooled: [Vec<f64>; 3] = Default::default();
    let mut per_file = Vec::with_capacity(files.len());
    for file in &files {
        let trace = read_trace_csv(file)?;
        let cols = [trace.rates(), trace.dirty_rates(), trace.gaps()];
        let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        per_file.push(column_stats(name, [&cols[0], &cols[1], &cols[2]])?);
        for (pool, col) in pooled.iter_mut().zip(cols) {
            pool.extend(col);
        }
    }
    let aggregate = column_stats("aggregate".into(), [&pooled[0], &pooled[1], &pooled[2]])?;

    let text = match args.output.format {
        Format::Json => {
            let row = |s: &ColumnStats, key: &str| {
                let mut v = json!({ key: s.name, "events": s.events });
                for (col, stats) in STAT_COLUMNS.iter().zip(&s.columns) {
                    v[*col] = json!(stats);
                }
                v
            };
            let mut agg = row(&aggregate, "scope");
            agg["files"] = json!(per_file.len());
            output::json(&json!({
                "aggregate": agg,
                "files": per_file.iter().map(|s| row(s, "file")).collect::<Vec<_>>(),
            }))
        }
        Format::Csv => {
            let mut header = vec!["source".to_string(), "events".to_string()];
            for col in STAT_COLUMNS {
                for stat in ["min", "max", "median", "mean", "std"] {
                    header.push(format!("{col}_{stat}"));
                }
            }
            let rows: Vec<Vec<String>> = std::iter::once(&aggregate)
                .chain(&per_file)
                .map(|s| {
                    let mut row = vec![s.name.clone(), s.events.to_string()];
                    for c in &s.columns {
                        row.extend([c.min, c.max, c.median, c.mean, c.std].map(num));
                    }
                    row
                })
                .collect();
            output::csv(&header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
        }
    };
    emit(args.output.out.as_deref(), &text)
}
