//! The `swa` command line: ingest, train, eval, analyze, simulate.
//!
//! Every flag can also be set through an `SWA_`-prefixed environment
//! variable; flags win. Exit status is 0 on success, 2 when an input file is
//! missing, 3 for invalid configuration and 1 for anything else. Failures
//! print one JSON object on standard error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    addiction_histogram, artist_addiction_report, compute_log_posteriors, parse_timezone, temporal_addiction_report,
    topic_addiction_report, user_addiction_report, DayFilter, Period,
};
use crate::error::{Error, Result};
use crate::evaluation::{perplexity, write_eval_report, EvalRow, PointEstimates};
use crate::ingest::{
    filter_rare_artists, parse_play_logs, read_dataset_file, segment_sessions, split_train_test, write_dataset_file,
    ColumnMap, FormatConfig, PlayLog, SessionGap, SessionizedDataset, TimestampFormat,
};
use crate::model::{load_checkpoint, resume, save_checkpoint, train, Hyperparameters, ModelState, Schedule, Variant};
use crate::synth::{
    generate_dataset, write_lastfm_logs, write_truth, HourSchedule, LambdaPrior, SessionLength, SynthConfig,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "swa", version, about = "Taste and addiction models for music play logs")]
pub struct Cli {
    /// Directory for all output files.
    #[arg(long, global = true, env = "SWA_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Parse, filter, split and sessionize raw play logs.
    Ingest(IngestArgs),
    /// Train one chain; writes a checkpoint, point estimates and a trace.
    Train(TrainArgs),
    /// Perplexity on held-out sessions, optionally over several K and both variants.
    Eval(EvalArgs),
    /// Addiction reports from a trained SWA checkpoint.
    Analyze(AnalyzeArgs),
    /// Generate synthetic play logs with known parameters.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FormatPreset {
    Lastfm1k,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum VariantArg {
    Session,
    Swa,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Session => Variant::Session,
            VariantArg::Swa => Variant::Swa,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long, env = "SWA_INPUT")]
    pub input: PathBuf,
    #[arg(long, value_enum, env = "SWA_FORMAT", default_value = "lastfm1k")]
    pub format: FormatPreset,
    /// Column mapping such as `user=0,timestamp=1,artist=2`.
    #[arg(long, env = "SWA_COLUMNS")]
    pub columns: Option<String>,
    #[arg(long, env = "SWA_DELIMITER")]
    pub delimiter: Option<char>,
    /// `rfc3339`, `unix`, or a strftime pattern.
    #[arg(long, env = "SWA_TIME_FORMAT", default_value = "rfc3339")]
    pub time_format: String,
    #[arg(long, env = "SWA_GAP_MINUTES", default_value_t = 30.0)]
    pub gap_minutes: f64,
    #[arg(long, env = "SWA_MIN_USERS_PER_ARTIST", default_value_t = 3)]
    pub min_users_per_artist: usize,
    /// Train/test boundary (RFC 3339). Without it a single sessions.tsv is written.
    #[arg(long, env = "SWA_SPLIT_AT")]
    pub split_at: Option<String>,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct HyperArgs {
    #[arg(long, env = "SWA_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, env = "SWA_BETA")]
    pub beta: Option<f64>,
    #[arg(long, env = "SWA_GAMMA")]
    pub gamma: Option<f64>,
    #[arg(long, env = "SWA_RHO")]
    pub rho: Option<f64>,
    #[arg(long, env = "SWA_SWEEPS", default_value_t = 1000)]
    pub sweeps: u64,
    #[arg(long, env = "SWA_BURN_IN", default_value_t = 800)]
    pub burn_in: u64,
    #[arg(long, env = "SWA_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl HyperArgs {
    fn hyperparameters(&self, topics: usize, artists: usize, variant: Variant) -> Result<Hyperparameters> {
        let mut hp = Hyperparameters::with_defaults(topics, artists, variant);
        if let Some(v) = self.alpha {
            hp.alpha = v;
        }
        if let Some(v) = self.beta {
            hp.beta = v;
        }
        if let Some(v) = self.gamma {
            hp.gamma = v;
        }
        if let Some(v) = self.rho {
            hp.rho = v;
        }
        hp.validate()?;
        Ok(hp)
    }

    fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.sweeps, self.burn_in).map_err(|_| {
            Error::config(
                "burn-in",
                format!("burn-in ({}) must be below sweeps ({})", self.burn_in, self.sweeps),
            )
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Sessionized training dataset written by `ingest`.
    #[arg(long, env = "SWA_TRAIN")]
    pub train: PathBuf,
    #[arg(long, env = "SWA_TOPICS")]
    pub topics: usize,
    #[arg(long, value_enum, env = "SWA_VARIANT", default_value = "swa")]
    pub variant: VariantArg,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Continue the chain stored in this checkpoint up to `--sweeps`.
    #[arg(long, env = "SWA_RESUME")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, env = "SWA_TEST")]
    pub test: PathBuf,
    /// Training dataset; required unless `--estimates` is given.
    #[arg(long, env = "SWA_TRAIN")]
    pub train: Option<PathBuf>,
    /// Evaluate an existing estimates file instead of training.
    #[arg(long, env = "SWA_ESTIMATES", conflicts_with = "train")]
    pub estimates: Option<PathBuf>,
    #[arg(
        long,
        env = "SWA_TOPICS",
        value_delimiter = ',',
        default_value = "5,10,20,30,40,50,100,200,300"
    )]
    pub topics: Vec<usize>,
    #[arg(
        long,
        value_enum,
        env = "SWA_VARIANT",
        value_delimiter = ',',
        default_value = "session,swa"
    )]
    pub variant: Vec<VariantArg>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Label for the dataset column; defaults to the test file stem.
    #[arg(long, env = "SWA_DATASET_NAME")]
    pub dataset_name: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long, env = "SWA_CHECKPOINT")]
    pub checkpoint: PathBuf,
    /// UTC or a fixed offset like +09:00, for hour and weekday buckets.
    #[arg(long, env = "SWA_TIMEZONE", default_value = "UTC")]
    pub timezone: String,
    #[arg(long, env = "SWA_BINS", default_value_t = 10)]
    pub bins: usize,
    #[arg(long, env = "SWA_TOP_N", default_value_t = 20)]
    pub top_n: usize,
    /// all, weekdays or weekends (hour-of-day report only).
    #[arg(long, env = "SWA_DAY_FILTER", default_value = "all")]
    pub day_filter: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, env = "SWA_USERS", default_value_t = 200)]
    pub users: usize,
    #[arg(long, env = "SWA_ARTISTS", default_value_t = 300)]
    pub artists: usize,
    #[arg(long, env = "SWA_TOPICS", default_value_t = 10)]
    pub topics: usize,
    #[arg(long, env = "SWA_SESSIONS_PER_USER", default_value_t = 20)]
    pub sessions_per_user: usize,
    #[arg(long, env = "SWA_MEAN_SESSION_LENGTH", default_value_t = 6.0)]
    pub mean_session_length: f64,
    #[arg(long, env = "SWA_MAX_SESSION_LENGTH", default_value_t = 30)]
    pub max_session_length: usize,
    #[arg(long, env = "SWA_THETA_CONCENTRATION", default_value_t = 0.1)]
    pub theta_concentration: f64,
    #[arg(long, env = "SWA_PHI_CONCENTRATION", default_value_t = 0.05)]
    pub phi_concentration: f64,
    #[arg(long, env = "SWA_PSI_CONCENTRATION", default_value_t = 0.05)]
    pub psi_concentration: f64,
    /// `beta:A,B`, `fixed:V` or `groups:V1,V2,...`.
    #[arg(long, env = "SWA_LAMBDA", default_value = "beta:0.5,0.5")]
    pub lambda: String,
    /// Logit shift for an addiction-heavy morning / taste-heavy evening schedule.
    #[arg(long, env = "SWA_MORNING_SCHEDULE")]
    pub morning_schedule: Option<f64>,
    #[arg(long, env = "SWA_SEED", default_value_t = 0)]
    pub seed: u64,
}

fn parse_lambda(s: &str) -> Result<LambdaPrior> {
    let bad = || {
        Error::config(
            "lambda",
            format!("expected beta:A,B | fixed:V | groups:V,..., got `{s}`"),
        )
    };
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let values: Vec<f64> = rest
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    match (kind, values.as_slice()) {
        ("beta", &[a, b]) if a > 0.0 && b > 0.0 => Ok(LambdaPrior::Beta { a, b }),
        ("fixed", &[v]) if (0.0..=1.0).contains(&v) => Ok(LambdaPrior::Fixed(v)),
        ("groups", vs) if !vs.is_empty() && vs.iter().all(|v| (0.0..=1.0).contains(v)) => {
            Ok(LambdaPrior::Groups(vs.to_vec()))
        }
        _ => Err(bad()),
    }
}

fn parse_instant(field: &'static str, s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::config(field, format!("`{s}` is not an RFC 3339 instant: {e}")))
}

/// Mixes a base seed with a run label into an independent chain seed.
pub fn derive_seed(seed: u64, variant: Variant, topics: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ (topics as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ match variant {
            Variant::Session => 0x5E55_1011,
            Variant::Swa => 0x5A_0ADD,
        };
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Cli,
}

fn provenance(cli: &Cli) -> String {
    serde_json::to_string(&Provenance {
        tool: "swa",
        version: env!("CARGO_PKG_VERSION"),
        config: cli,
    })
    .expect("config serializes")
}

fn require_input(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    let prov = provenance(cli);
    match &cli.command {
        Command::Ingest(a) => ingest(a, &cli.out_dir, &prov),
        Command::Train(a) => run_train(a, &cli.out_dir, &prov),
        Command::Eval(a) => run_eval(a, &cli.out_dir, &prov),
        Command::Analyze(a) => run_analyze(a, &cli.out_dir, &prov),
        Command::Simulate(a) => run_simulate(a, &cli.out_dir, &prov),
    }
}

fn ingest(a: &IngestArgs, out: &Path, prov: &str) -> Result<()> {
    require_input(&a.input)?;
    let gap = SessionGap::from_minutes(a.gap_minutes)?;
    let mut format = match a.format {
        FormatPreset::Lastfm1k => FormatConfig::lastfm_1k(),
        FormatPreset::Generic => FormatConfig::generic(),
    };
    if let Some(cols) = &a.columns {
        format.columns = cols.parse::<ColumnMap>()?;
    }
    if let Some(d) = a.delimiter {
        format.delimiter = d;
    }
    format.timestamp = match a.time_format.as_str() {
        "rfc3339" | "iso8601" => TimestampFormat::Rfc3339,
        "unix" => TimestampFormat::UnixSeconds,
        pattern => TimestampFormat::Pattern(pattern.to_owned()),
    };
    let split_at = a
        .split_at
        .as_deref()
        .map(|s| parse_instant("split-at", s))
        .transpose()?;

    let parsed = parse_play_logs(open_input(&a.input)?, &format)?;
    log::info!(
        "parsed {} logs ({} malformed lines skipped)",
        parsed.logs.len(),
        parsed.malformed
    );

    let sessionize = |logs: &[PlayLog], name: &str| -> Result<SessionizedDataset> {
        let kept = filter_rare_artists(logs, a.min_users_per_artist);
        let ds = segment_sessions(&kept, gap);
        log::info!(
            "{name}: {} users, {} artists, {} logs, {} sessions ({} logs of rare artists removed)",
            ds.num_users(),
            ds.num_artists(),
            ds.num_logs(),
            ds.num_sessions(),
            logs.len() - kept.len()
        );
        write_dataset_file(&out.join(format!("{name}.tsv")), &ds, Some(prov))?;
        Ok(ds)
    };
    match split_at {
        Some(boundary) => {
            let split = split_train_test(&parsed.logs, boundary);
            sessionize(&split.train, "train")?;
            sessionize(&split.test, "test")?;
        }
        None => {
            sessionize(&parsed.logs, "sessions")?;
        }
    }
    Ok(())
}

fn write_trace(path: &Path, trace: &[crate::model::TraceEntry], prov: &str) -> Result<()> {
    let mut w = create_output(path)?;
    crate::provenance::write_header(&mut w, prov)?;
    writeln!(w, "sweep\tlog_joint\tburn_in")?;
    for t in trace {
        writeln!(w, "{}\t{}\t{}", t.sweep, t.log_joint, u8::from(t.burn_in))?;
    }
    w.flush()?;
    Ok(())
}

fn run_train(a: &TrainArgs, out: &Path, prov: &str) -> Result<()> {
    let schedule = a.hyper.schedule()?;
    let output = match &a.resume {
        Some(ckpt) => {
            require_input(ckpt)?;
            let (state, _) = load_checkpoint(ckpt)?;
            resume(state, schedule)?
        }
        None => {
            require_input(&a.train)?;
            let ds = read_dataset_file(&a.train)?;
            let hp = a.hyper.hyperparameters(a.topics, ds.num_artists(), a.variant.into())?;
            train(&ds, hp, schedule, a.hyper.seed)?
        }
    };
    save_checkpoint(&out.join("checkpoint.bin"), &output.state, prov)?;
    output.estimates.save(&out.join("estimates.json"), prov)?;
    write_trace(&out.join("trace.tsv"), &output.trace, prov)?;
    log::info!(
        "trained {} sweeps; final log joint {:.4}",
        output.state.sweeps_done(),
        output.trace.last().map_or(f64::NAN, |t| t.log_joint)
    );
    Ok(())
}

fn run_eval(a: &EvalArgs, out: &Path, prov: &str) -> Result<()> {
    require_input(&a.test)?;
    let test = read_dataset_file(&a.test)?;
    let name = a.dataset_name.clone().unwrap_or_else(|| {
        a.test
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });

    let rows: Vec<EvalRow> = if let Some(path) = &a.estimates {
        require_input(path)?;
        let est = PointEstimates::load(path)?;
        let r = perplexity(&test, &est)?;
        vec![EvalRow {
            dataset: name,
            variant: est.variant(),
            topics: est.topics(),
            seed: a.hyper.seed,
            perplexity: r.perplexity,
            evaluated: r.evaluated,
            skipped: r.skipped,
            train_fingerprint: String::new(),
            test_fingerprint: test.fingerprint(),
        }]
    } else {
        let train_path = a
            .train
            .as_ref()
            .ok_or_else(|| Error::config("train", "either --train or --estimates is required"))?;
        require_input(train_path)?;
        let ds = read_dataset_file(train_path)?;
        let schedule = a.hyper.schedule()?;
        if a.topics.is_empty() || a.topics.contains(&0) {
            return Err(Error::config(
                "topics",
                "need a non-empty list of positive topic counts",
            ));
        }
        let mut runs = Vec::new();
        for v in &a.variant {
            for &k in &a.topics {
                let variant: Variant = (*v).into();
                runs.push((variant, k, a.hyper.hyperparameters(k, ds.num_artists(), variant)?));
            }
        }
        let (train_fp, test_fp) = (ds.fingerprint(), test.fingerprint());
        runs.par_iter()
            .map(|&(variant, k, hp)| {
                let seed = derive_seed(a.hyper.seed, variant, k);
                let trained = train(&ds, hp, schedule, seed)?;
                let r = perplexity(&test, &trained.estimates)?;
                log::info!("{variant} K={k}: perplexity {:.4}", r.perplexity);
                Ok(EvalRow {
                    dataset: name.clone(),
                    variant,
                    topics: k,
                    seed,
                    perplexity: r.perplexity,
                    evaluated: r.evaluated,
                    skipped: r.skipped,
                    train_fingerprint: train_fp.clone(),
                    test_fingerprint: test_fp.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    write_eval_report(create_output(&out.join("eval.tsv"))?, &rows, prov)
}

fn run_analyze(a: &AnalyzeArgs, out: &Path, prov: &str) -> Result<()> {
    let timezone = parse_timezone(&a.timezone)?;
    let day_filter: DayFilter = a.day_filter.parse()?;
    if a.top_n == 0 {
        return Err(Error::config("top-n", "must be at least 1"));
    }
    require_input(&a.checkpoint)?;
    let (state, trained_with) = load_checkpoint(&a.checkpoint)?;
    let state: ModelState = state;
    if state.hyperparameters().variant != Variant::Swa {
        return Err(Error::config(
            "checkpoint",
            "analysis needs a checkpoint of the swa variant",
        ));
    }
    let trained_with =
        serde_json::from_str::<serde_json::Value>(&trained_with).unwrap_or(serde_json::Value::String(trained_with));
    let prov = serde_json::json!({
        "analysis": serde_json::from_str::<serde_json::Value>(prov)?,
        "checkpoint": {
            "seed": state.seed(),
            "sweeps_done": state.sweeps_done(),
            "hyperparameters": state.hyperparameters(),
            "provenance": trained_with,
        },
    })
    .to_string();
    let prov = prov.as_str();
    let est = crate::evaluation::estimate_parameters(&state);
    let post = compute_log_posteriors(&state)?;

    let (users, user_hist) = user_addiction_report(&est, a.bins)?;
    users.write_tsv(create_output(&out.join("user_report.tsv"))?, prov)?;
    user_hist.write_tsv(create_output(&out.join("user_histogram.tsv"))?, prov)?;

    let artists = artist_addiction_report(&state, &post);
    artists.write_tsv(create_output(&out.join("artist_report.tsv"))?, prov)?;
    addiction_histogram(&artists, a.bins)?.write_tsv(create_output(&out.join("artist_histogram.tsv"))?, prov)?;

    temporal_addiction_report(&state, &post, Period::HourOfDay, timezone, day_filter)
        .write_tsv(create_output(&out.join("hour_report.tsv"))?, prov)?;
    temporal_addiction_report(&state, &post, Period::DayOfWeek, timezone, DayFilter::All)
        .write_tsv(create_output(&out.join("weekday_report.tsv"))?, prov)?;

    topic_addiction_report(&state, &est, &post, a.top_n)?
        .write_tsv(create_output(&out.join("topic_report.tsv"))?, prov)?;
    Ok(())
}

fn run_simulate(a: &SimulateArgs, out: &Path, prov: &str) -> Result<()> {
    let config = SynthConfig {
        users: a.users,
        artists: a.artists,
        topics: a.topics,
        sessions_per_user: a.sessions_per_user,
        session_length: SessionLength {
            mean: a.mean_session_length,
            max: a.max_session_length,
        },
        theta_concentration: a.theta_concentration,
        phi_concentration: a.phi_concentration,
        psi_concentration: a.psi_concentration,
        lambda: parse_lambda(&a.lambda)?,
        hour_schedule: a.morning_schedule.map(HourSchedule::morning_high),
        ..SynthConfig::default()
    };
    let truth = config.sample_truth(a.seed)?;
    let data = generate_dataset(&truth, a.seed.wrapping_add(1))?;
    write_lastfm_logs(create_output(&out.join("logs.tsv"))?, &data.logs)?;
    write_truth(create_output(&out.join("truth.json"))?, &truth, &data, prov)?;
    log::info!(
        "simulated {} logs in {} sessions",
        data.logs.len(),
        data.dataset.num_sessions()
    );
    Ok(())
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
        Error::InvalidConfig { .. } => 3,
        _ => 1,
    }
}

fn error_line(kind: &str, field: Option<&str>, message: &str) -> String {
    serde_json::json!({ "error": kind, "field": field, "message": message }).to_string()
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::{ContextKind, ContextValue, ErrorKind};
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let field = match e.get(ContextKind::InvalidArg) {
                Some(ContextValue::String(s)) => Some(s.clone()),
                Some(ContextValue::Strings(v)) => v.first().cloned(),
                _ => None,
            };
            let _ = e.print();
            eprintln!(
                "{}",
                error_line("invalid-config", field.as_deref(), &e.kind().to_string())
            );
            return 3;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            let field = match &err {
                Error::InvalidConfig { field, .. } => Some(*field),
                _ => None,
            };
            eprintln!("{}", error_line(err.kind(), field, &err.to_string()));
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_specs() {
        assert_eq!(
            parse_lambda("beta:0.5,0.5").unwrap(),
            LambdaPrior::Beta { a: 0.5, b: 0.5 }
        );
        assert_eq!(parse_lambda("fixed:0").unwrap(), LambdaPrior::Fixed(0.0));
        assert_eq!(
            parse_lambda("groups:0.05,0.95").unwrap(),
            LambdaPrior::Groups(vec![0.05, 0.95])
        );
        assert!(parse_lambda("fixed:2").is_err());
        assert!(parse_lambda("gauss:1").is_err());
    }

    #[test]
    fn derived_seeds_differ_per_run() {
        let a = derive_seed(1, Variant::Swa, 5);
        assert_eq!(a, derive_seed(1, Variant::Swa, 5));
        assert_ne!(a, derive_seed(1, Variant::Session, 5));
        assert_ne!(a, derive_seed(1, Variant::Swa, 10));
    }

    #[test]
    fn bad_flag_value_is_invalid_config() {
        assert_eq!(run(["swa", "train", "--train", "x.tsv", "--topics", "many"]), 3);
        assert_eq!(run(["swa", "--help"]), 0);
    }

    #[test]
    fn default_k_list() {
        let cli = Cli::try_parse_from(["swa", "eval", "--test", "t.tsv", "--train", "x.tsv"]).unwrap();
        match cli.command {
            Command::Eval(e) => {
                assert_eq!(e.topics, vec![5, 10, 20, 30, 40, 50, 100, 200, 300]);
                assert_eq!(e.variant, vec![VariantArg::Session, VariantArg::Swa]);
            }
            _ => unreachable!(),
        }
    }
}
