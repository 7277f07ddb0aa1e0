//! `qsync`: simulate, sweep, estimate and validate entanglement-based clock
//! synchronization runs.

mod settings;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qsync_core::harness::table::{
    write_checks_csv, write_experiment_csv, write_records, write_summary_csv, write_sweep_csv,
};
use qsync_core::harness::{
    receiver_rows, run_experiment_with_bulletin, run_sweep, summarize_sweep, validate_with,
    RunMetadata, SweepAxis, SweepSpec, ValidationOptions,
};
use qsync_core::{Bulletin, ExperimentConfig};

use settings::{CliError, Settings};

#[derive(Parser, Debug)]
#[command(
    name = "qsync",
    version,
    about = "Clock synchronization from shared W states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the protocol end to end and report every receiver's estimate.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write the public bulletin as JSON lines.
        #[arg(long, value_name = "PATH")]
        bulletin_out: Option<PathBuf>,
    },
    /// Repeat independent trials across values of one parameter.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// n, M, delta or phase_noise_scale.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        /// Trials per value [default: 200].
        #[arg(long)]
        trials: Option<String>,
        /// Also write per-value RMSE against the predicted standard error.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Estimate offsets offline from one or more bulletin files.
    Estimate {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Bulletin file (JSON lines); repeat or comma-separate for several.
        #[arg(long, value_name = "PATH")]
        bulletin: Vec<String>,
        /// Comma-separated receivers [default: every non-publisher on the bulletin].
        #[arg(long)]
        receiver: Option<String>,
    },
    /// Run the built-in identity and oracle checks.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Seed for the randomized oracle cases.
        #[arg(long)]
        seed: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
        /// Sign of the phase convention used in the time-evolution checks.
        #[arg(long, hide = true, allow_hyphen_values = true)]
        evolution_sign: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Flat JSON object keyed by flag name; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N", allow_hyphen_values = true)]
    parties: Option<String>,
    #[arg(long, value_name = "M", allow_hyphen_values = true)]
    sets: Option<String>,
    #[arg(long, value_name = "W", allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long, value_name = "W2", allow_hyphen_values = true)]
    omega2: Option<String>,
    /// Fraction of sets prepared at the second frequency.
    #[arg(long, value_name = "R", allow_hyphen_values = true)]
    freq_split: Option<String>,
    /// Standard time at each party's local zero.
    #[arg(long, value_name = "CSV", allow_hyphen_values = true)]
    offsets: Option<String>,
    #[arg(long, value_name = "U64")]
    seed: Option<String>,
    /// none, fixed:φ0,φ1,..., normal:σ or uniform:w.
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    phase_noise: Option<String>,
    #[arg(long, value_name = "CSV", allow_hyphen_values = true)]
    basis_misalign: Option<String>,
    /// Inversion window [LO, HI).
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    window: Option<String>,
    /// Party holding the standard clock.
    #[arg(long, value_name = "K")]
    publisher: Option<String>,
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        s.set("parties", self.parties.clone());
        s.set("sets", self.sets.clone());
        s.set("omega", self.omega.clone());
        s.set("omega2", self.omega2.clone());
        s.set("freq-split", self.freq_split.clone());
        s.set("offsets", self.offsets.clone());
        s.set("seed", self.seed.clone());
        s.set("phase-noise", self.phase_noise.clone());
        s.set("basis-misalign", self.basis_misalign.clone());
        s.set("window", self.window.clone());
        s.set("publisher", self.publisher.clone());
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Records,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file [default: stdout]. CSV output gets a `<PATH>.meta.json` sidecar.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes one table. Records start with a `{"metadata": …}` line; CSV puts
/// the metadata in a sidecar file when writing to a path.
fn emit<T, F>(
    path: Option<&Path>,
    format: Format,
    meta: &Value,
    rows: &[T],
    csv: F,
) -> Result<(), CliError>
where
    T: serde::Serialize,
    F: FnOnce(&mut dyn Write, &[T]) -> Result<(), String>,
{
    let mut w = sink(path)?;
    match format {
        Format::Csv => {
            csv(&mut w, rows).map_err(CliError::Failed)?;
            w.flush()?;
            if let Some(p) = path {
                let mut m = create(&sidecar(p))?;
                serde_json::to_writer_pretty(&mut m, meta)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                m.write_all(b"\n")?;
                m.flush()?;
            }
        }
        Format::Records => {
            serde_json::to_writer(&mut w, &json!({ "metadata": meta }))
                .map_err(|e| CliError::Failed(e.to_string()))?;
            w.write_all(b"\n")?;
            write_records(&mut w, rows)?;
        }
    }
    Ok(())
}

fn config_metadata(command: &str, cfg: &ExperimentConfig) -> Value {
    let window = cfg.effective_window();
    let mut meta = serde_json::to_value(RunMetadata::for_config(cfg)).expect("metadata serializes");
    let extra = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "omegas": cfg.omegas.iter().map(|w| w.get()).collect::<Vec<_>>(),
        "freq_split": cfg.freq_split,
        "true_offsets": cfg.true_offsets,
        "window": [window.lo, window.hi],
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    meta
}

fn simulate(
    config: &ConfigArgs,
    output: &OutputArgs,
    bulletin_out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let cfg = config.settings()?.experiment_config()?;
    let (result, board) = run_experiment_with_bulletin(&cfg)?;
    if let Some(p) = bulletin_out {
        let mut w = create(p)?;
        board.export(&mut w)?;
        w.flush()?;
    }
    let meta = config_metadata("simulate", &cfg);
    emit(
        output.out.as_deref(),
        output.format,
        &meta,
        &result.rows,
        |w, rows| write_experiment_csv(w, rows).map_err(|e| e.to_string()),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(
    config: &ConfigArgs,
    output: &OutputArgs,
    axis: Option<String>,
    values: Option<String>,
    trials: Option<String>,
    summary: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let mut s = config.settings()?;
    s.set("axis", axis);
    s.set("values", values);
    s.set("trials", trials);
    let cfg = s.experiment_config()?;
    let axis: SweepAxis = s
        .parse("axis")?
        .ok_or_else(|| CliError::field("axis", "a sweep axis is required"))?;
    let values = s
        .list("values")?
        .ok_or_else(|| CliError::field("values", "sweep values are required"))?;
    let trials = s
        .parse::<usize>("trials")?
        .unwrap_or(SweepSpec::DEFAULT_TRIALS);
    let spec = SweepSpec::new(axis, values, trials)?;
    let rows = run_sweep(&spec, &cfg)?;

    let mut meta = config_metadata("sweep", &cfg);
    if let Value::Object(m) = &mut meta {
        m.insert("axis".into(), json!(spec.axis.as_str()));
        m.insert("values".into(), json!(spec.values));
        m.insert("trials".into(), json!(spec.trials));
    }
    emit(
        output.out.as_deref(),
        output.format,
        &meta,
        &rows,
        |w, rows| write_sweep_csv(w, rows).map_err(|e| e.to_string()),
    )?;
    if let Some(p) = summary {
        let sums = summarize_sweep(&rows);
        emit(Some(p), output.format, &meta, &sums, |w, rows| {
            write_summary_csv(w, rows).map_err(|e| e.to_string())
        })?;
    }
    Ok(ExitCode::SUCCESS)
}

fn estimate(
    config: &ConfigArgs,
    output: &OutputArgs,
    bulletins: Vec<String>,
    receiver: Option<String>,
) -> Result<ExitCode, CliError> {
    let mut s = config.settings()?;
    if !bulletins.is_empty() {
        s.set("bulletin", Some(bulletins.join(",")));
    }
    s.set("receiver", receiver);
    let paths: Vec<String> = s
        .get("bulletin")
        .map(|b| {
            b.split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect()
        })
        .unwrap_or_default();
    if paths.is_empty() {
        return Err(CliError::field(
            "bulletin",
            "at least one bulletin file is required",
        ));
    }
    let board = Bulletin::new();
    for p in &paths {
        let f = File::open(p).map_err(|e| CliError::field("bulletin", format!("{p}: {e}")))?;
        board
            .import_into(BufReader::new(f))
            .map_err(|e| CliError::Failed(format!("{p}: {e}")))?;
    }
    let records = board.sorted_records();
    let offsets_known = s.get("offsets").is_some();
    if s.get("parties").is_none() && !offsets_known {
        let n = records
            .iter()
            .map(|r| r.party + 1)
            .max()
            .unwrap_or(0)
            .max(2);
        s.set("parties", Some(n.to_string()));
    }
    let cfg = s.experiment_config()?;
    let receivers = match s.indices("receiver")? {
        Some(list) => {
            for &r in &list {
                if r >= cfg.n_parties || r == cfg.publisher {
                    return Err(CliError::field(
                        "receiver",
                        format!("{r} is not a receiver among {} parties", cfg.n_parties),
                    ));
                }
            }
            list
        }
        None => {
            let mut ids: Vec<usize> = records
                .iter()
                .map(|r| r.party)
                .filter(|&p| p != cfg.publisher)
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
    };
    let mut rows = receiver_rows(
        &board,
        cfg.n_parties,
        cfg.publisher,
        &receivers,
        &cfg.frequencies(),
        cfg.effective_window(),
    )?;
    if offsets_known {
        for row in &mut rows {
            row.true_delta = Some(cfg.true_delta(row.receiver));
        }
    }
    let window = cfg.effective_window();
    let meta = json!({
        "command": "estimate",
        "version": env!("CARGO_PKG_VERSION"),
        "bulletins": paths,
        "records": board.len(),
        "n_parties": cfg.n_parties,
        "publisher": cfg.publisher,
        "receivers": receivers,
        "omegas": cfg.omegas.iter().map(|w| w.get()).collect::<Vec<_>>(),
        "window": [window.lo, window.hi],
        "notes": ["offset estimates are magnitudes; the sign of the offset is not identifiable"],
    });
    emit(
        output.out.as_deref(),
        output.format,
        &meta,
        &rows,
        |w, rows| write_experiment_csv(w, rows).map_err(|e| e.to_string()),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn validate(
    config: Option<&Path>,
    seed: Option<String>,
    output: &OutputArgs,
    evolution_sign: Option<f64>,
) -> Result<ExitCode, CliError> {
    let mut s = match config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    s.set("seed", seed);
    let mut opts = ValidationOptions::default();
    if let Some(seed) = s.parse::<u64>("seed")? {
        opts.seed = seed;
    }
    if let Some(sign) = evolution_sign {
        opts.evolution_sign = sign;
    }
    let report = validate_with(&opts);
    let failures: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let meta = json!({
        "command": "validate",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": opts.seed,
        "oracle_cases": opts.oracle_cases,
        "checks": report.checks.len(),
        "failures": failures.len(),
    });
    emit(
        output.out.as_deref(),
        output.format,
        &meta,
        &report.checks,
        |w, rows| write_checks_csv(w, rows).map_err(|e| e.to_string()),
    )?;
    eprintln!(
        "validate: {}/{} checks passed",
        report.checks.len() - failures.len(),
        report.checks.len()
    );
    for c in report.failures() {
        eprintln!(
            "  FAIL {}: observed {:e}, expected {:e}",
            c.name, c.observed, c.expected
        );
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate {
            config,
            output,
            bulletin_out,
        } => simulate(&config, &output, bulletin_out.as_deref()),
        Command::Sweep {
            config,
            output,
            axis,
            values,
            trials,
            summary,
        } => sweep(&config, &output, axis, values, trials, summary.as_deref()),
        Command::Estimate {
            config,
            output,
            bulletin,
            receiver,
        } => estimate(&config, &output, bulletin, receiver),
        Command::Validate {
            config,
            seed,
            output,
            evolution_sign,
        } => validate(config.as_deref(), seed, &output, evolution_sign),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qsync: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
