//! Command-line front end: `run`, `plot`, `validate`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::metrics::{compute_metrics, MetricsConfig, RunMetrics};
use crate::plot::emit_plot_script;
use crate::scenario_file::parse_scenario;
use crate::sim::{run_with, SimOptions};
use crate::trace_csv::{read_header, write_trace};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad command line (clap's own code).
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    /// Scenario file failed to parse or validate.
    pub const SCENARIO: i32 = 4;
    pub const DIVERGENCE: i32 = 5;
    pub const CCM_VIOLATION: i32 = 6;
    /// Trace CSV given to `plot` is malformed.
    pub const FORMAT: i32 = 7;
}

#[derive(Debug, Parser)]
#[command(
    name = "buckshare",
    version,
    about = "Simulate two parallel buck converters under backstepping voltage and current-sharing control"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario, optionally write the trace CSV, print metrics.
    Run {
        scenario: PathBuf,
        /// Trace CSV output path.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Override the integration step (s).
        #[arg(long)]
        dt: Option<f64>,
        /// Override the end time (s).
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Override the recording interval (steps).
        #[arg(long = "record-every")]
        record_every: Option<usize>,
    },
    /// Emit a gnuplot script for a trace CSV.
    Plot {
        csv: PathBuf,
        /// Script output path (stdout if omitted).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Parse and validate a scenario, then print its canonical form.
    Validate { scenario: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new(exit::IO, format!("{}: {err}", path.display()))
    }
}

fn sim_failure(err: &Error) -> Failure {
    let code = match err {
        Error::Divergence { .. } => exit::DIVERGENCE,
        Error::CcmViolation { .. } => exit::CCM_VIOLATION,
        _ => exit::SCENARIO,
    };
    Failure::new(code, err.to_string())
}

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let rendered = e.render().to_string();
            let _ = if code == exit::OK {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => exit::OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            scenario,
            output,
            dt,
            t_end,
            record_every,
        } => run_command(&scenario, output.as_deref(), dt, t_end, record_every, out),
        Command::Plot { csv, output } => plot_command(&csv, output.as_deref(), out),
        Command::Validate { scenario } => {
            let file = load_scenario(&scenario)?;
            out.write_all(file.to_text().as_bytes())
                .map_err(|e| Failure::new(exit::IO, e.to_string()))
        }
    }
}

fn load_scenario(path: &Path) -> Result<crate::scenario_file::ScenarioFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_scenario(&text).map_err(|e| Failure::new(exit::SCENARIO, format!("{}: {e}", path.display())))
}

fn run_command(
    path: &Path,
    csv_out: Option<&Path>,
    dt: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let mut file = load_scenario(path)?;
    if let Some(dt) = dt {
        file.dt_s = dt;
    }
    if let Some(t) = t_end {
        file.t_end_s = t;
    }
    if let Some(n) = record_every {
        if n == 0 {
            return Err(Failure::new(exit::SCENARIO, "--record-every must be >= 1"));
        }
        file.record_every = n;
    }
    let scenario = file
        .to_scenario()
        .map_err(|e| Failure::new(exit::SCENARIO, e.to_string()))?;

    let outcome = run_with(&scenario, &SimOptions::new(file.record_every));
    if let Some(csv_path) = csv_out {
        let f = File::create(csv_path).map_err(|e| Failure::io(csv_path, e))?;
        write_trace(BufWriter::new(f), &outcome.trace)
            .map_err(|e| Failure::new(exit::IO, format!("{}: {e}", csv_path.display())))?;
    }
    if let Some(e) = &outcome.error {
        return Err(sim_failure(e));
    }

    let metrics = compute_metrics(&outcome.trace, scenario.vref, &MetricsConfig::default())
        .map_err(|e| Failure::new(exit::SCENARIO, e.to_string()))?;
    write_summary(out, path, outcome.trace.len(), &metrics)
        .map_err(|e| Failure::new(exit::IO, e.to_string()))
}

fn write_summary(
    out: &mut dyn Write,
    path: &Path,
    records: usize,
    m: &RunMetrics,
) -> std::io::Result<()> {
    let time = |t: Option<f64>| match t {
        Some(t) => format!("{t:.6} s"),
        None => "not settled".to_string(),
    };
    let rows = [
        ("scenario", path.display().to_string()),
        ("records", records.to_string()),
        ("settle_time_v", time(m.settle_time_v)),
        ("settle_time_share", time(m.settle_time_share)),
        ("ss_voltage_error", format!("{:.6e} V", m.ss_voltage_error)),
        ("ss_sharing_error", format!("{:.6e}", m.ss_sharing_error)),
        (
            "recovery_time",
            match m.recovery_time {
                Some(t) => format!("{t:.6} s"),
                None => "n/a".to_string(),
            },
        ),
        (
            "lyap_violation_fraction",
            format!("{:.4} ({} pairs)", m.lyap_violation_fraction, m.lyap_pairs),
        ),
        (
            "max_duty_saturation_time",
            format!("{:.6} s", m.max_duty_saturation_time),
        ),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        writeln!(out, "{k:<width$} : {v}")?;
    }
    Ok(())
}

fn plot_command(csv: &Path, script_out: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let f = File::open(csv).map_err(|e| Failure::io(csv, e))?;
    let header = read_header(f)
        .map_err(|e| Failure::new(exit::FORMAT, format!("{}: {e}", csv.display())))?;
    let script = emit_plot_script(&csv.to_string_lossy(), &header)
        .map_err(|e| Failure::new(exit::FORMAT, format!("{}: {e}", csv.display())))?;
    match script_out {
        Some(p) => std::fs::write(p, script).map_err(|e| Failure::io(p, e)),
        None => out
            .write_all(script.as_bytes())
            .map_err(|e| Failure::new(exit::IO, e.to_string())),
    }
}
