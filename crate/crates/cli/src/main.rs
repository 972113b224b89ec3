//! `ptq-sim`: spectra, exceptional points, entanglement, dynamics and sensing
//! of the PT-symmetric two-qubit Ising model, written as CSV or JSON.

mod commands;
mod output;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use commands::{Command, Figure, Flags, Format, RunConfig};
use ptq_core::{Error, Kappa};

#[derive(Parser, Debug)]
#[command(name = "ptq-sim", version, about = "PT-symmetric two-qubit Ising model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Eigenvalues and eigenvectors (or eigenvalues along a sweep).
    Spectrum,
    /// Locate the exceptional point on a one-parameter slice.
    EpLocate,
    /// Exceptional-point curve J_c(omega) over --sweep-range.
    EpCurve,
    /// Concurrence of the eigenstates Psi3 and Psi4.
    Concurrence,
    /// Time evolution from (sin theta|0> + cos theta|1>)|0>.
    Evolve,
    /// Collapse-revival times of the concurrence.
    Revivals,
    /// Quantum Fisher information of the Psi3 eigenstate.
    Qfi,
    /// QFI together with the sigma_x coherence-measurement sensitivity.
    Sense,
    /// Regenerate the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5a,
    Fig5b,
    Fig6a,
    Fig6b,
    Fig7a,
    Fig7b,
    Fig8a,
    Fig8b,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    J,
    Omega,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Opts {
    /// Transverse field Omega (units of gamma).
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = finite)]
    omega: Option<f64>,
    /// Ising coupling J (units of gamma).
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = finite)]
    j: Option<f64>,
    /// Gain/loss rate.
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true, value_parser = finite)]
    gamma: f64,
    /// Initial-state angle theta [default: pi/2, i.e. |00>].
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = finite)]
    theta: Option<f64>,
    /// Final time [default: 40 for evolve, 2000 for revivals].
    #[arg(long, global = true, value_parser = finite)]
    tmax: Option<f64>,
    /// Integration step [default: 1e-3].
    #[arg(long, global = true, value_parser = finite)]
    dt: Option<f64>,
    /// Record every k-th step [default: 1 for evolve, 100 for revivals].
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Swept (or, for ep-locate, solved-for) parameter [default: j].
    #[arg(long, global = true, value_enum)]
    sweep_axis: Option<AxisArg>,
    /// Sweep range or bracket `a:b`.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = range)]
    sweep_range: Option<(f64, f64)>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format [default: from --out extension, else csv].
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} is not finite"))
    }
}

fn range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s}"))?;
    Ok((finite(a)?, finite(b)?))
}

impl Cli {
    fn into_config(self) -> ptq_core::Result<RunConfig> {
        let command = match self.command {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::EpLocate => Command::EpLocate,
            Cmd::EpCurve => Command::EpCurve,
            Cmd::Concurrence => Command::Concurrence,
            Cmd::Evolve => Command::Evolve,
            Cmd::Revivals => Command::Revivals,
            Cmd::Qfi => Command::Qfi,
            Cmd::Sense => Command::Sense,
            Cmd::Reproduce { figure } => Command::Reproduce(match figure {
                FigureArg::Fig2 => Figure::Fig2,
                FigureArg::Fig3a => Figure::Fig3a,
                FigureArg::Fig3b => Figure::Fig3b,
                FigureArg::Fig4 => Figure::Fig4,
                FigureArg::Fig5a => Figure::Fig5a,
                FigureArg::Fig5b => Figure::Fig5b,
                FigureArg::Fig6a => Figure::Fig6a,
                FigureArg::Fig6b => Figure::Fig6b,
                FigureArg::Fig7a => Figure::Fig7a,
                FigureArg::Fig7b => Figure::Fig7b,
                FigureArg::Fig8a => Figure::Fig8a,
                FigureArg::Fig8b => Figure::Fig8b,
            }),
        };
        let o = self.opts;
        let flags = Flags {
            omega: o.omega,
            j: o.j,
            gamma: o.gamma,
            theta: o.theta,
            tmax: o.tmax,
            dt: o.dt,
            stride: o.stride,
            sweep_axis: o.sweep_axis.map(|a| match a {
                AxisArg::J => Kappa::J,
                AxisArg::Omega => Kappa::Omega,
            }),
            sweep_range: o.sweep_range,
            n: o.n,
            out: o.out,
            format: o.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            }),
        };
        RunConfig::resolve(command, flags)
    }
}

/// Structured error on stderr; returns the matching exit code.
fn fail(err: &Error) -> ExitCode {
    let code: u8 = if err.is_numerical() { 3 } else { 2 };
    let report = json!({ "level": "error", "error": err.kind(), "message": err.to_string(), "exit_code": code });
    eprintln!("{report}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    let cfg = match cli.into_config() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    // Open the destination first so an unwritable path fails before any work.
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(&Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        },
        None => Box::new(std::io::stdout().lock()),
    };
    let data = match commands::run(&cfg) {
        Ok(d) => d,
        Err(e) => {
            drop(sink);
            if let Some(path) = &cfg.out {
                let _ = std::fs::remove_file(path);
            }
            return fail(&e);
        }
    };
    for d in &data.diagnostics {
        eprintln!("{d}");
    }
    let text = match cfg.format {
        Format::Csv => data.to_csv(),
        Format::Json => data.to_json(),
    };
    match sink.write_all(text.as_bytes()).and_then(|_| sink.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (e.g. `| head`) is not an error.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => fail(&Error::InvalidArgument(format!("write failed: {e}"))),
    }
}

