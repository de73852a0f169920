//! `compfade`: evaluate composite fading densities, reproduce the figure
//! parameter sets, sample, and run the self-validation suite.
//!
//! Exit status: 0 success, 1 check or numerical failure, 2 usage or
//! parameter error.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compfade::mc::DEFAULT_PARTITIONS;

mod commands;
mod output;
mod settings;

use settings::Shared;

#[derive(Debug, Parser)]
#[command(
    name = "compfade",
    version,
    about = "Composite multipath/shadowing fading distributions",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a density on a grid
    Pdf(CurveArgs),
    /// Tabulate a cdf on a grid (composites by quadrature of the density)
    Cdf(CurveArgs),
    /// Compare closed-form and quadrature moments of the α-κ-μ envelope
    Moments(MomentArgs),
    /// Write the curve family of figure 1 to 4, one file per curve
    Figure(FigureArgs),
    /// Draw samples and compare them with the density
    Sample(SampleArgs),
    /// Run the validation suite and print a JSON report
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args)]
struct MomentArgs {
    /// Moment orders
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,1,2,3,4",
        allow_negative_numbers = true
    )]
    orders: Vec<f64>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// Figure number
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    id: u8,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Where to write the goodness-of-fit report [default: stderr]
    #[arg(long)]
    report: Option<PathBuf>,
    /// Number of independent random streams
    #[arg(long, default_value_t = DEFAULT_PARTITIONS)]
    partitions: usize,
    /// Skip the goodness-of-fit comparison
    #[arg(long)]
    no_gof: bool,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Fault {
    /// Flip the sign of the kernel's power argument
    KernelSign,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "quick")]
    level: LevelArg,
    /// Run the suite against a deliberately broken kernel
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters: exit status 2.
    Usage(String),
    /// A failed check or numerical failure: exit status 1.
    Failure(String),
    /// The reader went away (`compfade pdf ... | head`); exit quietly.
    Closed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Failure(_) => 1,
            Self::Closed => 0,
        }
    }
}

impl From<compfade::Error> for CliError {
    fn from(e: compfade::Error) -> Self {
        use compfade::Error::*;
        match e {
            Domain { .. } | Singular(_) | Invalid(_) => Self::Usage(e.to_string()),
            _ => Self::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Self::Closed;
        }
        Self::Failure(format!("i/o: {e}"))
    }
}

/// Where diagnostics go, and whether they are colored.
pub struct Diagnostics<'a> {
    pub sink: &'a mut dyn Write,
    pub color: bool,
}

impl Diagnostics<'_> {
    fn emit(&mut self, label: &str, ansi: &str, msg: &str) {
        let _ = if self.color {
            writeln!(self.sink, "\x1b[1;{ansi}m{label}:\x1b[0m {msg}")
        } else {
            writeln!(self.sink, "{label}: {msg}")
        };
    }

    pub fn error(&mut self, msg: &str) {
        self.emit("error", "31", msg);
    }

    pub fn warning(&mut self, msg: &str) {
        self.emit("warning", "33", msg);
    }

    pub fn note(&mut self, msg: &str) {
        let _ = writeln!(self.sink, "{msg}");
    }
}

/// Parses `args` and runs the command; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, diag: &mut Diagnostics) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = if diag.color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let _ = if e.use_stderr() {
                write!(diag.sink, "{text}")
            } else {
                write!(out, "{text}")
            };
            return e.exit_code() as u8;
        }
    };
    let result = match cli.command {
        Command::Pdf(a) => commands::curve(a.shared, compfade::curves::Quantity::Pdf, out, diag),
        Command::Cdf(a) => commands::curve(a.shared, compfade::curves::Quantity::Cdf, out, diag),
        Command::Moments(a) => commands::moments(a.shared, &a.orders, out, diag),
        Command::Figure(a) => commands::figure(a.shared, a.id, out, diag),
        Command::Sample(a) => {
            commands::sample(a.shared, a.partitions, a.report, !a.no_gof, out, diag)
        }
        Command::Validate(a) => commands::validate(a.shared, a.level, a.inject_fault, out, diag),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Closed) => 0,
        Err(e) => {
            if let CliError::Usage(msg) | CliError::Failure(msg) = &e {
                diag.error(msg);
            }
            e.code()
        }
    }
}

fn main() -> ExitCode {
    let stderr = std::io::stderr();
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && stderr.is_terminal();
    let mut err = stderr.lock();
    let mut diag = Diagnostics {
        sink: &mut err,
        color,
    };
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut diag,
    );
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn run_capture(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = {
            let mut diag = Diagnostics {
                sink: &mut err,
                color: false,
            };
            run(
                std::iter::once("compfade").chain(args.iter().copied()),
                &mut out,
                &mut diag,
            )
        };
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["figure", "5"]).0, 2);
        assert_eq!(run_capture(&["pdf", "--model", "nope"]).0, 2);
        let (code, _, err) = run_capture(&["pdf", "--model", "akm-gamma", "--alpha", "2"]);
        assert_eq!(code, 2);
        assert!(err.contains("--kappa"), "{err}");
        let (code, _, err) = run_capture(&["pdf", "--model", "am", "--alpha", "-1", "--mu", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn help_exits_0_on_stdout() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("validate"));
    }

    #[test]
    fn diagnostics_are_plain_without_color() {
        let (_, _, err) = run_capture(&["pdf"]);
        assert!(err.starts_with("error: --model is required"), "{err}");
        assert!(!err.contains('\x1b'));
    }
}
