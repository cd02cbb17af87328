//! `chq`: consistent-histories engine front end.
//!
//! Runs built-in experiments (`demo`) or scenario files (`check`,
//! `probs`, `causes`, `compare`) and prints one report per run, as text
//! or as stable JSON (`--json`).
//!
//! Exit codes: 0 success, 1 the family a query needs is inconsistent,
//! 2 scenario file errors, 3 usage errors. Failures put one
//! machine-greppable reason line on stderr (`parse-error <line>:<col>:
//! ...`, `inconsistent-family max_offdiag=...`, `usage-error ...`).

mod demos;
mod files;
mod report;

use chq_core::{MzIntermediate, SpinIntermediate, Tolerance, DEFAULT_THRESHOLD};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use report::{print_report, run_item, CmdError, WorkItem};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chq", version, about = "Consistent-histories engine")]
struct Cli {
    /// Consistency tolerance (0 < eps < 1e-3).
    #[arg(long, global = true, default_value_t = 1e-9)]
    eps: f64,

    /// Conditional-probability threshold for cause verdicts.
    #[arg(long, global = true, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,

    /// Print the report as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Opaque run identifier echoed into the report.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in experiment.
    Demo {
        #[command(subcommand)]
        scenario: DemoScenario,
    },
    /// Parse a scenario file and report whether its family is consistent.
    Check { file: PathBuf },
    /// Print the history probability table of a scenario file.
    Probs { file: PathBuf },
    /// Run the cause and common-cause queries of a scenario file.
    Causes { file: PathBuf },
    /// Run the compare queries of a scenario file against its intervened
    /// family.
    Compare { file: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MzQuestion {
    /// Ask nothing between the splitters.
    Trivial,
    /// Ask which arm carries the photon.
    #[value(name = "which_path")]
    WhichPath,
    /// Ask for the coherent arm combinations.
    Superposition,
}

impl From<MzQuestion> for MzIntermediate {
    fn from(q: MzQuestion) -> Self {
        match q {
            MzQuestion::Trivial => MzIntermediate::Trivial,
            MzQuestion::WhichPath => MzIntermediate::WhichPath,
            MzQuestion::Superposition => MzIntermediate::Superposition,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpinQuestion {
    /// Ask nothing between preparation and readout.
    Trivial,
    /// Ask for the spin component along the preparation axis.
    #[value(name = "along_prep")]
    AlongPrep,
    /// Ask for the spin component along the measurement axis.
    #[value(name = "along_measure")]
    AlongMeasure,
}

impl From<SpinQuestion> for SpinIntermediate {
    fn from(q: SpinQuestion) -> Self {
        match q {
            SpinQuestion::Trivial => SpinIntermediate::Trivial,
            SpinQuestion::AlongPrep => SpinIntermediate::AlongPrep,
            SpinQuestion::AlongMeasure => SpinIntermediate::AlongMeasure,
        }
    }
}

#[derive(Subcommand)]
enum DemoScenario {
    /// Photon split over two paths onto two detectors.
    Beamsplitter {
        /// Amplitude on path a.
        #[arg(long, default_value = "1/sqrt2")]
        alpha: String,
        /// Amplitude on path b.
        #[arg(long, default_value = "1/sqrt2")]
        beta: String,
        /// Absorb path a instead of detecting it.
        #[arg(long)]
        block_a: bool,
        /// Redirect path a to an extra detector.
        #[arg(long)]
        mirror: bool,
    },
    /// Two-arm interferometer with optional output splitter.
    MachZehnder {
        /// Install the recombining splitter.
        #[arg(long)]
        bs2: bool,
        /// Phase on arm a.
        #[arg(long, default_value = "0")]
        phi_a: String,
        /// Phase on arm b.
        #[arg(long, default_value = "0")]
        phi_b: String,
        /// Block arm a.
        #[arg(long)]
        block_a: bool,
        /// Block arm b.
        #[arg(long)]
        block_b: bool,
        /// Question asked between the splitters.
        #[arg(long, value_enum, default_value_t = MzQuestion::Trivial)]
        intermediate: MzQuestion,
    },
    /// Spin-half particle prepared along one axis, read along another.
    SpinHalf {
        /// Preparation axis.
        #[arg(long, default_value = "x")]
        prep: String,
        /// Measurement axis.
        #[arg(long, default_value = "z")]
        measure: String,
        /// Question asked between preparation and readout.
        #[arg(long, value_enum, default_value_t = SpinQuestion::AlongMeasure)]
        intermediate: SpinQuestion,
    },
    /// Singlet pair read out at two stations.
    Eprb {
        /// Measurement axis at station a.
        #[arg(long, default_value = "z")]
        alice: String,
        /// Measurement axis at station b.
        #[arg(long, default_value = "z")]
        bob: String,
        /// Axis of an extra rotation on particle b before readout.
        #[arg(long)]
        intervene_axis: Option<String>,
        /// Angle of that rotation.
        #[arg(long)]
        intervene_angle: Option<String>,
    },
    /// Classical relay: Charlie's bit is copied to Alice and Bob.
    Charlie {
        /// Compare against a relay where Bob receives the inverted bit.
        #[arg(long)]
        flip_bob: bool,
    },
}

fn build_work_item(command: &Command, tol: Tolerance) -> Result<WorkItem, CmdError> {
    match command {
        Command::Demo { scenario } => match scenario {
            DemoScenario::Beamsplitter {
                alpha,
                beta,
                block_a,
                mirror,
            } => demos::beamsplitter(alpha, beta, *block_a, *mirror, tol),
            DemoScenario::MachZehnder {
                bs2,
                phi_a,
                phi_b,
                block_a,
                block_b,
                intermediate,
            } => demos::mach_zehnder(
                *bs2,
                phi_a,
                phi_b,
                *block_a,
                *block_b,
                (*intermediate).into(),
                tol,
            ),
            DemoScenario::SpinHalf {
                prep,
                measure,
                intermediate,
            } => demos::spin_half(prep, measure, (*intermediate).into(), tol),
            DemoScenario::Eprb {
                alice,
                bob,
                intervene_axis,
                intervene_angle,
            } => demos::eprb(
                alice,
                bob,
                intervene_axis.as_deref(),
                intervene_angle.as_deref(),
                tol,
            ),
            DemoScenario::Charlie { flip_bob } => demos::charlie(*flip_bob, tol),
        },
        Command::Check { file } => files::check(file, tol),
        Command::Probs { file } => files::probs(file, tol),
        Command::Causes { file } => files::causes(file, tol),
        Command::Compare { file } => files::compare(file, tol),
    }
}

fn run(cli: &Cli) -> Result<u8, CmdError> {
    let tol = Tolerance::new(cli.eps).map_err(|e| CmdError::Usage(e.to_string()))?;
    if !(cli.threshold > 0.0 && cli.threshold <= 1.0) {
        return Err(CmdError::Usage(format!(
            "--threshold {} must be in (0, 1]",
            cli.threshold
        )));
    }
    let item = build_work_item(&cli.command, tol)?;
    let (report, failure) = run_item(&item, tol, cli.threshold, cli.seed)?;
    print_report(&report, cli.json);
    match failure {
        Some(max_offdiag) => {
            eprintln!("inconsistent-family max_offdiag={max_offdiag:e}");
            Ok(1)
        }
        None => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => ExitCode::from(e.emit()),
    }
}
