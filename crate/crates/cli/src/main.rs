use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hspec::{run, CliError, Command, RunConfig};
use hspec_core::filtser::{SeriesId, DEFAULT_WINDOW_BUDGET};
use hspec_core::hdim::Mode;
use hspec_core::suites::{Suite, DEFAULT_SAMPLES};

#[derive(Parser)]
#[command(name = "hspec", version, about = "Exact finite-level computations for the Hausdorff spectrum")]
struct Cli {
    /// Largest window W any computation may use
    #[arg(long, global = true, env = "HSPEC_WINDOW_BUDGET", default_value_t = DEFAULT_WINDOW_BUDGET)]
    window_budget: u32,
    /// Seed for randomized suites
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the CSV table here (series, hdim)
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Raw,
    Delta,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Raw => Mode::Raw,
            ModeArg::Delta => Mode::Delta,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Oracle,
    Identities,
    Filtrations,
    Appendix,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Oracle => Suite::Oracle,
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Filtrations => Suite::Filtrations,
            SuiteArg::Appendix => Suite::Appendix,
        }
    }
}

fn series_arg(s: &str) -> Result<SeriesId, String> {
    SeriesId::parse(s).ok_or_else(|| format!("unknown series '{s}' (expected one of L, D, M, P, I, F)"))
}

#[derive(Clone, Subcommand)]
enum Cmd {
    /// Order, class and series lengths of the finite quotient G_k
    QuotientInfo {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: u32,
    },
    /// Per-level codimensions and markers of a filtration (CSV)
    Series {
        #[arg(long)]
        p: u32,
        /// one or more of L, D, M, P, I, F (comma separated)
        #[arg(long, value_delimiter = ',', value_parser = series_arg, required = true)]
        series: Vec<SeriesId>,
        #[arg(long)]
        max_level: u32,
    },
    /// Density sequence of a finitely generated subgroup along a filtration
    Hdim {
        #[arg(long)]
        p: u32,
        #[arg(long, value_delimiter = ',', value_parser = series_arg, required = true)]
        series: Vec<SeriesId>,
        /// generators separated by ';', e.g. "x^2; y"
        #[arg(long)]
        gens: String,
        #[arg(long)]
        horizon: u32,
        #[arg(long, value_enum, default_value = "raw")]
        mode: ModeArg,
        /// flag reports whose tail gap exceeds this
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Densities of the witnesses ⟨x^{p^l}, c_1, …, c_d⟩ for l ≤ lmax
    Spectrum {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        lmax: u32,
        #[arg(long, value_parser = series_arg, default_value = "M")]
        series: SeriesId,
        #[arg(long, default_value_t = 7)]
        horizon: u32,
        #[arg(long, value_enum, default_value = "raw")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
    },
    /// Run a verification suite; exits 4 if any check fails
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
}

fn command(c: Cmd) -> Command {
    match c {
        Cmd::QuotientInfo { p, k } => Command::QuotientInfo { p, k },
        Cmd::Series { p, series, max_level } => Command::Series { p, series, max_level },
        Cmd::Hdim { p, series, gens, horizon, mode, tolerance } => {
            Command::Hdim { p, series, gens, horizon, mode: mode.into(), tolerance }
        }
        Cmd::Spectrum { p, lmax, series, horizon, mode, tolerance } => {
            Command::Spectrum { p, lmax, series, horizon, mode: mode.into(), tolerance }
        }
        Cmd::Verify { suite, samples } => Command::Verify { suite: suite.into(), samples },
    }
}

fn emit(cli: &Cli, is_table: bool, out: &hspec::Output) -> Result<(), CliError> {
    if let Some(j) = &out.json {
        let text = serde_json::to_string_pretty(j).expect("serializable") + "\n";
        match &cli.out {
            Some(path) => fs::write(path, text)?,
            // tables go to stdout as CSV unless a JSON file was asked for
            None if is_table && cli.csv.is_none() => {}
            None => print!("{text}"),
        }
    }
    if let Some(c) = &out.csv {
        match &cli.csv {
            Some(path) => fs::write(path, c)?,
            None if is_table => print!("{c}"),
            None => {}
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = RunConfig { window_budget: cli.window_budget, seed: cli.seed };
    let is_table = matches!(cli.cmd, Cmd::Series { .. });
    let cmd = command(cli.cmd.clone());
    let result = run(&cmd, &cfg).and_then(|out| emit(&cli, is_table, &out).map(|_| out.failed));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(4),
        Err(e) => {
            eprintln!("hspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
