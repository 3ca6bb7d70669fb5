use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dilution_cli::scenarios::{self, Target};
use dilution_cli::{CliError, Format, ScenarioReport, EXIT_NUMERICAL};
use dilution_core::interchange::write_operator;
use dilution_core::synthesis::{DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "dilution", version, about = "Catalytic entanglement dilution scenarios")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// text, csv, or json (alias json-like-keyvalue).
    #[arg(long, global = true, default_value = "text")]
    format: Format,
    /// Seed for every randomized check; reports are deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Logarithmic negativity, binegativity gates and the catalytic gap for
    /// ½Φ_d + ½𝟙/d² and its broadcast.
    WernerExample {
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Work-cost sweep over (1−q)|0⟩⟨0| + qγ and the thermodynamic gap.
    ThermoExample {
        #[arg(long, default_value_t = 0.25)]
        p: f64,
        #[arg(long, default_value_t = 11)]
        q_grid: usize,
    },
    /// Symmetry-reduced D_max to the PPT set against L_N.
    DmaxPpt {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        lam: f64,
    },
    /// Searches for a PPT map taking Φ₂^⊗m to a target state.
    Synthesize {
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// phi-d, noisy-phi-d or broadcast-d.
        #[arg(long, conflicts_with = "target_file", required_unless_present = "target_file")]
        target: Option<String>,
        /// Target state in the interchange format.
        #[arg(long)]
        target_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Writes the feasible Choi operator here on success.
        #[arg(long)]
        choi_out: Option<PathBuf>,
    },
    /// Checks that every marginal copy of `mu` equals `rho`.
    VerifyBroadcast {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Runs the swap protocol with catalyst ρ^⊗n.
    Protocol {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Prints a named state as an interchange document.
    State {
        /// phi-d, noisy-phi-d or broadcast-d.
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<Option<ScenarioReport>, CliError> {
    let report = match cli.command {
        Command::WernerExample { d } => scenarios::cmd_werner_example(d)?,
        Command::ThermoExample { p, q_grid } => scenarios::cmd_thermo_example(p, q_grid)?,
        Command::DmaxPpt { d, lam } => scenarios::cmd_dmax_ppt(d, lam)?,
        Command::Synthesize {
            m,
            target,
            target_file,
            tol,
            max_iter,
            choi_out,
        } => {
            let target = match (&target, &target_file) {
                (Some(name), _) => Target::Named(name),
                (None, Some(path)) => Target::File(path),
                (None, None) => return Err(CliError::Usage("--target or --target-file is required".into())),
            };
            let run = scenarios::cmd_synthesize(m, target, tol, max_iter)?;
            if let (Some(path), Some(doc)) = (&choi_out, &run.choi_document) {
                write_file(path, doc)?;
            }
            run.report
        }
        Command::VerifyBroadcast { mu, rho, n } => scenarios::cmd_verify_broadcast(&mu, &rho, n, cli.common.seed)?,
        Command::Protocol { d, n } => scenarios::cmd_protocol(d, n)?,
        Command::State { name, out } => {
            let doc = write_operator(scenarios::named_state(&name)?.as_op()) + "\n";
            match out {
                Some(path) => write_file(&path, &doc)?,
                None => print!("{doc}"),
            }
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.common.format;
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            print!("{}", report.render(format));
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("numerical failure: {}", report.failed_flags().join(", "));
                for q in &report.results {
                    eprintln!("  {} = {} (tol {})", q.name, q.value, q.tol);
                }
                ExitCode::from(EXIT_NUMERICAL as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
