mod experiment;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rpna::identify::Base;
use rpna::model::Model;
use rpna::nullspace::analyze;
use rpna::regressor::{agreement, empirical_nullspace, ExecPolicy, SampleMode, DEFAULT_SEED};
use rpna::RpnaOptions;

use report::Report;

#[derive(Parser)]
#[command(
    name = "rpna",
    version,
    about = "Structural identifiability of rigid-body inertial parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every inertial parameter of a mechanism.
    Analyze {
        /// `builtin:<name>`, a JSON model or a URDF file.
        model: String,
        #[command(flatten)]
        analysis: AnalysisFlags,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Use Y/N/* instead of ✓/✗/★.
        #[arg(long)]
        ascii: bool,
    },
    /// Check the structural nullspace against a sampled regressor.
    Verify {
        model: String,
        #[command(flatten)]
        analysis: AnalysisFlags,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, env = "RPNA_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Largest accepted principal angle in radians.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Evaluate samples on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Identify a leg on fixed-base or floating-base data and validate on
    /// the other.
    Identify {
        /// Fixed-base leg; it is mounted on a floating trunk for the
        /// floating data set.
        #[arg(default_value = "builtin:cheetah3_leg_fixed")]
        model: String,
        /// Data set used for identification (all pairings if omitted).
        #[arg(long, value_parser = parse_base)]
        experiment: Option<Base>,
        /// Data set used for validation (both if omitted).
        #[arg(long, value_parser = parse_base)]
        validate: Option<Base>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, env = "RPNA_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write both simulated trajectories as JSON into this directory.
        #[arg(long)]
        save_data: Option<PathBuf>,
    },
    /// Render a JSON report from `analyze --format json` as a table.
    Render {
        /// Report file, or `-` for stdin.
        report: PathBuf,
        #[arg(long)]
        ascii: bool,
    },
}

#[derive(Args, Clone, Copy)]
struct AnalysisFlags {
    /// Analyze without gravity.
    #[arg(long)]
    no_gravity: bool,
    /// Only static (gravity) experiments.
    #[arg(long = "static")]
    static_only: bool,
    /// Give each geared rotor its own parameter.
    #[arg(long)]
    rotors: bool,
}

impl AnalysisFlags {
    fn options(self) -> RpnaOptions {
        RpnaOptions {
            gravity: !self.no_gravity,
            static_only: self.static_only,
            include_rotors: self.rotors,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

fn parse_base(s: &str) -> Result<Base, String> {
    s.parse().map_err(|e: rpna::Error| e.to_string())
}

/// Exit code 2: the input could not be used.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(spec: &str) -> Result<Model, Failure> {
    Model::load(spec).map_err(|e| Failure(format!("{spec}: {e}")))
}

fn run(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Analyze {
            model,
            analysis,
            format,
            ascii,
        } => {
            let m = load(&model)?;
            let r = Report::build(&m, &analysis.options())?;
            print!(
                "{}",
                if format == Format::Json {
                    r.render_json()
                } else {
                    r.render_table(ascii)
                }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            model,
            analysis,
            samples,
            seed,
            tol,
            sequential,
        } => {
            let policy = if sequential {
                ExecPolicy::Sequential
            } else {
                ExecPolicy::Parallel
            };
            verify(
                &load(&model)?,
                analysis.options(),
                samples,
                seed,
                tol,
                policy,
            )
        }
        Command::Identify {
            model,
            experiment,
            validate,
            samples,
            seed,
            format,
            save_data,
        } => {
            let m = load(&model)?;
            let out =
                experiment::run(m, experiment, validate, samples, seed, save_data.as_deref())?;
            print!(
                "{}",
                if format == Format::Json {
                    out.render_json()
                } else {
                    out.render_table()
                }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { report, ascii } => {
            let text = if report.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())?
            } else {
                std::fs::read_to_string(&report)?
            };
            let r: Report = serde_json::from_str(&text)?;
            print!("{}", r.render_table(ascii));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verify(
    model: &Model,
    opts: RpnaOptions,
    samples: usize,
    seed: u64,
    tol: f64,
    policy: ExecPolicy,
) -> Result<ExitCode, Failure> {
    opts.validate()?;
    let (_, ns) = analyze(model, &opts)?;

    // the sampled model has exactly the effects the analysis accounts for
    let mut sampled = if opts.include_rotors {
        model.clone()
    } else {
        model.without_rotors()
    };
    if !opts.gravity {
        sampled.gravity *= 0.0;
    }
    let mode = if opts.static_only {
        SampleMode::Static
    } else {
        SampleMode::Torque
    };
    let emp = empirical_nullspace(&sampled, samples, seed, mode, policy)?;
    let g = agreement(&ns.orthonormal_basis(), &emp.basis);

    println!("model: {}", model.name);
    println!("samples: {samples}  seed: {seed}");
    println!(
        "nullity: structural {}, sampled {}",
        g.structural_nullity, g.sampled_nullity
    );
    println!("largest principal angle: {:.3e} (tol {tol:.1e})", g.angle);
    if g.passes(tol) {
        println!("PASS");
        return Ok(ExitCode::SUCCESS);
    }
    println!("FAIL");
    let which = if g.worst_is_structural {
        "structurally unidentifiable but excited by the samples"
    } else {
        "unexcited by the samples but structurally identifiable"
    };
    println!("disagreeing direction ({which}):");
    let mut terms: Vec<(usize, f64)> = g.worst.iter().copied().enumerate().collect();
    terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    for (c, v) in terms.into_iter().take(6).filter(|t| t.1.abs() > 1e-3) {
        println!("  {:+.4} {}", v, ns.param_label(c));
    }
    Ok(ExitCode::from(1))
}
