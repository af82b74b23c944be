use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pspin_core::cole_hopf::DEFAULT_GRID;
use pspin_core::critical::{solve_boundary, BoundarySolution, CriticalError};
use pspin_core::lemmas::{verify_lemmas, DEFAULT_P_LIST};
use pspin_core::model::ModelSpec;
use pspin_core::phase::{phase_point, render_csv, sweep, PhaseError, PhasePoint, SweepOptions};
use pspin_core::quadrature::{QuadratureRule, DEFAULT_ORDER};

const EXIT_USAGE: u8 = 1;
const EXIT_NO_TRANSITION: u8 = 2;
const EXIT_BRACKET: u8 = 3;
const EXIT_LEMMA: u8 = 4;

/// RS / 1RSB phase structure of the Ising pure p-spin glass.
#[derive(Parser)]
#[command(name = "pspin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the first critical inverse temperature and its overlap.
    Locate {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        p: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Classify one (p, beta) as RS, OneRSB or Unknown.
    Classify {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        p: u32,
        #[arg(long, value_parser = positive)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a range of beta values, warm-starting each 1RSB solve.
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        p: u32,
        #[arg(long, value_parser = positive)]
        beta_min: f64,
        #[arg(long, value_parser = positive)]
        beta_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        no_warm_start: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run the T-convexity, quintic root count, G1 and G2 checks.
    VerifyLemmas {
        /// Degrees used for the T-convexity grid.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_P_LIST)]
        p: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    quad_order: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite number > 0, got {s}"))
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<CriticalError> for Failure {
    fn from(e: CriticalError) -> Self {
        let code = match e {
            CriticalError::NoTransition => EXIT_NO_TRANSITION,
            CriticalError::BracketFailure(_) => EXIT_BRACKET,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<PhaseError> for Failure {
    fn from(e: PhaseError) -> Self {
        match e {
            PhaseError::Critical(c) => c.into(),
            other => Self::usage(other),
        }
    }
}

fn rule(order: usize) -> Result<QuadratureRule, Failure> {
    QuadratureRule::standard(order).map_err(Failure::usage)
}

fn check_grid(grid: usize) -> Result<(), Failure> {
    if grid < 2 {
        return Err(Failure::usage(format!("--grid must be at least 2, got {grid}")));
    }
    Ok(())
}

fn render_boundary(b: &BoundarySolution, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string(b).expect("boundary serializes") + "\n",
        Format::Csv => format!(
            "p,beta1,q1,residual_C,residual_D,bracket_width\n{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            b.p, b.beta1, b.q1, b.residual_c, b.residual_d, b.bracket_width
        ),
        Format::Text => format!(
            "p              {}\nbeta1          {:.16e}\nq1             {:.16e}\nresidual_C     {:.16e}\nresidual_D     {:.16e}\nbracket_width  {:.16e}\n",
            b.p, b.beta1, b.q1, b.residual_c, b.residual_d, b.bracket_width
        ),
    }
}

fn render_points(rows: &[PhasePoint], format: Format) -> String {
    match format {
        Format::Csv => render_csv(rows),
        Format::Json => rows.iter().map(|r| r.to_json() + "\n").collect(),
        Format::Text => rows.iter().map(|r| r.render_text()).collect::<Vec<_>>().join("\n"),
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Locate { p, common } => {
            let b = solve_boundary(p, &rule(common.quad_order)?)?;
            Ok(render_boundary(&b, common.format.unwrap_or(Format::Text)))
        }
        Command::Classify { p, beta, grid, common } => {
            check_grid(grid)?;
            let rule = rule(common.quad_order)?;
            let model = ModelSpec::new(p, beta).map_err(Failure::usage)?;
            let boundary = solve_boundary(p, &rule)?;
            let row = phase_point(&model, &rule, &boundary, grid, None)?;
            Ok(render_points(&[row], common.format.unwrap_or(Format::Text)))
        }
        Command::Sweep {
            p,
            beta_min,
            beta_max,
            steps,
            grid,
            no_warm_start,
            common,
        } => {
            check_grid(grid)?;
            let rule = rule(common.quad_order)?;
            let opts = SweepOptions {
                grid,
                warm_start: !no_warm_start,
            };
            let rows = sweep(p, beta_min, beta_max, steps, &rule, opts)?;
            Ok(render_points(&rows, common.format.unwrap_or(Format::Csv)))
        }
        Command::VerifyLemmas { p, common } => {
            if p.iter().any(|&d| d < 2) {
                return Err(Failure::usage("every --p must be at least 2"));
            }
            let report = verify_lemmas(&p, &rule(common.quad_order)?).map_err(Failure::usage)?;
            let out = match common.format.unwrap_or(Format::Text) {
                Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                _ => report.render_text(),
            };
            let failures = report.failures();
            if failures.is_empty() {
                Ok(out)
            } else {
                print!("{out}");
                Err(Failure {
                    code: EXIT_LEMMA,
                    message: format!("failed checks: {}", failures.join(", ")),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
