use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rydberg_walk::microphysics::Family;
use rydberg_walk::topology::CoinedProtocol;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "rydwalk", version, about = "Quantum-walk experiments on Rydberg atom arrays")]
pub struct Cli {
    /// Output directory, replaced atomically on success.
    #[arg(long, global = true, env = "RYDWALK_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for grid sweeps. 1 runs sequentially.
    #[arg(long, global = true, env = "RYDWALK_WORKERS")]
    pub workers: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file or a named preset.
    Run(Source),
    /// Quasienergy bands of the coinless chain.
    Bands(BandsArgs),
    /// Winding invariants (or coined gaps and Chern numbers) over an angle grid.
    PhaseDiagram(PhaseArgs),
    /// Per-step error budget of the atomic implementation.
    ErrorBudget(BudgetArgs),
    /// Walker survival and cumulative fidelity against step count.
    Fidelity(FidelityArgs),
    /// Pulse-level checks: site selectivity, leakage and lattice contrast.
    Micro {
        #[command(subcommand)]
        command: MicroCommand,
    },
    /// Site table of a config's lattice.
    LatticeDump(Source),
}

#[derive(Debug, Args, Serialize)]
pub struct Source {
    /// Experiment config, TOML or JSON by extension.
    #[arg(long, env = "RYDWALK_CONFIG", conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in experiment.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct BandsArgs {
    #[arg(long, default_value = "pi/4", value_parser = parse_angle)]
    pub theta0: f64,
    /// One curve per value.
    #[arg(long, value_delimiter = ',', default_value = "pi/8,pi/4,3pi/8", value_parser = parse_angle)]
    pub theta1: Vec<f64>,
    /// Momenta per curve over [−π, π].
    #[arg(long, env = "RYDWALK_GRID", default_value_t = 201)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinedName {
    Simple2d,
    Chern2d,
    Coined3d,
}

impl CoinedName {
    pub fn protocol(self) -> CoinedProtocol {
        match self {
            CoinedName::Simple2d => CoinedProtocol::simple_2d(),
            CoinedName::Chern2d => CoinedProtocol::chern_2d(),
            CoinedName::Coined3d => CoinedProtocol::coined_3d(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    /// Points per axis.
    #[arg(long, env = "RYDWALK_GRID", default_value_t = 50)]
    pub grid: usize,
    #[arg(long, default_value = "0", value_parser = parse_angle)]
    pub lo: f64,
    #[arg(long, default_value = "pi", value_parser = parse_angle)]
    pub hi: f64,
    /// Inter-cell fraction of the chain.
    #[arg(long, default_value_t = 0.5)]
    pub abar: f64,
    /// Momenta for the winding integrals and gap search.
    #[arg(long, default_value_t = rydberg_walk::topology::DEFAULT_K_GRID)]
    pub k_grid: usize,
    /// Map a coined protocol instead of the chain.
    #[arg(long, value_enum)]
    pub coined: Option<CoinedName>,
    /// Plaquettes per axis for Chern numbers of 2D coined protocols.
    #[arg(long, default_value_t = 32)]
    pub chern_grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamsArgs {
    /// Atomic parameters, TOML or JSON by extension.
    #[arg(long, env = "RYDWALK_PARAMS")]
    pub params: Option<PathBuf>,
    /// Principal quantum number.
    #[arg(long)]
    pub n: Option<u32>,
    /// Rabi frequency in MHz.
    #[arg(long)]
    pub rabi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    Gaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    #[arg(long, value_enum, default_value_t = Distribution::Uniform)]
    pub distribution: Distribution,
    /// Average the detuning error over this many random samples instead
    /// of quadrature.
    #[arg(long)]
    pub monte_carlo: Option<usize>,
    #[arg(long, env = "RYDWALK_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    /// Per-step operation fidelity.
    #[arg(long, default_value_t = 0.97)]
    pub fidelity: f64,
    /// Steps to evaluate; scales with n when absent.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Fixed loss per step instead of the calibrated model.
    #[arg(long)]
    pub loss_per_step: Option<f64>,
    /// Scalar factors such as initialization and detection fidelities.
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    pub survival_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    X0,
    X1,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::X0 => Family::X0,
            FamilyArg::X1 => Family::X1,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum MicroCommand {
    /// Peak auxiliary population of every site paired with the chain center.
    Selectivity(SelectivityArgs),
    /// Shell leakage: closed form against the multi-site simulation.
    Leakage(LeakageArgs),
    /// Largest drive ratio meeting a fidelity target against a_x1.
    Contrast(ContrastArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SelectivityArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    #[arg(long, default_value_t = 9)]
    pub sites: usize,
    /// Site spacing in μm.
    #[arg(long, default_value_t = 3.0)]
    pub spacing: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LeakageArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::X0)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 1.0)]
    pub a_x0: f64,
    #[arg(long, default_value_t = 1.5)]
    pub a_x1: f64,
    /// Values of Ω/|V_ij|.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.02,0.01")]
    pub ratios: Vec<f64>,
    /// Time samples for the averaged simulated leakage.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
    #[arg(long, default_value_t = rydberg_walk::microphysics::DEFAULT_SHELL)]
    pub shell: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ContrastArgs {
    #[command(flatten)]
    pub params: ParamsArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::X1)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 1.0)]
    pub a_x0: f64,
    #[arg(long, default_value_t = 1.6)]
    pub from: f64,
    #[arg(long, default_value_t = 3.0)]
    pub to: f64,
    #[arg(long, env = "RYDWALK_GRID", default_value_t = 57)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.99)]
    pub fidelity: f64,
    #[arg(long, default_value_t = rydberg_walk::microphysics::DEFAULT_SHELL)]
    pub shell: usize,
}

/// Angles as plain radians or multiples of π: `0.3`, `pi`, `-pi/2`,
/// `3pi/8`, `0.25*pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t: String =
        s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase().replace('π', "pi");
    let bad = || format!("cannot read angle {s:?}");
    let value = match t.find("pi") {
        Some(i) => {
            let coef = t[..i].trim_end_matches('*');
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = &t[i + 2..];
            let d = if rest.is_empty() {
                1.0
            } else {
                rest.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?
            };
            c * PI / d
        }
        None => t.parse::<f64>().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}
