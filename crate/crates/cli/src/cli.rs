use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Deserialize;

use crate::config::{Arms, Format, NumText, NumericMode, SweepMode};
use crate::{CliError, CliResult};

/// Column schema shipped with the repository; also rendered into `--help`.
pub const COLUMNS_JSON: &str = include_str!("../../../schema/columns.json");

#[derive(Debug, Clone, Deserialize)]
pub struct ColumnDoc {
    pub name: String,
    pub description: String,
}

pub fn column_schema() -> Vec<(String, Vec<ColumnDoc>)> {
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(COLUMNS_JSON).expect("schema/columns.json is valid");
    map.into_iter()
        .map(|(k, v)| (k, serde_json::from_value(v).expect("column entries have name and description")))
        .collect()
}

pub fn columns_for(command: &str) -> Vec<String> {
    column_schema()
        .into_iter()
        .find(|(k, _)| k == command)
        .map(|(_, cols)| cols.into_iter().map(|c| c.name).collect())
        .unwrap_or_default()
}

#[derive(Debug, Parser)]
#[command(name = "boxlab", version, about = "Correlation boxes, free will, and signaling simulations")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub numeric_mode: Option<NumericMode>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signaling, randomness and CHSH value of a box or an ensemble.
    Metrics(MetricsArgs),
    /// Decompose a box into deterministic 0-bit and 1-bit boxes.
    Decompose(DecomposeArgs),
    /// Sweep the reduced-free-will constructions.
    #[command(name = "freewill-sweep")]
    FreewillSweep(SweepArgs),
    /// Monte Carlo of the singlet protocol.
    #[command(name = "singlet-sim")]
    SingletSim(SingletArgs),
    /// Run a protocol with its parties placed in spacetime.
    #[command(name = "srx-embed")]
    SrxEmbed(SrxArgs),
    /// Hidden-influence scenario with two particles and a distant Alice.
    Hie(HieArgs),
    /// Run the acceptance criteria.
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Args)]
pub struct BoxSource {
    /// pr, white, uniform-local, or a deterministic box dJ_K (K = 0 or 1).
    #[arg(long = "box")]
    pub name: Option<String>,
    /// JSON file holding 16 entries (numbers or "n/d" strings).
    #[arg(long)]
    pub box_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub source: BoxSource,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub source: BoxSource,
    /// Shorthand for --numeric-mode exact.
    #[arg(long)]
    pub exact: bool,
    /// Fix the 1-bit pair sums p0+p3, p1+p2, p4+p7 instead of minimizing Σp².
    #[arg(long, num_args = 3, value_names = ["P03", "P12", "P47"])]
    pub pair_sums: Option<Vec<NumText>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
    /// start:stop:step or a comma list (L and LF modes).
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// 0-bit weights (LF mode).
    #[arg(long)]
    pub l_grid: Option<String>,
    /// Free-will values (mixed mode).
    #[arg(long)]
    pub f_grid: Option<String>,
    /// Violations C (mixed mode).
    #[arg(long)]
    pub c_grid: Option<String>,
    /// Resource-family parameter for the slack column.
    #[arg(long)]
    pub s: Option<NumText>,
}

#[derive(Debug, Args)]
pub struct SingletArgs {
    /// prbox, toner-bacon or cbox-general.
    #[arg(long)]
    pub variant: Option<String>,
    /// Signaling of the cbox-general resource.
    #[arg(long)]
    pub s: Option<f64>,
    /// Angle in degrees; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Evenly spaced angles over [0°, 180°] when --theta is absent.
    #[arg(long)]
    pub theta_points: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SrxArgs {
    /// Scenario JSON: v_lambda, geometry, protocol, trials, seed, breakdown_policy, oblivious_strict.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Speed of the hidden influence; a number ≥ 1 or "inf".
    #[arg(long)]
    pub v_lambda: Option<String>,
    /// local-marginal, fair-coin or default-input.
    #[arg(long)]
    pub breakdown_policy: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Refuse to write anything that reveals hidden data.
    #[arg(long)]
    pub oblivious_strict: bool,
    /// Write the per-trial hidden-data trace here (JSON).
    #[arg(long)]
    pub ontic_trace: Option<PathBuf>,
    /// Write a sample of per-trial operational records here (JSON).
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HieArgs {
    /// A number ≥ 1 or "inf".
    #[arg(long)]
    pub v_lambda: Option<String>,
    /// Distance L from Alice to the particles.
    #[arg(long)]
    pub distance: Option<f64>,
    /// Separation R of the two particles.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_b: Option<f64>,
    /// Trials per arm.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub alice_measures: Option<Arms>,
}

#[derive(Debug, Args)]
pub struct AcceptanceArgs {
    /// Criterion ids to run; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u32>>,
    /// JSON file with replacement box tables {"zero": [...], "one": [...]}.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

fn columns_help(cols: &[ColumnDoc]) -> String {
    let width = cols.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::from("CSV columns:\n");
    for c in cols {
        out.push_str(&format!("  {:width$}  {}\n", c.name, c.description));
    }
    out
}

/// The clap command with each subcommand's CSV columns appended to its help.
pub fn command() -> clap::Command {
    let mut cmd = Cli::command();
    for (name, cols) in column_schema() {
        let text = columns_help(&cols);
        cmd = cmd.mut_subcommand(name, move |sub| sub.after_help(text));
    }
    cmd
}

/// Parses arguments; help and version requests come back as `Ok(Err(text))`.
pub fn parse<I, T>(args: I) -> CliResult<Result<Cli, String>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match command().try_get_matches_from(args) {
        Ok(m) => Cli::from_arg_matches(&m).map(Ok).map_err(|e| CliError::Schema(e.to_string())),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(Err(e.to_string())),
            _ => Err(CliError::Schema(e.render().to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tabular_subcommand_documents_its_columns() {
        let cmd = command();
        for (name, cols) in column_schema() {
            let sub = cmd.find_subcommand(&name).unwrap_or_else(|| panic!("no subcommand {name}"));
            let help = sub.get_after_help().unwrap().to_string();
            for c in cols {
                assert!(help.contains(&c.name), "{name}: {}", c.name);
            }
        }
    }

    #[test]
    fn parses_flags() {
        let cli = parse(["boxlab", "--seed", "3", "singlet-sim", "--theta", "60,90", "--trials", "10"]).unwrap().unwrap();
        assert_eq!(cli.seed, Some(3));
        match cli.command {
            Command::SingletSim(a) => assert_eq!(a.theta, Some(vec![60.0, 90.0])),
            _ => panic!(),
        }
        assert!(parse(["boxlab", "metrics", "--bogus"]).is_err());
        assert!(parse(["boxlab", "--help"]).unwrap().is_err());
    }
}
