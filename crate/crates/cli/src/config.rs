//! Experiment configuration: a JSON file with global keys and one block per
//! subcommand, overridden by command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use boxlab_core::boxes::DeterministicBox;
use boxlab_core::scalar::{parse_rational, Scalar, Q};
use boxlab_core::srx::{BreakdownPolicy, Event, SignalSpeed};
use clap::ValueEnum;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A number kept as the text it was written in, so `0.1` can be read as
/// exactly 1/10. JSON numbers are rendered through their shortest decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct NumText(pub String);

impl<'de> Deserialize<'de> for NumText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Num(f64),
            Text(String),
        }
        Ok(NumText(match Repr::deserialize(d)? {
            Repr::Int(i) => i.to_string(),
            Repr::Num(x) => x.to_string(),
            Repr::Text(t) => t,
        }))
    }
}

impl FromStr for NumText {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(|_| NumText(s.trim().to_string())).ok_or_else(|| format!("not a number: {s:?}"))
    }
}

impl fmt::Display for NumText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl NumText {
    pub fn new(text: &str) -> Self {
        NumText(text.to_string())
    }

    pub fn exact(&self) -> CliResult<Q> {
        parse_rational(&self.0).ok_or_else(|| CliError::Schema(format!("not a number: {:?}", self.0)))
    }

    pub fn float(&self) -> CliResult<f64> {
        Ok(self.exact()?.to_f64())
    }
}

/// `start:stop:step` (inclusive, exact arithmetic) or a comma list.
pub fn parse_grid(text: &str) -> CliResult<Vec<Q>> {
    let bad = || CliError::Schema(format!("bad grid {text:?}; use start:stop:step or a comma list"));
    let num = |s: &str| parse_rational(s).ok_or_else(bad);
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= Q::from_f64(0.0) || start > stop {
                return Err(bad());
            }
            let mut out = Vec::new();
            let mut v = start;
            while v <= stop {
                out.push(v.clone());
                v += step.clone();
                if out.len() > 1_000_000 {
                    return Err(CliError::Schema(format!("grid {text:?} has too many points")));
                }
            }
            Ok(out)
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub weight: NumText,
    #[serde(rename = "box")]
    pub member: BoxRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxRef(pub DeterministicBox);

impl Default for BoxRef {
    fn default() -> Self {
        BoxRef(DeterministicBox::zero_bit(0))
    }
}

impl Default for NumText {
    fn default() -> Self {
        NumText("0".into())
    }
}

/// Which box to analyse: a named box, explicit entries, or neither (then
/// the subcommand default applies).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<NumText>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsParams {
    #[serde(flatten)]
    pub source: BoxSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<EnsembleMember>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeParams {
    #[serde(flatten)]
    pub source: BoxSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_sums: Option<[NumText; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum SweepMode {
    #[value(name = "L", alias = "l")]
    L,
    #[value(name = "LF", alias = "lf")]
    LF,
    #[value(name = "Mixed", alias = "mixed")]
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub mode: SweepMode,
    pub alpha_grid: String,
    pub l_grid: String,
    pub f_grid: String,
    pub c_grid: String,
    /// Resource-family parameter used for the slack column.
    pub s: NumText,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            mode: SweepMode::L,
            alpha_grid: "0:1/4:1/64".into(),
            l_grid: "0:1:1/4".into(),
            f_grid: "2/3:1:1/24".into(),
            c_grid: "1/8:1:1/8".into(),
            s: NumText::new("0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingletParams {
    pub variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Angles in degrees; when absent, `theta_points` evenly spaced over [0°, 180°].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    pub theta_points: usize,
    pub trials: u64,
}

impl Default for SingletParams {
    fn default() -> Self {
        Self { variant: "prbox".into(), s: None, theta: None, theta_points: 12, trials: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub alice: Event,
    pub bob: Event,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { alice: Event::new("A", 0.0, [0.0, 0.0]), bob: Event::new("B", 1.0, [1.0, 0.0]) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Singlet {
        #[serde(default = "default_variant")]
        variant: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<Vec<f64>>,
        #[serde(default = "default_points")]
        theta_points: usize,
        /// Alternative direction for Alice used to probe Bob's marginals.
        #[serde(default = "default_probe")]
        probe: Option<[f64; 3]>,
    },
    Cbox {
        s: f64,
    },
    Mixture {
        f: NumText,
        c: NumText,
        #[serde(default)]
        r_star: bool,
    },
}

fn default_variant() -> String {
    "prbox".into()
}

fn default_points() -> usize {
    12
}

fn default_probe() -> Option<[f64; 3]> {
    Some([1.0, 0.0, 0.0])
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec::Singlet {
            variant: default_variant(),
            s: None,
            theta: None,
            theta_points: default_points(),
            probe: default_probe(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrxParams {
    pub v_lambda: SignalSpeed,
    pub geometry: Geometry,
    pub protocol: ProtocolSpec,
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub breakdown_policy: BreakdownPolicy,
    pub oblivious_strict: bool,
}

impl Default for SrxParams {
    fn default() -> Self {
        Self {
            v_lambda: SignalSpeed::Infinite,
            geometry: Geometry::default(),
            protocol: ProtocolSpec::default(),
            trials: 10_000,
            seed: None,
            breakdown_policy: BreakdownPolicy::LocalMarginal,
            oblivious_strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Arms {
    Both,
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HieParams {
    pub v_lambda: SignalSpeed,
    pub distance: f64,
    pub separation: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub trials: u64,
    pub alice_measures: Arms,
}

impl Default for HieParams {
    fn default() -> Self {
        Self {
            v_lambda: SignalSpeed::Finite(50.0),
            distance: 100.0,
            separation: 1.0,
            t_a: 0.0,
            t_b: 10.0,
            trials: 10_000,
            alice_measures: Arms::Both,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptanceParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<u32>>,
    /// JSON file with replacement box tables, for negative controls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub numeric_mode: Option<NumericMode>,
    pub output_path: Option<String>,
    pub format: Option<Format>,
    pub metrics: Option<MetricsParams>,
    pub decompose: Option<DecomposeParams>,
    #[serde(rename = "freewill-sweep")]
    pub freewill_sweep: Option<SweepParams>,
    #[serde(rename = "singlet-sim")]
    pub singlet_sim: Option<SingletParams>,
    #[serde(rename = "srx-embed")]
    pub srx_embed: Option<SrxParams>,
    pub hie: Option<HieParams>,
    pub acceptance: Option<AcceptanceParams>,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

pub fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    match path {
        Some(p) => parse_json(&read_text(p)?, &p.display().to_string()),
        None => Ok(ConfigFile::default()),
    }
}

/// Fully resolved settings of one run; serialized into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved<P: Serialize> {
    pub command: &'static str,
    pub seed: u64,
    pub numeric_mode: NumericMode,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub params: P,
}

pub const DEFAULT_SEED: u64 = 20_240_611;

impl<P: Serialize> Resolved<P> {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Compact JSON with sorted keys, and its SHA-256.
    pub fn canonical(&self) -> (String, String) {
        let text = serde_json::to_string(&self.to_value()).expect("config serializes");
        let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        (text, hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0:1/4:1/16").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], parse_rational("0.25").unwrap());
        assert_eq!(parse_grid("0.1,1/3").unwrap().len(), 2);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn num_text_reads_json_numbers_as_decimals() {
        let v: Vec<NumText> = serde_json::from_str(r#"[0.1, "1/3", 2]"#).unwrap();
        assert_eq!(v[0].exact().unwrap(), parse_rational("1/10").unwrap());
        assert_eq!(v[1].0, "1/3");
        assert_eq!(v[2].0, "2");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_json::<ConfigFile>(r#"{"sede": 3}"#, "cfg").is_err());
        assert!(parse_json::<ConfigFile>(r#"{"hie": {"distance": 50, "bogus": 1}}"#, "cfg").is_err());
        let cfg: ConfigFile = parse_json(r#"{"seed": 3, "hie": {"distance": 50}}"#, "cfg").unwrap();
        assert_eq!(cfg.hie.unwrap().distance, 50.0);
    }

    #[test]
    fn scenario_block_parses() {
        let text = r#"{
            "v_lambda": "inf",
            "geometry": {"alice": {"t": 0, "x": [0, 0]}, "bob": {"t": 1, "x": [3, 0]}},
            "protocol": {"kind": "singlet", "variant": "toner-bacon", "theta": [0, 90]},
            "trials": 100, "seed": 5, "breakdown_policy": "fair-coin"
        }"#;
        let p: SrxParams = parse_json(text, "scenario").unwrap();
        assert_eq!(p.seed, Some(5));
        assert_eq!(p.breakdown_policy, BreakdownPolicy::FairCoin);
        let m: SrxParams = parse_json(r#"{"protocol": {"kind": "mixture", "f": 0.9, "c": "3/5"}}"#, "scenario").unwrap();
        assert!(matches!(m.protocol, ProtocolSpec::Mixture { .. }));
    }

    #[test]
    fn config_hash_is_stable() {
        let r = Resolved {
            command: "hie",
            seed: 1,
            numeric_mode: NumericMode::Exact,
            format: Format::Csv,
            output_path: None,
            params: HieParams::default(),
        };
        assert_eq!(r.canonical(), r.clone().canonical());
        assert_eq!(r.canonical().1.len(), 64);
    }
}
