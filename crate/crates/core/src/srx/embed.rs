//! Running a two-party protocol inside a spacetime geometry. The earlier
//! measurement sends a hidden influence R; whether R is present at the
//! later measurement is decided by the extension's cone. Operational data
//! (settings and outcomes) is kept apart from the ontic record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{influence_arrives, Event, SrxConfig};
use crate::boxes::DeterministicBox;
use crate::correlation::{index, Correlation16};
use crate::error::{Error, Result};
use crate::metrics::{ontic_metrics, OnticMetrics, OperationalMetrics};
use crate::rng::{stream, trial_rng};
use crate::scalar::{Scalar, FLOAT_TOLERANCE, Q};

/// What the later party does when it needed R and R has not arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakdownPolicy {
    /// Output drawn from the protocol's own marginal using shared data only.
    #[default]
    LocalMarginal,
    /// Fresh fair coin from the breakdown stream.
    FairCoin,
    /// Proceed as if the sender's input were 0.
    DefaultInput,
}

impl BreakdownPolicy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "local-marginal" => Ok(Self::LocalMarginal),
            "fair-coin" => Ok(Self::FairCoin),
            "default-input" => Ok(Self::DefaultInput),
            other => Err(Error::Variant(format!("unknown breakdown policy {other:?}"))),
        }
    }
}

/// One party's setting label and outcome bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub setting: u8,
    pub output: u8,
}

/// The sender's local step: its side, the bit R carries (None when the
/// receiver does not need it) and the classical bits counted as sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sent {
    pub side: Side,
    pub message: Option<u8>,
    pub comm_bits: u64,
}

/// A protocol whose two parties act at separate events. `alice_sends`
/// tells the protocol which party measures first and so plays the sender.
pub trait EmbeddedProtocol: Sync {
    type Shared: Copy + Send + Sync;

    fn name(&self) -> String;

    fn points(&self) -> usize;

    /// Data distributed along the shared worldline before the trial, plus
    /// the trial's input choices.
    fn prepare(&self, seed: u64, point: usize, trial: u64) -> Self::Shared;

    /// Optional mirrored copy of the trial, evaluated alongside it.
    fn mirror(&self, _shared: &Self::Shared) -> Option<Self::Shared> {
        None
    }

    fn send(&self, point: usize, shared: &Self::Shared, alice_sends: bool) -> Sent;

    /// Receiver step with R in hand (or with no R needed).
    fn receive(&self, point: usize, shared: &Self::Shared, alice_sends: bool, message: Option<u8>) -> Side;

    /// Receiver step when R was needed but is absent. Under `FairCoin` the
    /// engine replaces the output.
    fn fallback(&self, point: usize, shared: &Self::Shared, alice_sends: bool, policy: BreakdownPolicy) -> Side;

    /// The deterministic box realized in this trial.
    fn ontic_box(&self, shared: &Self::Shared, alice_sends: bool) -> DeterministicBox;

    /// The resource the protocol declares, when there is one.
    fn declared_resource(&self) -> Option<Correlation16<Q>> {
        None
    }

    fn full_free_will(&self) -> bool {
        true
    }
}

/// The only data an experimenter sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OperationalRecord {
    pub point: u32,
    pub trial: u64,
    pub a: u8,
    pub b: u8,
    pub x: u8,
    pub y: u8,
}

pub const OPERATIONAL_FIELDS: [&str; 6] = ["point", "trial", "a", "b", "x", "y"];

/// Aggregate columns allowed next to the operational fields in tables.
pub const OPERATIONAL_AGGREGATES: [&str; 1] = ["count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OnticRecord {
    pub point: u32,
    pub trial: u64,
    pub state: DeterministicBox,
    pub message: Option<u8>,
    pub delivered: bool,
    pub relabeled: bool,
    pub comm_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OperationalTally {
    pub trials: u64,
    /// Counts indexed like box entries: a·8 + b·4 + x·2 + y.
    pub counts: [u64; 16],
    /// Same counts over the mirrored trials, when the protocol has them.
    pub mirror_counts: [u64; 16],
}

impl OperationalTally {
    fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        for i in 0..16 {
            self.counts[i] += o.counts[i];
            self.mirror_counts[i] += o.mirror_counts[i];
        }
        self
    }

    pub fn x_ones(&self) -> u64 {
        (0..16).filter(|i| i & 2 != 0).map(|i| self.counts[i]).sum()
    }

    pub fn y_ones(&self) -> u64 {
        (0..16).filter(|i| i & 1 != 0).map(|i| self.counts[i]).sum()
    }

    pub fn xor_ones(&self) -> u64 {
        (0..16).filter(|i| ((i >> 1) ^ i) & 1 != 0).map(|i| self.counts[i]).sum()
    }

    /// Conditional box P(xy|ab) estimated from the counts; `None` if an
    /// input pair never occurred.
    pub fn empirical_box(&self) -> Option<Correlation16<f64>> {
        let mut entries = [0.0; 16];
        for row in 0..4 {
            let n: u64 = (0..4).map(|o| self.counts[row * 4 + o]).sum();
            if n == 0 {
                return None;
            }
            for o in 0..4 {
                entries[row * 4 + o] = self.counts[row * 4 + o] as f64 / n as f64;
            }
        }
        Correlation16::new(entries).ok()
    }

    pub fn row_totals(&self) -> [u64; 4] {
        std::array::from_fn(|row| (0..4).map(|o| self.counts[row * 4 + o]).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OnticTally {
    pub box_counts: [u64; 16],
    pub comm_bits: u64,
    pub influences_needed: u64,
    pub delivered: u64,
    pub breakdowns: u64,
}

impl OnticTally {
    fn merge(mut self, o: Self) -> Self {
        for i in 0..16 {
            self.box_counts[i] += o.box_counts[i];
        }
        self.comm_bits += o.comm_bits;
        self.influences_needed += o.influences_needed;
        self.delivered += o.delivered;
        self.breakdowns += o.breakdowns;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedOptions {
    pub policy: BreakdownPolicy,
    /// Refuse to hand out anything ontic alongside the operational data.
    pub oblivious_strict: bool,
    pub keep_ontic_trace: bool,
    /// Operational records kept per point for output and auditing.
    pub sample_records: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { policy: BreakdownPolicy::LocalMarginal, oblivious_strict: false, keep_ontic_trace: false, sample_records: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRun {
    pub point: usize,
    pub operational: OperationalTally,
    pub ontic: OnticTally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub scanned: u64,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingRun {
    pub protocol: String,
    pub config: SrxConfig,
    pub alice: Event,
    pub bob: Event,
    pub options: EmbedOptions,
    pub seed: u64,
    pub trials: u64,
    /// Bob measures first and plays the sender.
    pub relabeled: bool,
    /// Whether R reaches the later event.
    pub delivered: bool,
    pub points: Vec<PointRun>,
    pub operational_sample: Vec<OperationalRecord>,
    pub audit: AuditReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ontic_trace: Option<Vec<OnticRecord>>,
}

impl EmbeddingRun {
    pub fn ontic_total(&self) -> OnticTally {
        self.points.iter().fold(OnticTally::default(), |acc, p| acc.merge(p.ontic))
    }

    pub fn operational_total(&self) -> OperationalTally {
        self.points.iter().fold(OperationalTally::default(), |acc, p| acc.merge(p.operational))
    }
}

/// Scans serialized operational records: every key must be one of
/// [`OPERATIONAL_FIELDS`] and every setting and outcome a bit.
pub fn audit_operational(records: &[OperationalRecord]) -> AuditReport {
    let mut violations = Vec::new();
    for rec in records {
        match serde_json::to_value(rec) {
            Ok(serde_json::Value::Object(map)) => {
                for key in map.keys() {
                    if !OPERATIONAL_FIELDS.contains(&key.as_str()) {
                        violations.push(format!("record {}/{} carries field {key:?}", rec.point, rec.trial));
                    }
                }
            }
            _ => violations.push(format!("record {}/{} is not an object", rec.point, rec.trial)),
        }
        if [rec.a, rec.b, rec.x, rec.y].iter().any(|&v| v > 1) {
            violations.push(format!("record {}/{} has a non-bit value", rec.point, rec.trial));
        }
    }
    AuditReport { scanned: records.len() as u64, violations }
}

/// Column check for tabular operational output.
pub fn audit_columns(columns: &[&str]) -> AuditReport {
    let violations = columns
        .iter()
        .filter(|c| !OPERATIONAL_FIELDS.contains(c) && !OPERATIONAL_AGGREGATES.contains(c))
        .map(|c| format!("column {c:?} is not operational"))
        .collect();
    AuditReport { scanned: columns.len() as u64, violations }
}

#[derive(Default)]
struct Acc {
    op: OperationalTally,
    ontic: OnticTally,
    sample: Vec<OperationalRecord>,
    trace: Vec<OnticRecord>,
}

impl Acc {
    fn merge(mut self, mut o: Self) -> Self {
        self.op = self.op.merge(o.op);
        self.ontic = self.ontic.merge(o.ontic);
        self.sample.append(&mut o.sample);
        self.trace.append(&mut o.trace);
        self
    }
}

fn box_slot(d: &DeterministicBox) -> usize {
    d.ordinal()
}

/// Runs `trials` trials per point of `protocol` with Alice measuring at
/// `alice` and Bob at `bob`. Whoever measures first sends; a tie counts as
/// Alice first.
pub fn embed_and_run<P: EmbeddedProtocol>(
    protocol: &P,
    cfg: &SrxConfig,
    alice: &Event,
    bob: &Event,
    trials: u64,
    seed: u64,
    options: EmbedOptions,
) -> Result<EmbeddingRun> {
    if trials == 0 {
        return Err(Error::OutOfRange { name: "trials", value: 0.0, range: "N ≥ 1" });
    }
    if options.oblivious_strict && options.keep_ontic_trace {
        return Err(Error::Invariant("ontic trace requested in oblivious-strict mode".into()));
    }
    for e in [alice, bob] {
        if !(e.t.is_finite() && e.x.iter().all(|c| c.is_finite())) {
            return Err(Error::Geometry(format!("event {:?} has non-finite coordinates", e.label)));
        }
    }
    let alice_sends = alice.t <= bob.t;
    let delivered = if alice_sends { influence_arrives(alice, bob, cfg) } else { influence_arrives(bob, alice, cfg) };

    let run_one = |point: usize, t: u64, shared: &P::Shared| -> (Side, Side, Sent, bool) {
        let sent = protocol.send(point, shared, alice_sends);
        let (recv, broke) = match sent.message {
            Some(m) if delivered => (protocol.receive(point, shared, alice_sends, Some(m)), false),
            None => (protocol.receive(point, shared, alice_sends, None), false),
            Some(_) => {
                let mut side = protocol.fallback(point, shared, alice_sends, options.policy);
                if options.policy == BreakdownPolicy::FairCoin {
                    use rand::Rng;
                    side.output = u8::from(trial_rng(seed, stream::BREAKDOWN, point as u64, t).random::<bool>());
                }
                (side, true)
            }
        };
        if alice_sends {
            (sent.side, recv, sent, broke)
        } else {
            (recv, sent.side, sent, broke)
        }
    };

    let results: Vec<Acc> = (0..protocol.points())
        .map(|point| {
            (0..trials)
                .into_par_iter()
                .fold(Acc::default, |mut acc, t| {
                    let shared = protocol.prepare(seed, point, t);
                    let (al, bo, sent, broke) = run_one(point, t, &shared);
                    acc.op.trials += 1;
                    acc.op.counts[index(al.setting, bo.setting, al.output, bo.output)] += 1;
                    if let Some(m) = protocol.mirror(&shared) {
                        let (mal, mbo, _, _) = run_one(point, t, &m);
                        acc.op.mirror_counts[index(mal.setting, mbo.setting, mal.output, mbo.output)] += 1;
                    }
                    let state = protocol.ontic_box(&shared, alice_sends);
                    acc.ontic.box_counts[box_slot(&state)] += 1;
                    acc.ontic.comm_bits += sent.comm_bits;
                    if sent.message.is_some() {
                        acc.ontic.influences_needed += 1;
                        acc.ontic.delivered += u64::from(delivered);
                    }
                    acc.ontic.breakdowns += u64::from(broke);
                    if t < options.sample_records {
                        acc.sample.push(OperationalRecord {
                            point: point as u32,
                            trial: t,
                            a: al.setting,
                            b: bo.setting,
                            x: al.output,
                            y: bo.output,
                        });
                    }
                    if options.keep_ontic_trace {
                        acc.trace.push(OnticRecord {
                            point: point as u32,
                            trial: t,
                            state,
                            message: sent.message,
                            delivered: sent.message.is_some() && delivered,
                            relabeled: !alice_sends,
                            comm_bits: sent.comm_bits,
                        });
                    }
                    acc
                })
                .reduce(Acc::default, Acc::merge)
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    let mut sample = Vec::new();
    let mut trace = Vec::new();
    for (point, mut acc) in results.into_iter().enumerate() {
        points.push(PointRun { point, operational: acc.op, ontic: acc.ontic });
        sample.append(&mut acc.sample);
        trace.append(&mut acc.trace);
    }
    sample.sort_by_key(|r| (r.point, r.trial));
    trace.sort_by_key(|r| (r.point, r.trial));
    let audit = audit_operational(&sample);
    if !audit.clean() {
        return Err(Error::Invariant(format!("operational audit failed: {}", audit.violations.join("; "))));
    }
    Ok(EmbeddingRun {
        protocol: protocol.name(),
        config: *cfg,
        alice: alice.clone(),
        bob: bob.clone(),
        options,
        seed,
        trials,
        relabeled: !alice_sends,
        delivered,
        points,
        operational_sample: sample,
        audit,
        ontic_trace: options.keep_ontic_trace.then_some(trace),
    })
}

/// Outcome of the no-signaling and complementarity checks for one
/// ontology.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremChecks {
    /// I_λ = 0 ⟹ S_λ > 0.
    pub zero_randomness_signals: bool,
    /// I_λ < ½ ⟹ S_λ > 0.
    pub partial_randomness_signals: bool,
    /// S_λ + 2 I_λ - 1.
    pub complementarity_slack: f64,
}

impl TheoremChecks {
    pub fn of(m: &OnticMetrics<f64>) -> Self {
        let signals = m.s_lambda > FLOAT_TOLERANCE;
        Self {
            zero_randomness_signals: m.i_lambda > FLOAT_TOLERANCE || signals,
            partial_randomness_signals: m.i_lambda >= 0.5 - FLOAT_TOLERANCE || signals,
            complementarity_slack: m.complementarity_sum() - 1.0,
        }
    }

    pub fn holds(&self) -> bool {
        self.zero_randomness_signals && self.partial_randomness_signals && self.complementarity_slack >= -FLOAT_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnticComparison {
    pub operational: OperationalMetrics<f64>,
    /// Each realized deterministic box taken as its own ontic state.
    pub fine: OnticMetrics<f64>,
    /// The declared resource taken as a single ontic state.
    pub declared: Option<OnticMetrics<f64>>,
    /// The operational statistics taken as a single ontic state.
    pub trivial: OnticMetrics<f64>,
    pub full_free_will: bool,
    pub fine_checks: TheoremChecks,
    pub declared_checks: Option<TheoremChecks>,
    /// Only meaningful when the operational values are exact; Monte Carlo
    /// noise can push S + 2I slightly below 1.
    pub trivial_checks: TheoremChecks,
}

impl OnticComparison {
    /// Whether the checks on the fine and declared ontologies hold; they are
    /// only claimed under full free will.
    pub fn consistent(&self) -> bool {
        !self.full_free_will || (self.fine_checks.holds() && self.declared_checks.as_ref().is_none_or(TheoremChecks::holds))
    }
}

/// Compares operational (S, I) with (S_λ, I_λ) under three ontologies of
/// the same run: the realized deterministic boxes, the declared resource,
/// and the operational box itself.
pub fn ontic_vs_operational_report<P: EmbeddedProtocol>(
    protocol: &P,
    run: &EmbeddingRun,
    operational: OperationalMetrics<f64>,
) -> Result<OnticComparison> {
    let totals = run.ontic_total();
    let n: u64 = totals.box_counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let ensemble: Vec<(f64, Correlation16<f64>)> = totals
        .box_counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(slot, &c)| Ok((c as f64 / n as f64, DeterministicBox::from_ordinal(slot)?.as_correlation())))
        .collect::<Result<_>>()?;
    let fine = ontic_metrics(&ensemble)?;
    let declared = match protocol.declared_resource() {
        Some(p) => Some(ontic_metrics(&[(crate::scalar::q(1, 1), p)])?),
        None => None,
    }
    .map(|m| OnticMetrics { s_lambda: m.s_lambda.to_f64(), i_lambda: m.i_lambda.to_f64() });
    let trivial = OnticMetrics { s_lambda: operational.s, i_lambda: operational.i };
    Ok(OnticComparison {
        operational,
        fine_checks: TheoremChecks::of(&fine),
        declared_checks: declared.as_ref().map(TheoremChecks::of),
        trivial_checks: TheoremChecks::of(&trivial),
        fine,
        declared,
        trivial,
        full_free_will: protocol.full_free_will(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_accepts_operational_records_and_flags_columns() {
        let recs = [OperationalRecord { point: 0, trial: 3, a: 1, b: 0, x: 1, y: 1 }];
        assert!(audit_operational(&recs).clean());
        let bad = [OperationalRecord { point: 0, trial: 3, a: 2, b: 0, x: 1, y: 1 }];
        assert!(!audit_operational(&bad).clean());
        assert!(audit_columns(&["a", "b", "x", "y"]).clean());
        assert_eq!(audit_columns(&["a", "eta1", "x"]).violations.len(), 1);
        assert!(audit_columns(&["point", "a", "b", "x", "y", "count"]).clean());
    }

    #[test]
    fn checks_on_known_points() {
        let tb = TheoremChecks::of(&OnticMetrics { s_lambda: 1.0, i_lambda: 0.0 });
        assert!(tb.holds());
        assert_eq!(tb.complementarity_slack, 0.0);
        let local = TheoremChecks::of(&OnticMetrics { s_lambda: 0.0, i_lambda: 0.0 });
        assert!(!local.zero_randomness_signals && !local.holds());
        let pr = TheoremChecks::of(&OnticMetrics { s_lambda: 0.0, i_lambda: 0.5 });
        assert!(pr.holds());
    }

    #[test]
    fn policy_names() {
        assert_eq!(BreakdownPolicy::parse("fair-coin").unwrap(), BreakdownPolicy::FairCoin);
        assert!(BreakdownPolicy::parse("nope").is_err());
        assert_eq!(serde_json::to_string(&BreakdownPolicy::DefaultInput).unwrap(), r#""default-input""#);
    }
}
