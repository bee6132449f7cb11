//! The concrete protocols run inside a geometry: the singlet construction
//! and bit-input C-box protocols, including the reduced-free-will mixture.

use rand::Rng;
use serde::Serialize;

use super::embed::*;
use super::{Event, SrxConfig};
use crate::boxes::{BoxKind, DeterministicBox};
use crate::conditioning::suppressed_input_likelihood;
use crate::correlation::Correlation16;
use crate::error::{Error, Result};
use crate::freewill::{cbox_resource, ChiStar};
use crate::metrics::{operational_metrics, OperationalMetrics};
use crate::rng::{stream, trial_rng};
use crate::scalar::{Scalar, Q};
use crate::singlet::{
    alice_step, bob_step, dot, mean_se, sgn, AliceMessage, MeasurementPair, PointStats, SharedRandomness, Tally, Variant, Vec3,
};

/// Box used when Bob is the earlier party: the same table with the
/// communication direction reversed (d^{0_1} ↦ d^{4_1}, d^{3_1} ↦ d^{7_1}).
fn oriented(state: DeterministicBox, alice_sends: bool) -> DeterministicBox {
    match (state.kind, alice_sends) {
        (BoxKind::OneBit, false) if state.j < 4 => DeterministicBox::one_bit(state.j + 4),
        _ => state,
    }
}

fn resource_s(variant: &Variant) -> f64 {
    variant.resource_metrics().0
}

/// The singlet construction at a list of measurement pairs. With a probe
/// direction, every pair is run a second time with Alice's vector replaced
/// by the probe, which gives Bob-side marginals to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletProtocol {
    pub variant: Variant,
    pub pairs: Vec<MeasurementPair>,
    pub probe: Option<Vec3>,
}

impl SingletProtocol {
    pub fn pair(&self, point: usize) -> MeasurementPair {
        let n = self.pairs.len();
        if point < n {
            self.pairs[point]
        } else {
            MeasurementPair { n_a: self.probe.expect("probe points exist only with a probe"), n_b: self.pairs[point - n].n_b }
        }
    }

    fn vectors(&self, point: usize, alice_sends: bool) -> (Vec3, Vec3) {
        let p = self.pair(point);
        if alice_sends {
            (p.n_a, p.n_b)
        } else {
            (p.n_b, p.n_a)
        }
    }
}

impl EmbeddedProtocol for SingletProtocol {
    type Shared = SharedRandomness;

    fn name(&self) -> String {
        format!("singlet/{}", self.variant.tag())
    }

    fn points(&self) -> usize {
        self.pairs.len() * if self.probe.is_some() { 2 } else { 1 }
    }

    fn prepare(&self, seed: u64, point: usize, trial: u64) -> SharedRandomness {
        SharedRandomness::draw(&self.variant, &mut trial_rng(seed, stream::SHARED, point as u64, trial))
    }

    fn mirror(&self, shared: &SharedRandomness) -> Option<SharedRandomness> {
        Some(shared.antithetic())
    }

    fn send(&self, point: usize, sh: &SharedRandomness, alice_sends: bool) -> Sent {
        let (v, _) = self.vectors(point, alice_sends);
        let (_, out, _, msg) = alice_step(&v, &sh.eta1, &sh.eta2, &sh.resource);
        Sent {
            side: Side { setting: 0, output: out },
            message: Some(msg.upsilon_a),
            comm_bits: u64::from(sh.resource.sends_bit),
        }
    }

    fn receive(&self, point: usize, sh: &SharedRandomness, alice_sends: bool, message: Option<u8>) -> Side {
        let (_, v) = self.vectors(point, alice_sends);
        let msg = AliceMessage { upsilon_a: message.unwrap_or(0) };
        let (_, out, _) = bob_step(&v, &sh.eta1, &sh.eta2, &sh.resource, &msg);
        Side { setting: 0, output: out }
    }

    fn fallback(&self, point: usize, sh: &SharedRandomness, alice_sends: bool, policy: BreakdownPolicy) -> Side {
        match policy {
            BreakdownPolicy::DefaultInput => self.receive(point, sh, alice_sends, Some(0)),
            _ => {
                let (_, v) = self.vectors(point, alice_sends);
                Side { setting: 0, output: sgn(dot(&v, &sh.eta2)) }
            }
        }
    }

    fn ontic_box(&self, sh: &SharedRandomness, alice_sends: bool) -> DeterministicBox {
        oriented(sh.resource.state, alice_sends)
    }

    fn declared_resource(&self) -> Option<Correlation16<Q>> {
        cbox_resource(&Q::from_f64(resource_s(&self.variant))).ok()
    }
}

/// Largest observed difference in one party's outcome marginal between
/// runs that differ only in the other party's setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalEstimate {
    /// From marginals averaged over each trial and its η → -η mirror.
    pub antithetic: f64,
    /// From the primary trials alone.
    pub raw: f64,
    pub raw_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingletEmbedding {
    pub run: EmbeddingRun,
    pub stats: Vec<PointStats>,
    pub probe_stats: Vec<PointStats>,
    pub signal: SignalEstimate,
}

impl SingletEmbedding {
    /// S from the signal estimate; I from the mirrored marginals.
    pub fn operational(&self) -> OperationalMetrics<f64> {
        let i = self.stats.iter().chain(&self.probe_stats).fold(0.0f64, |best, p| {
            best.max(p.mirror_mean_a.min(1.0 - p.mirror_mean_a)).max(p.mirror_mean_b.min(1.0 - p.mirror_mean_b))
        });
        OperationalMetrics { s: self.signal.antithetic, i }
    }
}

fn tally_of(point: &PointRun) -> Tally {
    let op = &point.operational;
    let mirror = OperationalTally { counts: op.mirror_counts, ..*op };
    Tally {
        trials: op.trials,
        xor_ones: op.xor_ones(),
        a_ones: op.x_ones(),
        b_ones: op.y_ones(),
        comm_bits: point.ontic.comm_bits,
        mirror_a_ones: op.x_ones() + mirror.x_ones(),
        mirror_b_ones: op.y_ones() + mirror.y_ones(),
    }
}

fn signal_estimate(points: &[PointStats]) -> SignalEstimate {
    let mut out = SignalEstimate { antithetic: 0.0, raw: 0.0, raw_se: 0.0 };
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let mut consider = |mirror_gap: f64, raw_gap: f64, se: f64| {
                out.antithetic = out.antithetic.max(mirror_gap);
                if raw_gap > out.raw {
                    out.raw = raw_gap;
                    out.raw_se = se;
                }
            };
            if p.pair.n_b == q.pair.n_b && p.pair.n_a != q.pair.n_a {
                consider(
                    (p.mirror_mean_b - q.mirror_mean_b).abs(),
                    (p.mean_b - q.mean_b).abs(),
                    p.se_b.hypot(q.se_b),
                );
            }
            if p.pair.n_a == q.pair.n_a && p.pair.n_b != q.pair.n_b {
                consider(
                    (p.mirror_mean_a - q.mirror_mean_a).abs(),
                    (p.mean_a - q.mean_a).abs(),
                    p.se_a.hypot(q.se_a),
                );
            }
        }
    }
    out
}

/// Runs the singlet construction with Alice at `alice` and Bob at `bob`.
/// Main points use the same streams as the bare simulation, so a run in
/// which R always arrives reproduces it exactly.
#[allow(clippy::too_many_arguments)]
pub fn embed_singlet(
    cfg: &SrxConfig,
    alice: &Event,
    bob: &Event,
    variant: Variant,
    pairs: &[MeasurementPair],
    probe: Option<Vec3>,
    trials: u64,
    seed: u64,
    options: EmbedOptions,
) -> Result<SingletEmbedding> {
    if pairs.is_empty() {
        return Err(Error::Geometry("no measurement pairs".into()));
    }
    let protocol = SingletProtocol { variant, pairs: pairs.to_vec(), probe };
    let run = embed_and_run(&protocol, cfg, alice, bob, trials, seed, options)?;
    let all: Vec<PointStats> =
        run.points.iter().map(|p| PointStats::from_tally(protocol.pair(p.point), tally_of(p))).collect();
    let signal = signal_estimate(&all);
    let (stats, probe_stats) = all.split_at(pairs.len());
    Ok(SingletEmbedding { stats: stats.to_vec(), probe_stats: probe_stats.to_vec(), signal, run })
}

/// Bit-input protocols built on the one-bit resource family.
#[derive(Debug, Clone, PartialEq)]
pub enum CBoxScheme {
    /// Uniform free inputs and the resource ((1+s)/2) d^{0_1} + ((1-s)/2) d^{3_1}.
    Resource { s: f64 },
    /// The mixture of the bound and free modes at free will F and violation
    /// C. With `r_star`, bound-mode inputs are not drawn jointly from the
    /// hidden data: the sender draws its input from its marginal and sends
    /// it, and the receiver draws its own from the conditional.
    ReducedFreeWill { chi: ChiStar, r_star: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CBoxProtocol {
    pub scheme: CBoxScheme,
    likelihood: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CBoxShared {
    pub state: DeterministicBox,
    pub bound_mode: bool,
    pub sends_bit: bool,
    pub a: u8,
    pub b: u8,
    pub u_sender: f64,
    pub u_receiver: f64,
    pub u_shared: f64,
}

impl CBoxProtocol {
    pub fn new(scheme: CBoxScheme) -> Result<Self> {
        let likelihood = match &scheme {
            CBoxScheme::Resource { s } => {
                if !(0.0..=1.0).contains(s) {
                    return Err(Error::OutOfRange { name: "s", value: *s, range: "[0, 1]" });
                }
                Vec::new()
            }
            CBoxScheme::ReducedFreeWill { chi, .. } => suppressed_input_likelihood(&chi.alpha)?,
        };
        Ok(Self { scheme, likelihood })
    }

    fn r_star(&self, sh: &CBoxShared) -> bool {
        sh.bound_mode && matches!(self.scheme, CBoxScheme::ReducedFreeWill { r_star: true, .. })
    }

    /// P(sender input = 1 | λ).
    fn sender_marginal(&self, sh: &CBoxShared, alice_sends: bool) -> f64 {
        let col = self.likelihood[sh.state.j];
        if alice_sends {
            col[2] + col[3]
        } else {
            col[1] + col[3]
        }
    }

    /// P(receiver input = 1 | λ), and given the sender's input when known.
    fn receiver_conditional(&self, sh: &CBoxShared, alice_sends: bool, sender_input: Option<u8>) -> f64 {
        let col = self.likelihood[sh.state.j];
        match (alice_sends, sender_input) {
            (true, Some(a)) => {
                let a = a as usize;
                col[2 * a + 1] / (col[2 * a] + col[2 * a + 1])
            }
            (false, Some(b)) => {
                let b = b as usize;
                col[2 + b] / (col[b] + col[2 + b])
            }
            (true, None) => col[1] + col[3],
            (false, None) => col[2] + col[3],
        }
    }

    fn sender_input(&self, sh: &CBoxShared, alice_sends: bool) -> u8 {
        if self.r_star(sh) {
            u8::from(sh.u_sender < self.sender_marginal(sh, alice_sends))
        } else if alice_sends {
            sh.a
        } else {
            sh.b
        }
    }

    fn receiver_input(&self, sh: &CBoxShared, alice_sends: bool, sender_input: Option<u8>) -> u8 {
        if self.r_star(sh) {
            u8::from(sh.u_receiver < self.receiver_conditional(sh, alice_sends, sender_input))
        } else if alice_sends {
            sh.b
        } else {
            sh.a
        }
    }

    fn receiver_output(&self, sh: &CBoxShared, alice_sends: bool, sender_input: u8, own: u8) -> u8 {
        let d = oriented(sh.state, alice_sends);
        if alice_sends {
            d.outputs(sender_input, own).1
        } else {
            d.outputs(own, sender_input).0
        }
    }
}

impl EmbeddedProtocol for CBoxProtocol {
    type Shared = CBoxShared;

    fn name(&self) -> String {
        match &self.scheme {
            CBoxScheme::Resource { s } => format!("cbox/s={s}"),
            CBoxScheme::ReducedFreeWill { chi, r_star } => {
                format!("mixture/p_f={}/alpha={}{}", chi.p_f, chi.alpha, if *r_star { "/r-star" } else { "" })
            }
        }
    }

    fn points(&self) -> usize {
        1
    }

    fn prepare(&self, seed: u64, point: usize, trial: u64) -> CBoxShared {
        let p = point as u64;
        let mut shared = trial_rng(seed, stream::SHARED, p, trial);
        match &self.scheme {
            CBoxScheme::Resource { s } => {
                let chi: bool = shared.random();
                let path: f64 = shared.random();
                let u_shared: f64 = shared.random();
                let mut inputs = trial_rng(seed, stream::INPUTS, p, trial);
                let (a, b) = (u8::from(inputs.random::<bool>()), u8::from(inputs.random::<bool>()));
                let signal = path < *s;
                let state = DeterministicBox::one_bit(if signal || !chi { 0 } else { 3 });
                CBoxShared { state, bound_mode: false, sends_bit: signal, a, b, u_sender: 0.0, u_receiver: 0.0, u_shared }
            }
            CBoxScheme::ReducedFreeWill { chi, .. } => {
                let mut selector = trial_rng(seed, stream::SELECT, p, trial);
                let mut bias = trial_rng(seed, stream::BIAS, p, trial);
                let draw = chi.draw(&mut selector, &mut shared, &mut bias);
                let u_shared: f64 = shared.random();
                let (u_sender, u_receiver) = (bias.random(), bias.random());
                CBoxShared {
                    state: draw.state,
                    bound_mode: !draw.free_mode,
                    sends_bit: draw.state.kind == BoxKind::OneBit,
                    a: draw.a,
                    b: draw.b,
                    u_sender,
                    u_receiver,
                    u_shared,
                }
            }
        }
    }

    fn send(&self, _point: usize, sh: &CBoxShared, alice_sends: bool) -> Sent {
        let input = self.sender_input(sh, alice_sends);
        let d = oriented(sh.state, alice_sends);
        let output = if alice_sends { d.outputs(input, 0).0 } else { d.outputs(0, input).1 };
        let needed = sh.state.kind == BoxKind::OneBit || self.r_star(sh);
        Sent {
            side: Side { setting: input, output },
            message: needed.then_some(input),
            comm_bits: u64::from(sh.sends_bit),
        }
    }

    fn receive(&self, _point: usize, sh: &CBoxShared, alice_sends: bool, message: Option<u8>) -> Side {
        let own = self.receiver_input(sh, alice_sends, message);
        // Without a message the box is local and ignores the sender's input.
        Side { setting: own, output: self.receiver_output(sh, alice_sends, message.unwrap_or(0), own) }
    }

    fn fallback(&self, _point: usize, sh: &CBoxShared, alice_sends: bool, policy: BreakdownPolicy) -> Side {
        let own = self.receiver_input(sh, alice_sends, None);
        let output = match policy {
            BreakdownPolicy::DefaultInput => self.receiver_output(sh, alice_sends, 0, own),
            _ => {
                let p1 = 0.5 * f64::from(self.receiver_output(sh, alice_sends, 0, own) + self.receiver_output(sh, alice_sends, 1, own));
                u8::from(sh.u_shared < p1)
            }
        };
        Side { setting: own, output }
    }

    fn ontic_box(&self, sh: &CBoxShared, alice_sends: bool) -> DeterministicBox {
        oriented(sh.state, alice_sends)
    }

    fn declared_resource(&self) -> Option<Correlation16<Q>> {
        match &self.scheme {
            CBoxScheme::Resource { s } => cbox_resource(&Q::from_f64(*s)).ok(),
            CBoxScheme::ReducedFreeWill { .. } => None,
        }
    }

    fn full_free_will(&self) -> bool {
        match &self.scheme {
            CBoxScheme::Resource { .. } => true,
            CBoxScheme::ReducedFreeWill { chi, .. } => chi.p_f >= 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CBoxEmbedding {
    pub run: EmbeddingRun,
    /// P(xy|ab) estimated from the operational counts.
    pub empirical: Option<Correlation16<f64>>,
    pub operational: Option<OperationalMetrics<f64>>,
    /// Standard error of a difference of two empirical marginals, taken at
    /// the least-sampled input pair.
    pub marginal_se: f64,
}

pub fn embed_cbox(
    cfg: &SrxConfig,
    alice: &Event,
    bob: &Event,
    scheme: CBoxScheme,
    trials: u64,
    seed: u64,
    options: EmbedOptions,
) -> Result<(CBoxProtocol, CBoxEmbedding)> {
    let protocol = CBoxProtocol::new(scheme)?;
    let run = embed_and_run(&protocol, cfg, alice, bob, trials, seed, options)?;
    let total = run.operational_total();
    let empirical = total.empirical_box();
    let operational = empirical.as_ref().map(operational_metrics);
    let least = total.row_totals().into_iter().min().unwrap_or(0);
    let marginal_se = if least == 0 { f64::INFINITY } else { mean_se(least / 2, least).1 * std::f64::consts::SQRT_2 };
    Ok((protocol, CBoxEmbedding { run, empirical, operational, marginal_se }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freewill::RStar;
    use crate::metrics::signaling;
    use crate::singlet::{run_singlet_sim, theta_grid};

    fn events(dt: f64, dx: f64) -> (Event, Event) {
        (Event::new("A", 0.0, [0.0, 0.0]), Event::new("B", dt, [dx, 0.0]))
    }

    #[test]
    fn reversed_boxes_mix_to_the_same_pr_box() {
        let fwd = [0usize, 3].map(|j| oriented(DeterministicBox::one_bit(j), false));
        assert_eq!(fwd.map(|d| d.j), [4, 7]);
        assert!(fwd.iter().all(|d| d.needs_bob_to_alice() && !d.needs_alice_to_bob()));
        let mix = crate::correlation::mix(&[(0.5, fwd[0].as_correlation()), (0.5, fwd[1].as_correlation())]).unwrap();
        assert!(mix.near(&Correlation16::pr_box()));
    }

    #[test]
    fn newtonian_embedding_matches_bare_simulation() {
        let pairs: Vec<_> = theta_grid(4).into_iter().map(MeasurementPair::from_angle).collect();
        let bare = run_singlet_sim(&Variant::CBoxGeneral { s: 0.3 }, &pairs, 3000, 5).unwrap();
        let (a, b) = events(1.0, 1e6);
        let emb = embed_singlet(&SrxConfig::newtonian(), &a, &b, Variant::CBoxGeneral { s: 0.3 }, &pairs, None, 3000, 5, EmbedOptions::default()).unwrap();
        assert_eq!(emb.stats, bare.points);
        assert!(emb.run.delivered);
        assert_eq!(emb.run.ontic_total().breakdowns, 0);
    }

    #[test]
    fn relabeled_run_still_reproduces_targets() {
        let pairs = [MeasurementPair::from_angle(0.0)];
        let (a, b) = events(-1.0, 0.5);
        let emb = embed_singlet(&SrxConfig::special_relativity(), &a, &b, Variant::PrBox, &pairs, None, 500, 2, EmbedOptions::default()).unwrap();
        assert!(emb.run.relabeled);
        assert_eq!(emb.stats[0].estimate, 1.0);
    }

    #[test]
    fn breakdown_under_special_relativity() {
        let pairs = [MeasurementPair::from_angle(0.0)];
        let (a, b) = events(1.0, 5.0);
        for policy in [BreakdownPolicy::LocalMarginal, BreakdownPolicy::FairCoin, BreakdownPolicy::DefaultInput] {
            let opts = EmbedOptions { policy, ..EmbedOptions::default() };
            let emb = embed_singlet(&SrxConfig::special_relativity(), &a, &b, Variant::PrBox, &pairs, None, 4000, 9, opts).unwrap();
            assert!(!emb.run.delivered);
            assert_eq!(emb.run.ontic_total().breakdowns, 4000);
            // Perfect correlation at θ = 0 is lost.
            assert!(emb.stats[0].estimate < 0.95, "{policy:?}: {}", emb.stats[0].estimate);
            // Bob's marginal stays fair.
            assert!((emb.stats[0].mean_b - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn probe_signal_is_exactly_zero_on_mirrored_marginals() {
        let pairs: Vec<_> = theta_grid(3).into_iter().map(MeasurementPair::from_angle).collect();
        let (a, b) = events(1.0, 0.0);
        let emb = embed_singlet(&SrxConfig::newtonian(), &a, &b, Variant::TonerBacon, &pairs, Some([1.0, 0.0, 0.0]), 2000, 4, EmbedOptions::default()).unwrap();
        assert_eq!(emb.signal.antithetic, 0.0);
        assert!(emb.signal.raw < 5.0 * emb.signal.raw_se.max(1e-3));
        assert_eq!(emb.probe_stats.len(), 3);
        let ops = emb.operational();
        assert_eq!(ops.i, 0.5);
    }

    #[test]
    fn strict_mode_refuses_trace_and_trace_is_separate() {
        let pairs = [MeasurementPair::from_angle(0.5)];
        let (a, b) = events(1.0, 0.0);
        let strict = EmbedOptions { oblivious_strict: true, keep_ontic_trace: true, ..EmbedOptions::default() };
        assert!(embed_singlet(&SrxConfig::newtonian(), &a, &b, Variant::PrBox, &pairs, None, 10, 1, strict).is_err());
        let open = EmbedOptions { keep_ontic_trace: true, sample_records: 5, ..EmbedOptions::default() };
        let emb = embed_singlet(&SrxConfig::newtonian(), &a, &b, Variant::PrBox, &pairs, None, 10, 1, open).unwrap();
        assert_eq!(emb.run.ontic_trace.as_ref().unwrap().len(), 10);
        assert_eq!(emb.run.operational_sample.len(), 5);
        assert!(emb.run.audit.clean());
    }

    #[test]
    fn cbox_resource_embedding_reproduces_the_resource() {
        let (a, b) = events(1.0, 0.0);
        for s in [0.0, 0.5, 1.0] {
            let (_, emb) = embed_cbox(&SrxConfig::newtonian(), &a, &b, CBoxScheme::Resource { s }, 40_000, 3, EmbedOptions::default()).unwrap();
            let p = emb.empirical.unwrap();
            let target = cbox_resource(&s).unwrap();
            for (e, t) in p.entries().iter().zip(target.entries()) {
                assert!((e - t).abs() < 0.02, "s = {s}");
            }
            assert!((signaling(&p).s - s).abs() < 0.03);
        }
    }

    #[test]
    fn cbox_relabeled_is_pr_box_at_zero() {
        let (a, b) = events(-1.0, 0.0);
        let (_, emb) = embed_cbox(&SrxConfig::newtonian(), &a, &b, CBoxScheme::Resource { s: 0.0 }, 20_000, 3, EmbedOptions::default()).unwrap();
        assert!(emb.run.relabeled);
        let p = emb.empirical.unwrap();
        assert!((p.chsh_lambda() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_embedding_violates_bell_without_signaling() {
        let (a, b) = events(1.0, 0.0);
        for r_star in [false, true] {
            let chi = ChiStar::new(0.9, 0.6).unwrap();
            let (protocol, emb) = embed_cbox(&SrxConfig::newtonian(), &a, &b, CBoxScheme::ReducedFreeWill { chi, r_star }, 60_000, 8, EmbedOptions::default()).unwrap();
            let p = emb.empirical.unwrap();
            // Λ = 2 + 2C with C = 0.6.
            assert!((p.chsh_lambda() - 3.2).abs() < 0.06, "Λ = {}", p.chsh_lambda());
            assert!(signaling(&p).s < 5.0 * emb.marginal_se);
            assert!(!protocol.full_free_will());
        }
    }

    #[test]
    fn ontic_reports_for_the_extreme_singlet_protocols() {
        let pairs: Vec<_> = theta_grid(3).into_iter().map(MeasurementPair::from_angle).collect();
        let (a, b) = events(1.0, 0.0);
        for (variant, declared) in [(Variant::TonerBacon, (1.0, 0.0)), (Variant::PrBox, (0.0, 0.5))] {
            let protocol = SingletProtocol { variant, pairs: pairs.clone(), probe: Some([1.0, 0.0, 0.0]) };
            let emb = embed_singlet(&SrxConfig::newtonian(), &a, &b, variant, &pairs, protocol.probe, 1000, 3, EmbedOptions::default()).unwrap();
            let report = ontic_vs_operational_report(&protocol, &emb.run, emb.operational()).unwrap();
            assert_eq!((report.fine.s_lambda, report.fine.i_lambda), (1.0, 0.0));
            let d = report.declared.clone().unwrap();
            assert_eq!((d.s_lambda, d.i_lambda), declared);
            assert_eq!((report.trivial.s_lambda, report.trivial.i_lambda), (0.0, 0.5));
            assert!(report.consistent() && report.trivial_checks.holds());
            assert_eq!(report.fine_checks.complementarity_slack, 0.0);
        }
    }

    #[test]
    fn r_star_conditional_matches_advisory() {
        let chi = ChiStar::new(0.9, 0.6).unwrap();
        let alpha = chi.alpha;
        let protocol = CBoxProtocol::new(CBoxScheme::ReducedFreeWill { chi, r_star: true }).unwrap();
        let rs = RStar { alpha };
        for j in 0..8 {
            let state = DeterministicBox::zero_bit(j);
            let sh = CBoxShared { state, bound_mode: true, sends_bit: false, a: 0, b: 0, u_sender: 0.0, u_receiver: 0.0, u_shared: 0.0 };
            for a in 0..2u8 {
                let p = protocol.receiver_conditional(&sh, true, Some(a));
                assert!((p - rs.bob_input_probs(state, a).unwrap()[1]).abs() < 1e-15);
            }
        }
    }
}
