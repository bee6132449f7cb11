//! Singlet statistics from a one-bit C-box plus two shared random
//! directions η₁, η₂.
//!
//! Alice feeds υ_A = sgn(n_A·η₁) ⊕ sgn(n_A·η₂) into the box; Bob feeds
//! the complement of υ_B = sgn(n_B·η₊) ⊕ sgn(n_B·η₋), with η± = η₁ ± η₂.
//! With the fragment's sign convention (x ⊕ y = a·(b⊕1) on a PR box) this
//! makes the box outputs satisfy α ⊕ β = υ_A·υ_B, which is the product form
//! the singlet construction needs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxes::DeterministicBox;
use crate::error::{Error, Result};
use crate::rng::{stream, trial_rng};

pub type Vec3 = [f64; 3];

pub fn dot(u: &Vec3, v: &Vec3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub fn norm(u: &Vec3) -> f64 {
    dot(u, u).sqrt()
}

fn add(u: &Vec3, v: &Vec3) -> Vec3 {
    [u[0] + v[0], u[1] + v[1], u[2] + v[2]]
}

fn sub(u: &Vec3, v: &Vec3) -> Vec3 {
    [u[0] - v[0], u[1] - v[1], u[2] - v[2]]
}

fn neg(u: &Vec3) -> Vec3 {
    [-u[0], -u[1], -u[2]]
}

/// 1 if m ≥ 0, else 0.
pub fn sgn(m: f64) -> u8 {
    u8::from(m >= 0.0)
}

/// Uniform direction on S²: cos(polar angle) uniform on [-1, 1], azimuth
/// uniform on [0, 2π).
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPair {
    pub n_a: Vec3,
    pub n_b: Vec3,
}

impl MeasurementPair {
    pub fn new(n_a: Vec3, n_b: Vec3) -> Result<Self> {
        for (name, v) in [("n_a", &n_a), ("n_b", &n_b)] {
            if (norm(v) - 1.0).abs() > 1e-12 {
                return Err(Error::Geometry(format!("{name} has norm {}", norm(v))));
            }
        }
        Ok(Self { n_a, n_b })
    }

    /// n_A = ẑ, n_B = (sin θ, 0, cos θ).
    pub fn from_angle(theta: f64) -> Self {
        Self { n_a: [0.0, 0.0, 1.0], n_b: [theta.sin(), 0.0, theta.cos()] }
    }

    pub fn target(&self) -> f64 {
        0.5 * (1.0 + dot(&self.n_a, &self.n_b))
    }
}

/// θ_k = kπ/(n-1) for k = 0..n.
pub fn theta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 * std::f64::consts::PI / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// Box/antibox d^{0_1}, d^{3_1} chosen by a shared fair bit; no
    /// classical communication.
    PrBox,
    /// d^{0_1} every trial; Alice sends υ_A.
    TonerBacon,
    /// With probability `s` the signaling path (d^{0_1}, one bit sent),
    /// otherwise the PR path. The resource is then
    /// ((1+s)/2) d^{0_1} + ((1-s)/2) d^{3_1}: S_R = s, I_R = (1-s)/2.
    CBoxGeneral { s: f64 },
}

impl Variant {
    pub fn general(s_r: f64, i_r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s_r) || (s_r + 2.0 * i_r - 1.0).abs() > 1e-2 {
            return Err(Error::Variant(format!("(S_R, I_R) = ({s_r}, {i_r}) is not on S_R + 2 I_R = 1")));
        }
        Ok(Variant::CBoxGeneral { s: s_r })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Variant::PrBox => "prbox",
            Variant::TonerBacon => "toner-bacon",
            Variant::CBoxGeneral { .. } => "cbox-general",
        }
    }

    pub fn parse(name: &str, s: Option<f64>) -> Result<Self> {
        match name {
            "prbox" | "pr" => Ok(Variant::PrBox),
            "toner-bacon" | "tonerbacon" | "tb" => Ok(Variant::TonerBacon),
            "cbox-general" | "general" => {
                let s = s.ok_or_else(|| Error::Variant("cbox-general needs s".into()))?;
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Variant(format!("s = {s} outside [0, 1]")));
                }
                Ok(Variant::CBoxGeneral { s })
            }
            other => Err(Error::Variant(format!("unknown variant {other:?}"))),
        }
    }

    /// (S_R, I_R) of the resource.
    pub fn resource_metrics(&self) -> (f64, f64) {
        match self {
            Variant::PrBox => (0.0, 0.5),
            Variant::TonerBacon => (1.0, 0.0),
            Variant::CBoxGeneral { s } => (*s, (1.0 - s) / 2.0),
        }
    }
}

/// The hidden data shared before a trial: χ⁺ = (η₁, η₂) and the box draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharedRandomness {
    pub eta1: Vec3,
    pub eta2: Vec3,
    pub resource: CBoxInstance,
}

/// Which deterministic box realizes the C-box this trial, and whether the
/// trial sends a classical bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CBoxInstance {
    pub state: DeterministicBox,
    pub sends_bit: bool,
}

impl SharedRandomness {
    /// Draw order is fixed: η₁, η₂, the box bit, then the path uniform.
    pub fn draw<R: Rng + ?Sized>(variant: &Variant, rng: &mut R) -> Self {
        let eta1 = random_unit_vector(rng);
        let eta2 = random_unit_vector(rng);
        let chi: bool = rng.random();
        let path: f64 = rng.random();
        let pr = || CBoxInstance { state: DeterministicBox::one_bit(if chi { 3 } else { 0 }), sends_bit: false };
        let signal = CBoxInstance { state: DeterministicBox::one_bit(0), sends_bit: true };
        let resource = match variant {
            Variant::PrBox => pr(),
            Variant::TonerBacon => signal,
            Variant::CBoxGeneral { s } => {
                if path < *s {
                    signal
                } else {
                    pr()
                }
            }
        };
        Self { eta1, eta2, resource }
    }

    /// η → -η; flips both parties' outcomes while leaving the box inputs
    /// and hence the XOR unchanged.
    pub fn antithetic(&self) -> Self {
        Self { eta1: neg(&self.eta1), eta2: neg(&self.eta2), resource: self.resource }
    }
}

pub fn alice_input(n_a: &Vec3, eta1: &Vec3, eta2: &Vec3) -> u8 {
    sgn(dot(n_a, eta1)) ^ sgn(dot(n_a, eta2))
}

pub fn bob_input(n_b: &Vec3, eta1: &Vec3, eta2: &Vec3) -> u8 {
    sgn(dot(n_b, &add(eta1, eta2))) ^ sgn(dot(n_b, &sub(eta1, eta2)))
}

/// What Alice's side sends towards Bob: her box input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AliceMessage {
    pub upsilon_a: u8,
}

/// Returns (υ_A, n_A, box output α, message).
pub fn alice_step(n_a: &Vec3, eta1: &Vec3, eta2: &Vec3, resource: &CBoxInstance) -> (u8, u8, u8, AliceMessage) {
    let upsilon_a = alice_input(n_a, eta1, eta2);
    debug_assert!(!resource.state.needs_bob_to_alice());
    let alpha = resource.state.outputs(upsilon_a, 0).0;
    (upsilon_a, alpha ^ sgn(dot(n_a, eta1)), alpha, AliceMessage { upsilon_a })
}

/// Returns (υ_B, n_B, box output β) once Alice's box input is known.
pub fn bob_step(n_b: &Vec3, eta1: &Vec3, eta2: &Vec3, resource: &CBoxInstance, msg: &AliceMessage) -> (u8, u8, u8) {
    let upsilon_b = bob_input(n_b, eta1, eta2);
    let beta = resource.state.outputs(msg.upsilon_a, upsilon_b ^ 1).1;
    (upsilon_b, beta ^ sgn(dot(n_b, &add(eta1, eta2))) ^ 1, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub upsilon_a: u8,
    pub upsilon_b: u8,
    pub alpha_out: u8,
    pub beta_out: u8,
    pub n_a: u8,
    pub n_b: u8,
    pub variant: &'static str,
}

pub fn run_trial(variant: &Variant, pair: &MeasurementPair, shared: &SharedRandomness) -> TrialRecord {
    let (upsilon_a, n_a, alpha_out, msg) = alice_step(&pair.n_a, &shared.eta1, &shared.eta2, &shared.resource);
    let (upsilon_b, n_b, beta_out) = bob_step(&pair.n_b, &shared.eta1, &shared.eta2, &shared.resource, &msg);
    TrialRecord { upsilon_a, upsilon_b, alpha_out, beta_out, n_a, n_b, variant: variant.tag() }
}

/// Integer tallies; merging is associative and exact, so the reduction is
/// schedule-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub xor_ones: u64,
    pub a_ones: u64,
    pub b_ones: u64,
    pub comm_bits: u64,
    /// Outcome counts over the trial and its η → -η mirror (2 per trial).
    pub mirror_a_ones: u64,
    pub mirror_b_ones: u64,
}

impl Tally {
    pub fn merge(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            xor_ones: self.xor_ones + o.xor_ones,
            a_ones: self.a_ones + o.a_ones,
            b_ones: self.b_ones + o.b_ones,
            comm_bits: self.comm_bits + o.comm_bits,
            mirror_a_ones: self.mirror_a_ones + o.mirror_a_ones,
            mirror_b_ones: self.mirror_b_ones + o.mirror_b_ones,
        }
    }

    pub fn record(&mut self, primary: (u8, u8), mirror: (u8, u8), bits: u64) {
        self.trials += 1;
        self.xor_ones += u64::from(primary.0 ^ primary.1);
        self.a_ones += u64::from(primary.0);
        self.b_ones += u64::from(primary.1);
        self.mirror_a_ones += u64::from(primary.0) + u64::from(mirror.0);
        self.mirror_b_ones += u64::from(primary.1) + u64::from(mirror.1);
        self.comm_bits += bits;
    }
}

/// Mean of a Bernoulli sample and its standard error √(p(1-p)/N).
pub fn mean_se(ones: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = ones as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStats {
    pub pair: MeasurementPair,
    pub tally: Tally,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub mean_a: f64,
    pub se_a: f64,
    pub mean_b: f64,
    pub se_b: f64,
    /// Marginals over trial and mirror; exactly ½ up to ties at m = 0.
    pub mirror_mean_a: f64,
    pub mirror_mean_b: f64,
    pub comm_bits_per_trial: f64,
}

impl PointStats {
    pub fn from_tally(pair: MeasurementPair, tally: Tally) -> Self {
        let n = tally.trials;
        let (estimate, stderr) = mean_se(tally.xor_ones, n);
        let (mean_a, se_a) = mean_se(tally.a_ones, n);
        let (mean_b, se_b) = mean_se(tally.b_ones, n);
        Self {
            pair,
            tally,
            estimate,
            stderr,
            target: pair.target(),
            mean_a,
            se_a,
            mean_b,
            se_b,
            mirror_mean_a: tally.mirror_a_ones as f64 / (2 * n) as f64,
            mirror_mean_b: tally.mirror_b_ones as f64 / (2 * n) as f64,
            comm_bits_per_trial: tally.comm_bits as f64 / n as f64,
        }
    }

    /// |estimate - target| in standard errors (0 when both vanish).
    pub fn z_score(&self) -> f64 {
        let gap = (self.estimate - self.target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingletStats {
    pub variant: Variant,
    pub seed: u64,
    pub trials: u64,
    pub points: Vec<PointStats>,
}

/// Runs `trials` independent trials at each measurement pair. Trial `t` of
/// point `k` draws its hidden data from its own counter-based stream.
pub fn run_singlet_sim(variant: &Variant, pairs: &[MeasurementPair], trials: u64, seed: u64) -> Result<SingletStats> {
    if trials == 0 {
        return Err(Error::OutOfRange { name: "trials", value: 0.0, range: "N ≥ 1" });
    }
    if let Variant::CBoxGeneral { s } = variant {
        if !(0.0..=1.0).contains(s) {
            return Err(Error::Variant(format!("s = {s} outside [0, 1]")));
        }
    }
    let points = pairs
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            let tally = (0..trials)
                .into_par_iter()
                .fold(Tally::default, |mut acc, t| {
                    let shared = SharedRandomness::draw(variant, &mut trial_rng(seed, stream::SHARED, k as u64, t));
                    let rec = run_trial(variant, pair, &shared);
                    let mirror = run_trial(variant, pair, &shared.antithetic());
                    acc.record((rec.n_a, rec.n_b), (mirror.n_a, mirror.n_b), u64::from(shared.resource.sends_bit));
                    acc
                })
                .reduce(Tally::default, Tally::merge);
            PointStats::from_tally(*pair, tally)
        })
        .collect();
    Ok(SingletStats { variant: *variant, seed, trials, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::FLOAT_TOLERANCE;

    #[test]
    fn sgn_convention() {
        assert_eq!(sgn(-0.5), 0);
        assert_eq!(sgn(0.0), 1);
        assert_eq!(sgn(-0.0), 1);
        assert_eq!(sgn(3.2), 1);
    }

    #[test]
    fn targets() {
        assert!((MeasurementPair::from_angle(0.0).target() - 1.0).abs() < FLOAT_TOLERANCE);
        assert!((MeasurementPair::from_angle(std::f64::consts::FRAC_PI_2).target() - 0.5).abs() < FLOAT_TOLERANCE);
        assert!((MeasurementPair::from_angle(std::f64::consts::FRAC_PI_3).target() - 0.75).abs() < FLOAT_TOLERANCE);
    }

    #[test]
    fn box_outputs_realize_product_of_inputs() {
        for j in [0, 3] {
            let res = CBoxInstance { state: DeterministicBox::one_bit(j), sends_bit: false };
            for ua in 0..2u8 {
                for ub in 0..2u8 {
                    let alpha = res.state.outputs(ua, 0).0;
                    let beta = res.state.outputs(ua, ub ^ 1).1;
                    assert_eq!(alpha ^ beta, ua & ub);
                }
            }
        }
    }

    #[test]
    fn aligned_alice_vector() {
        let e1 = [0.0, 0.0, 1.0];
        let e2 = [1.0, 0.0, 0.0];
        let res = CBoxInstance { state: DeterministicBox::one_bit(0), sends_bit: false };
        let (ua, na, _, _) = alice_step(&e1, &e1, &e2, &res);
        assert_eq!(ua, 1 ^ sgn(dot(&e1, &e2)));
        assert_eq!(na, 1);
    }

    #[test]
    fn antipodal_bob_flips_outcome() {
        let e1 = [0.3, -0.2, 0.932_737_905_308_881_5];
        let e2 = [-0.6, 0.7, 0.387_298_334_620_741_7];
        let nb = [0.48, 0.6, 0.64];
        let res = CBoxInstance { state: DeterministicBox::one_bit(3), sends_bit: false };
        let msg = AliceMessage { upsilon_a: 1 };
        let (ub1, y1, b1) = bob_step(&nb, &e1, &e2, &res, &msg);
        let (ub2, y2, b2) = bob_step(&neg(&nb), &e1, &e2, &res, &msg);
        // Both sgn terms of υ_B flip, so υ_B and β are unchanged.
        assert_eq!((ub1, b1), (ub2, b2));
        assert_eq!(y1 ^ y2, 1);
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = trial_rng(1, 2, 3, 4);
        for _ in 0..1000 {
            assert!((norm(&random_unit_vector(&mut rng)) - 1.0).abs() < 1e-12);
        }
        assert!(MeasurementPair::new([1.0, 0.0, 0.0], [0.0, 0.5, 0.0]).is_err());
    }

    #[test]
    fn small_run_is_deterministic() {
        let pairs: Vec<_> = theta_grid(3).into_iter().map(MeasurementPair::from_angle).collect();
        let a = run_singlet_sim(&Variant::PrBox, &pairs, 2000, 11).unwrap();
        let b = run_singlet_sim(&Variant::PrBox, &pairs, 2000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points[0].estimate, 1.0);
        for p in &a.points {
            assert_eq!(p.mirror_mean_a, 0.5);
            assert_eq!(p.mirror_mean_b, 0.5);
            assert_eq!(p.tally.comm_bits, 0);
        }
        let tb = run_singlet_sim(&Variant::TonerBacon, &pairs, 500, 11).unwrap();
        assert!(tb.points.iter().all(|p| p.tally.comm_bits == 500));
        assert!(run_singlet_sim(&Variant::PrBox, &pairs, 0, 1).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(Variant::parse("prbox", None).unwrap(), Variant::PrBox);
        assert!(Variant::parse("cbox-general", None).is_err());
        assert!(Variant::parse("magic", None).is_err());
        assert!(Variant::general(0.5, 0.25).is_ok());
        assert!(Variant::general(0.5, 0.5).is_err());
    }
}
