//! Operational signaling S, local randomness I, their per-ontic-state
//! counterparts S_λ and I_λ, and spontaneity of a joint input/output
//! distribution.

use serde::Serialize;

use crate::correlation::{index, Correlation16, INPUTS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalReport<T> {
    pub s_a_to_b: T,
    pub s_b_to_a: T,
    pub s: T,
    /// (δ_I, δ_II, δ_III, δ_IV).
    pub deltas: [T; 4],
}

/// The four no-signaling violations:
///
/// * δ_I   = P(y=0|10) - P(y=0|00)
/// * δ_II  = P(y=0|01) - P(y=0|11)
/// * δ_III = P(x=0|10) - P(x=0|11)
/// * δ_IV  = P(x=0|00) - P(x=0|01)
///
/// Written directly from the sums of box entries rather than through the
/// marginal helpers, so [`signaling`] and `max |δ|` are two separate paths.
pub fn deltas<T: Scalar>(p: &Correlation16<T>) -> [T; 4] {
    let e = |a, b, x, y| p.entries()[index(a, b, x, y)].clone();
    let d1 = (e(1, 0, 0, 0) + e(1, 0, 1, 0)) - (e(0, 0, 0, 0) + e(0, 0, 1, 0));
    let d2 = (e(0, 1, 0, 0) + e(0, 1, 1, 0)) - (e(1, 1, 0, 0) + e(1, 1, 1, 0));
    let d3 = (e(1, 0, 0, 0) + e(1, 0, 0, 1)) - (e(1, 1, 0, 0) + e(1, 1, 0, 1));
    let d4 = (e(0, 0, 0, 0) + e(0, 0, 0, 1)) - (e(0, 1, 0, 0) + e(0, 1, 0, 1));
    [d1, d2, d3, d4]
}

pub fn signaling<T: Scalar>(p: &Correlation16<T>) -> SignalReport<T> {
    let mut a_to_b = T::zero();
    for b in 0..2 {
        for y in 0..2 {
            let gap = (p.marginal_y(0, b, y) - p.marginal_y(1, b, y)).abs();
            a_to_b = T::max_of(a_to_b, gap);
        }
    }
    let mut b_to_a = T::zero();
    for a in 0..2 {
        for x in 0..2 {
            let gap = (p.marginal_x(a, 0, x) - p.marginal_x(a, 1, x)).abs();
            b_to_a = T::max_of(b_to_a, gap);
        }
    }
    SignalReport {
        s: T::max_of(a_to_b.clone(), b_to_a.clone()),
        s_a_to_b: a_to_b,
        s_b_to_a: b_to_a,
        deltas: deltas(p),
    }
}

/// `max_j |δ_j|`.
pub fn signal_from_deltas<T: Scalar>(p: &Correlation16<T>) -> T {
    deltas(p).into_iter().fold(T::zero(), |m, d| T::max_of(m, d.abs()))
}

/// I = sup_{a,b} min_z P(z|a,b), scanning both parties' marginals and taking
/// the larger.
pub fn randomness<T: Scalar>(p: &Correlation16<T>) -> T {
    INPUTS.iter().fold(T::zero(), |best, &(a, b)| {
        let alice = T::min_of(p.marginal_x(a, b, 0), p.marginal_x(a, b, 1));
        let bob = T::min_of(p.marginal_y(a, b, 0), p.marginal_y(a, b, 1));
        T::max_of(best, T::max_of(alice, bob))
    })
}

/// S and I of one box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationalMetrics<T> {
    pub s: T,
    pub i: T,
}

pub fn operational_metrics<T: Scalar>(p: &Correlation16<T>) -> OperationalMetrics<T> {
    OperationalMetrics { s: signaling(p).s, i: randomness(p) }
}

/// Ontic signaling and indeterminism of an ensemble of per-λ boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnticMetrics<T> {
    pub s_lambda: T,
    pub i_lambda: T,
}

impl<T: Scalar> OnticMetrics<T> {
    /// S_λ + 2 I_λ.
    pub fn complementarity_sum(&self) -> T {
        self.s_lambda.clone() + T::ratio(2, 1) * self.i_lambda.clone()
    }
}

fn validate_ensemble<T: Scalar>(ensemble: &[(T, Correlation16<T>)]) -> Result<()> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut total = T::zero();
    for (w, _) in ensemble {
        if !w.nonneg() {
            return Err(Error::NegativeWeight(w.to_f64()));
        }
        total = total + w.clone();
    }
    if !total.near(&T::one()) {
        return Err(Error::WeightSum(total.to_f64()));
    }
    Ok(())
}

/// Worst case over the ontic states carrying positive weight.
pub fn ontic_metrics<T: Scalar>(ensemble: &[(T, Correlation16<T>)]) -> Result<OnticMetrics<T>> {
    validate_ensemble(ensemble)?;
    let mut out = OnticMetrics { s_lambda: T::zero(), i_lambda: T::zero() };
    for (w, member) in ensemble {
        if *w <= T::zero() {
            continue;
        }
        out.s_lambda = T::max_of(out.s_lambda, signaling(member).s);
        out.i_lambda = T::max_of(out.i_lambda, randomness(member));
    }
    Ok(out)
}

/// Weight-averaged variant: Σ_λ w_λ S(P_λ), Σ_λ w_λ I(P_λ).
pub fn ontic_metrics_averaged<T: Scalar>(ensemble: &[(T, Correlation16<T>)]) -> Result<OnticMetrics<T>> {
    validate_ensemble(ensemble)?;
    let mut out = OnticMetrics { s_lambda: T::zero(), i_lambda: T::zero() };
    for (w, member) in ensemble {
        out.s_lambda = out.s_lambda + w.clone() * signaling(member).s;
        out.i_lambda = out.i_lambda + w.clone() * randomness(member);
    }
    Ok(out)
}

/// Full joint distribution P(a,b,x,y), packed like [`Correlation16`].
#[derive(Debug, Clone, PartialEq)]
pub struct Joint<T> {
    entries: [T; 16],
}

impl<T: Scalar> Joint<T> {
    pub fn new(entries: [T; 16]) -> Result<Self> {
        let mut total = T::zero();
        for (i, p) in entries.iter().enumerate() {
            if !p.nonneg() {
                return Err(Error::NegativeEntry { index: i, value: p.to_f64() });
            }
            total = total + p.clone();
        }
        if !total.near(&T::one()) {
            return Err(Error::WeightSum(total.to_f64()));
        }
        Ok(Self { entries })
    }

    /// P(a,b) · P(x,y|a,b).
    pub fn from_box(input_dist: [T; 4], p: &Correlation16<T>) -> Result<Self> {
        Self::new(std::array::from_fn(|i| {
            let row = i >> 2;
            input_dist[row].clone() * p.entries()[i].clone()
        }))
    }

    pub fn entries(&self) -> &[T; 16] {
        &self.entries
    }

    fn sum_where(&self, pred: impl Fn(u8, u8, u8, u8) -> bool) -> T {
        self.entries.iter().enumerate().fold(T::zero(), |acc, (i, p)| {
            let (a, b, x, y) = crate::correlation::unpack(i);
            if pred(a, b, x, y) {
                acc + p.clone()
            } else {
                acc
            }
        })
    }

    pub fn input_distribution(&self) -> [T; 4] {
        std::array::from_fn(|row| {
            let (a, b) = INPUTS[row];
            self.sum_where(|aa, bb, _, _| aa == a && bb == b)
        })
    }

    /// The conditional box P(x,y|a,b); `None` if some input pair never occurs.
    pub fn conditional_box(&self) -> Option<Correlation16<T>> {
        let pab = self.input_distribution();
        if pab.iter().any(|p| *p <= T::zero()) {
            return None;
        }
        Correlation16::new(std::array::from_fn(|i| self.entries[i].clone() / pab[i >> 2].clone())).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpontaneityReport<T> {
    pub spontaneous: bool,
    /// Largest |P(A|B,Y) - P(A)| or |P(B|A,X) - P(B)| over conditioning
    /// events of positive probability.
    pub max_deviation: T,
    /// Signal of the conditional box, when every input pair has support.
    pub box_signal: Option<T>,
}

/// Spontaneity: P(A|B,Y) = P(A) and P(B|A,X) = P(B). Conditioning events of
/// zero probability are skipped. When the check passes, operational
/// no-signaling of the conditional box is asserted as a cross-check and a
/// failure surfaces as [`Error::Invariant`].
pub fn spontaneity_check<T: Scalar>(joint: &Joint<T>) -> Result<SpontaneityReport<T>> {
    let mut worst = T::zero();
    let mut ok = true;
    for a in 0..2u8 {
        let pa = joint.sum_where(|aa, _, _, _| aa == a);
        for b in 0..2u8 {
            for y in 0..2u8 {
                let pby = joint.sum_where(|_, bb, _, yy| bb == b && yy == y);
                if pby <= T::zero() {
                    continue;
                }
                let joint_aby = joint.sum_where(|aa, bb, _, yy| aa == a && bb == b && yy == y);
                let dev = (joint_aby / pby - pa.clone()).abs();
                ok &= dev.near(&T::zero());
                worst = T::max_of(worst, dev);
            }
        }
    }
    for b in 0..2u8 {
        let pb = joint.sum_where(|_, bb, _, _| bb == b);
        for a in 0..2u8 {
            for x in 0..2u8 {
                let pax = joint.sum_where(|aa, _, xx, _| aa == a && xx == x);
                if pax <= T::zero() {
                    continue;
                }
                let joint_bax = joint.sum_where(|aa, bb, xx, _| aa == a && bb == b && xx == x);
                let dev = (joint_bax / pax - pb.clone()).abs();
                ok &= dev.near(&T::zero());
                worst = T::max_of(worst, dev);
            }
        }
    }
    let box_signal = joint.conditional_box().map(|p| signaling(&p).s);
    if ok {
        if let Some(s) = &box_signal {
            if !s.near(&T::zero()) {
                return Err(Error::Invariant(format!(
                    "spontaneous joint with signaling conditional box (S = {})",
                    s.to_f64()
                )));
            }
        }
    }
    Ok(SpontaneityReport { spontaneous: ok, max_deviation: worst, box_signal })
}
