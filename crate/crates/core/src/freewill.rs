//! Models in which CHSH violation is bought by reducing free will: the
//! bound mode over local boxes, the partial four-box mix, the combined mode
//! with a fixed 0-bit fraction, and the mode mixture at a target C_Λ.
//! Also the accounting of the communicated resource and the input policies
//! that realize the conditioning trial by trial.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boxes::DeterministicBox;
use crate::conditioning::{free_will, suppressed_input_likelihood, InputConditioning};
use crate::correlation::{chsh_sign, mix, Correlation16, INPUTS};
use crate::decomposition::{construct_decomposition, FreeParams};
use crate::error::{Error, Result};
use crate::metrics::{randomness, signaling};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    L,
    F,
    LF,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreewillModel<T> {
    pub mode: Mode,
    pub alpha: T,
    /// 0-bit fraction (combined mode); 1 in the bound mode.
    pub l: T,
    /// Probability of the free mode (mixture mode); 0 in the bound mode.
    pub p_f: T,
    pub conditioning: InputConditioning<T>,
    pub correlation: Correlation16<T>,
    pub free_will: T,
    pub lambda: T,
}

impl<T: Scalar> FreewillModel<T> {
    pub fn c_lambda(&self) -> T {
        self.lambda.clone() * T::half() - T::one()
    }
}

fn check_range<T: Scalar>(name: &'static str, v: &T, lo: T, hi: T, range: &'static str) -> Result<()> {
    let below = *v < lo && !v.near(&lo);
    let above = *v > hi && !v.near(&hi);
    if below || above {
        return Err(Error::OutOfRange { name, value: v.to_f64(), range });
    }
    Ok(())
}

fn invariant<T: Scalar>(what: &str, got: &T, want: &T) -> Result<()> {
    if got.near(want) {
        Ok(())
    } else {
        Err(Error::Invariant(format!("{what}: got {}, expected {}", got.to_f64(), want.to_f64())))
    }
}

fn local_boxes() -> Vec<DeterministicBox> {
    (0..8).map(DeterministicBox::zero_bit).collect()
}

fn one_bit_boxes() -> Vec<DeterministicBox> {
    (0..8).map(DeterministicBox::one_bit).collect()
}

/// Certifies fragment membership through the constructive decomposition.
fn assert_in_fragment<T: Scalar>(p: &Correlation16<T>) -> Result<()> {
    construct_decomposition(p, &FreeParams::MinSquares).map(|_| ()).map_err(|e| Error::Invariant(format!("model left the fragment: {e}")))
}

/// Conditioning from a posterior over possibly repeated states, dropping
/// states that never occur.
fn posterior_conditioning<T: Scalar>(columns: Vec<(DeterministicBox, [T; 4])>) -> Result<InputConditioning<T>> {
    let (states, post): (Vec<_>, Vec<_>) = columns.into_iter().filter(|(_, col)| col.iter().any(|v| *v > T::zero())).unzip();
    InputConditioning::from_posterior(states, post, std::array::from_fn(|_| T::ratio(1, 4)))
}

/// Bound mode: the eight 0-bit boxes with the suppressed-input scheme at
/// weight α and uniform priors over boxes.
pub fn build_l_mode<T: Scalar>(alpha: T) -> Result<FreewillModel<T>> {
    let lik = suppressed_input_likelihood(&alpha)?;
    let conditioning = InputConditioning::from_likelihood(local_boxes(), lik, vec![T::ratio(1, 8); 8])?;
    let correlation = conditioning.induced_correlation()?;
    let strength = T::one() - T::ratio(2, 1) * alpha.clone();
    for &(a, b) in &INPUTS {
        let want = T::ratio(chsh_sign(a, b), 1) * strength.clone();
        invariant(&format!("E({a},{b})"), &correlation.correlator(a, b), &want)?;
    }
    invariant("S of the bound-mode box", &signaling(&correlation).s, &T::zero())?;
    let f = free_will(&conditioning);
    invariant("F", &f, &((T::ratio(2, 1) + T::ratio(4, 1) * alpha.clone()) / T::ratio(3, 1)))?;
    let lambda = correlation.chsh_lambda();
    invariant("Λ", &lambda, &(T::ratio(4, 1) * strength))?;
    assert_in_fragment(&correlation)?;
    Ok(FreewillModel { mode: Mode::L, alpha, l: T::one(), p_f: T::zero(), conditioning, correlation, free_will: f, lambda })
}

/// α at which the bound mode reaches a given Λ: α = (1 - Λ/4)/2.
pub fn alpha_for_lambda<T: Scalar>(lambda: T) -> T {
    (T::one() - lambda / T::ratio(4, 1)) * T::half()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialMix<T> {
    pub conditioning: InputConditioning<T>,
    pub correlation: Correlation16<T>,
}

/// Uniform mix of d^{0_0}..d^{3_0} with ρ(λ|ab) = ρ(ab|λ) taken from the
/// suppressed-input scheme. Only that subset is supported.
pub fn build_partial_l<T: Scalar>(alpha: T, subset: &[usize]) -> Result<PartialMix<T>> {
    if subset != [0, 1, 2, 3] {
        return Err(Error::UnsupportedSubset(format!("{subset:?}; only the first four 0-bit boxes")));
    }
    let lik = suppressed_input_likelihood(&alpha)?;
    let states: Vec<_> = subset.iter().map(|&j| DeterministicBox::zero_bit(j)).collect();
    let cols: Vec<[T; 4]> = subset.iter().map(|&j| lik[j].clone()).collect();
    let conditioning = InputConditioning::from_posterior(states, cols, std::array::from_fn(|_| T::ratio(1, 4)))?;
    let correlation = conditioning.induced_correlation()?;
    Ok(PartialMix { conditioning, correlation })
}

/// Combined mode: 0-bit boxes with total weight `l` under the suppressed
/// scheme, 1-bit boxes with total weight `1 - l` used freely.
pub fn build_lf_mode<T: Scalar>(alpha: T, l: T) -> Result<FreewillModel<T>> {
    check_range("l", &l, T::zero(), T::one(), "[0, 1]")?;
    let lik = suppressed_input_likelihood(&alpha)?;
    let mut columns: Vec<(DeterministicBox, [T; 4])> = local_boxes()
        .into_iter()
        .zip(lik)
        .map(|(d, col)| (d, std::array::from_fn(|r| T::half() * l.clone() * col[r].clone())))
        .collect();
    let free_weight = (T::one() - l.clone()) / T::ratio(8, 1);
    columns.extend(one_bit_boxes().into_iter().map(|d| (d, std::array::from_fn(|_| free_weight.clone()))));
    let conditioning = posterior_conditioning(columns)?;
    let correlation = conditioning.induced_correlation()?;
    let f = free_will(&conditioning);
    let suppression = T::one() - T::ratio(4, 1) * alpha.clone();
    invariant("F", &f, &(T::one() - l.clone() / T::ratio(3, 1) * suppression))?;
    let lambda = correlation.chsh_lambda();
    invariant("Λ", &lambda, &(T::ratio(4, 1) * (T::one() - T::ratio(2, 1) * alpha.clone() * l.clone())))?;
    // C_Λ = 4 - 3F - l.
    let c = lambda.clone() * T::half() - T::one();
    invariant("C_Λ", &c, &(T::ratio(4, 1) - T::ratio(3, 1) * f.clone() - l.clone()))?;
    assert_in_fragment(&correlation)?;
    Ok(FreewillModel { mode: Mode::LF, alpha, l, p_f: T::zero(), conditioning, correlation, free_will: f, lambda })
}

/// Free mode at violation C: local boxes used freely with weight 1 - C and
/// the box/antibox pair d^{0_1}, d^{3_1} with weight C/2 each.
pub fn free_mode_columns<T: Scalar>(c: &T) -> Vec<(DeterministicBox, T)> {
    let mut out: Vec<_> = local_boxes().into_iter().map(|d| (d, (T::one() - c.clone()) / T::ratio(8, 1))).collect();
    out.push((DeterministicBox::one_bit(0), c.clone() * T::half()));
    out.push((DeterministicBox::one_bit(3), c.clone() * T::half()));
    out
}

/// p_F = 1 - (3/C)(1 - F) for C > 0; 1 when C = 0.
pub fn free_mode_probability<T: Scalar>(f: &T, c: &T) -> T {
    if c.is_zero() {
        T::one()
    } else {
        T::one() - T::ratio(3, 1) / c.clone() * (T::one() - f.clone())
    }
}

/// Mixture of the bound mode tuned to C_Λ (free will 1 - C/3) and the free
/// mode at the same C_Λ, weighted to reach average free will `f`.
pub fn build_mixed_mode<T: Scalar>(f: T, c: T) -> Result<FreewillModel<T>> {
    check_range("C_lambda", &c, T::zero(), T::one(), "[0, 1]")?;
    let f = if c.is_zero() { T::one() } else { f };
    let floor = T::one() - c.clone() / T::ratio(3, 1);
    check_range("F", &f, floor, T::one(), "[1 - C/3, 1]")?;
    let p_f = free_mode_probability(&f, &c);
    let p_l = T::one() - p_f.clone();
    let alpha = (T::one() - c.clone()) / T::ratio(4, 1);

    let bound = build_l_mode(alpha.clone())?;
    let mut columns: Vec<(DeterministicBox, [T; 4])> = bound
        .conditioning
        .states()
        .iter()
        .zip(bound.conditioning.rho_lambda_given_ab())
        .map(|(d, col)| (*d, std::array::from_fn(|r| p_l.clone() * col[r].clone())))
        .collect();
    columns.extend(free_mode_columns(&c).into_iter().map(|(d, w)| (d, std::array::from_fn(|_| p_f.clone() * w.clone()))));
    let conditioning = posterior_conditioning(columns)?;
    let correlation = conditioning.induced_correlation()?;

    let free_part = mix(&free_mode_columns(&c).into_iter().map(|(d, w)| (w, d.as_correlation())).collect::<Vec<_>>())?;
    let expected = mix(&[(p_l.clone(), bound.correlation.clone()), (p_f.clone(), free_part)])?;
    if !correlation.near(&expected) {
        return Err(Error::Invariant("mixture box differs from the weighted sum of its modes".into()));
    }
    let fw = free_will(&conditioning);
    invariant("average F", &fw, &(p_f.clone() + p_l * bound.free_will))?;
    invariant("average F", &fw, &f)?;
    let lambda = correlation.chsh_lambda();
    invariant("Λ", &lambda, &(T::ratio(2, 1) + T::ratio(2, 1) * c))?;
    assert_in_fragment(&correlation)?;
    Ok(FreewillModel { mode: Mode::Mixed, alpha, l: T::zero(), p_f, conditioning, correlation, free_will: fw, lambda })
}

/// Lower bound on S_R + 2 I_R at free will F and violation C_Λ.
pub fn complementarity_bound<T: Scalar>(f: &T, c: &T) -> T {
    T::max_of(T::zero(), c.clone() - T::ratio(3, 1) * (T::one() - f.clone()))
}

/// The one-bit resource family: ((1+s)/2) d^{0_1} + ((1-s)/2) d^{3_1}.
/// s = 1 is the fixed signaling box, s = 0 the PR box.
pub fn cbox_resource<T: Scalar>(s: &T) -> Result<Correlation16<T>> {
    check_range("s", s, T::zero(), T::one(), "[0, 1]")?;
    mix(&[
        ((T::one() + s.clone()) * T::half(), DeterministicBox::one_bit(0).as_correlation()),
        ((T::one() - s.clone()) * T::half(), DeterministicBox::one_bit(3).as_correlation()),
    ])
}

/// Resource actually communicated when a bit is sent only a fraction `c`
/// of the time: (1 - c) d^{0_0} + c B_s. The idle trials output 00.
pub fn communicated_resource<T: Scalar>(c: &T, s: &T) -> Result<Correlation16<T>> {
    check_range("c", c, T::zero(), T::one(), "[0, 1]")?;
    mix(&[
        (T::one() - c.clone(), DeterministicBox::zero_bit(0).as_correlation()),
        (c.clone(), cbox_resource(s)?),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceAccount<T> {
    /// Fraction of trials that send a bit.
    pub c_comm: T,
    pub s: T,
    pub s_r: T,
    pub i_r: T,
    pub bound: T,
    pub slack: T,
}

/// Measures (S_R, I_R) of the communicated resource for a model at free
/// will `f` and violation `c`, using family parameter `s`.
pub fn resource_account<T: Scalar>(f: &T, c: &T, s: &T) -> Result<ResourceAccount<T>> {
    let bound = complementarity_bound(f, c);
    let c_comm = if c.is_zero() { T::zero() } else { free_mode_probability(f, c) * c.clone() };
    let resource = communicated_resource(&c_comm, s)?;
    let s_r = signaling(&resource).s;
    let i_r = randomness(&resource);
    let slack = s_r.clone() + T::ratio(2, 1) * i_r.clone() - bound.clone();
    if !slack.nonneg() {
        return Err(Error::Invariant(format!("S_R + 2 I_R below the bound by {}", -slack.to_f64())));
    }
    Ok(ResourceAccount { c_comm, s: s.clone(), s_r, i_r, bound, slack })
}

/// Trial-level realization of the mixture mode. The selector stream picks
/// the mode with P(free) = p_F; the bias stream draws inputs from ρ(ab|λ)
/// by inverse CDF in the bound mode. Free-mode inputs are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiStar {
    pub p_f: f64,
    pub alpha: f64,
    pub c: f64,
}

/// One trial's hidden choices: which mode, which box, and the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChiStarDraw {
    pub free_mode: bool,
    pub state: DeterministicBox,
    pub a: u8,
    pub b: u8,
}

impl ChiStar {
    pub fn new(f: f64, c: f64) -> Result<Self> {
        let model = build_mixed_mode(f, c)?;
        Ok(Self { p_f: model.p_f, alpha: model.alpha, c })
    }

    /// Inverse-CDF draw of an input row from four weights.
    fn draw_row(weights: &[f64; 4], u: f64) -> usize {
        let mut acc = 0.0;
        for (row, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return row;
            }
        }
        3
    }

    pub fn draw<R: Rng>(&self, selector: &mut R, chi: &mut R, bias: &mut R) -> ChiStarDraw {
        let free_mode = selector.random::<f64>() < self.p_f;
        if free_mode {
            let u: f64 = chi.random();
            let cols = free_mode_columns(&self.c);
            let mut acc = 0.0;
            let mut state = cols[cols.len() - 1].0;
            for (d, w) in &cols {
                acc += w;
                if u < acc {
                    state = *d;
                    break;
                }
            }
            let row = bias.random_range(0..4usize);
            let (a, b) = INPUTS[row];
            ChiStarDraw { free_mode, state, a, b }
        } else {
            let state = DeterministicBox::zero_bit(chi.random_range(0..8usize));
            let lik = suppressed_input_likelihood(&self.alpha).expect("alpha validated");
            let (a, b) = INPUTS[Self::draw_row(&lik[state.j], bias.random())];
            ChiStarDraw { free_mode, state, a, b }
        }
    }
}

/// Advisory carried from Alice to Bob in the second reduced-free-will
/// method: Bob's input distribution given Alice's input and the hidden
/// box, P(b|a,λ) ∝ ρ(ab|λ) under the suppressed scheme at strength α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RStar {
    pub alpha: f64,
}

impl RStar {
    /// `[P(b=0|a,λ), P(b=1|a,λ)]`.
    pub fn bob_input_probs(&self, state: DeterministicBox, a: u8) -> Result<[f64; 2]> {
        if state.kind != crate::boxes::BoxKind::ZeroBit {
            return Ok([0.5, 0.5]);
        }
        let lik = suppressed_input_likelihood(&self.alpha)?;
        let col = lik[state.j];
        let (w0, w1) = (col[2 * a as usize], col[2 * a as usize + 1]);
        Ok([w0 / (w0 + w1), w1 / (w0 + w1)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::spontaneity_check;
    use crate::scalar::q;

    #[test]
    fn bound_mode_endpoints() {
        let full = build_l_mode(q(1, 4)).unwrap();
        assert_eq!((full.free_will, full.lambda), (q(1, 1), q(2, 1)));
        let none = build_l_mode(q(0, 1)).unwrap();
        assert_eq!((none.free_will.clone(), none.lambda.clone()), (q(2, 3), q(4, 1)));
        assert_eq!(none.correlation, Correlation16::pr_box());
        assert!(build_l_mode(q(3, 10)).is_err());
    }

    #[test]
    fn bound_mode_tsirelson_point() {
        let s2 = 2f64.sqrt();
        let m = build_l_mode((2.0 - s2) / 4.0).unwrap();
        assert!((m.lambda - 2.0 * s2).abs() < 1e-12);
        assert!((m.free_will - (4.0 - s2) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_mix_signal() {
        for (a, want) in [(q(0, 1), q(1, 3)), (q(1, 4), q(0, 1)), (q(1, 8), q(1, 6))] {
            let pm = build_partial_l(a, &[0, 1, 2, 3]).unwrap();
            assert_eq!(signaling(&pm.correlation).s, want);
        }
        assert!(matches!(build_partial_l(q(0, 1), &[0, 1, 2]), Err(Error::UnsupportedSubset(_))));
    }

    #[test]
    fn partial_mix_table() {
        // Rows ab; columns xy = 00, 01, 10, 11.
        let (a, b) = (q(1, 10), q(3, 10));
        let pm = build_partial_l(a.clone(), &[0, 1, 2, 3]).unwrap();
        let z = q(0, 1);
        let two = q(2, 1) * b.clone();
        let three = q(3, 1) * b.clone();
        let want = [
            [two.clone(), a.clone(), z.clone(), b.clone()],
            [three.clone(), z.clone(), a.clone(), z.clone()],
            [a.clone(), two, b, z.clone()],
            [three, z.clone(), a, z],
        ];
        for row in 0..4 {
            for col in 0..4 {
                assert_eq!(pm.correlation.entries()[4 * row + col], want[row][col], "row {row} col {col}");
            }
        }
    }

    #[test]
    fn partial_mix_is_not_spontaneous() {
        let pm = build_partial_l(q(1, 10), &[0, 1, 2, 3]).unwrap();
        let joint = pm.conditioning.induced_joint().unwrap();
        assert!(!spontaneity_check(&joint).unwrap().spontaneous);
        let full = build_l_mode(q(1, 10)).unwrap();
        assert!(spontaneity_check(&full.conditioning.induced_joint().unwrap()).unwrap().spontaneous);
    }

    #[test]
    fn combined_mode_cases() {
        let pure_free = build_lf_mode(q(1, 10), q(0, 1)).unwrap();
        assert_eq!((pure_free.free_will, pure_free.lambda), (q(1, 1), q(4, 1)));
        let all_local = build_lf_mode(q(1, 10), q(1, 1)).unwrap();
        let bound = build_l_mode(q(1, 10)).unwrap();
        assert_eq!(all_local.correlation, bound.correlation);
        assert_eq!(all_local.free_will, bound.free_will);
        let half = build_lf_mode(q(0, 1), q(1, 2)).unwrap();
        assert_eq!((half.free_will, half.lambda), (q(5, 6), q(4, 1)));
    }

    #[test]
    fn mixture_mode_probabilities() {
        assert_eq!(build_mixed_mode(q(1, 1), q(1, 1)).unwrap().p_f, q(1, 1));
        assert_eq!(build_mixed_mode(q(2, 3), q(1, 1)).unwrap().p_f, q(0, 1));
        assert_eq!(build_mixed_mode(q(9, 10), q(1, 1)).unwrap().p_f, q(7, 10));
        let zero = build_mixed_mode(q(1, 2), q(0, 1)).unwrap();
        assert_eq!(zero.free_will, q(1, 1));
        assert!(build_mixed_mode(q(1, 2), q(1, 1)).is_err());
    }

    #[test]
    fn mixture_mode_is_spontaneous() {
        let m = build_mixed_mode(q(9, 10), q(3, 4)).unwrap();
        assert!(spontaneity_check(&m.conditioning.induced_joint().unwrap()).unwrap().spontaneous);
    }

    #[test]
    fn bound_values() {
        assert_eq!(complementarity_bound(&q(1, 1), &q(1, 1)), q(1, 1));
        assert_eq!(complementarity_bound(&q(2, 3), &q(1, 1)), q(0, 1));
        let c = 2f64.sqrt() - 1.0;
        assert!((complementarity_bound(&1.0, &c) - c).abs() < 1e-15);
    }

    #[test]
    fn extreme_resources_are_tight() {
        let tb = resource_account(&q(1, 1), &q(1, 1), &q(1, 1)).unwrap();
        assert_eq!((tb.s_r, tb.i_r, tb.slack), (q(1, 1), q(0, 1), q(0, 1)));
        let pr = resource_account(&q(1, 1), &q(1, 1), &q(0, 1)).unwrap();
        assert_eq!((pr.s_r, pr.i_r, pr.slack), (q(0, 1), q(1, 2), q(0, 1)));
    }

    #[test]
    fn r_star_prefers_the_satisfied_input() {
        let r = RStar { alpha: 0.0 };
        // d^{0_0} gets ab = 10 wrong, so after a = 1 Bob is steered to b = 1.
        assert_eq!(r.bob_input_probs(DeterministicBox::zero_bit(0), 1).unwrap(), [0.0, 1.0]);
        assert_eq!(r.bob_input_probs(DeterministicBox::zero_bit(0), 0).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn chi_star_draws_follow_scheme() {
        use rand::SeedableRng;
        let cs = ChiStar::new(2.0 / 3.0, 1.0).unwrap();
        let mut s = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut c = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let d = cs.draw(&mut s, &mut c, &mut b);
            assert!(!d.free_mode);
            // α = 0: the box never sees the input it gets wrong.
            let row = (2 * d.a + d.b) as usize;
            assert_ne!(Some(row), d.state.chsh_violating_row());
        }
    }
}
