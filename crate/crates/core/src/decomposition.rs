//! Decomposition of a box in the fragment into the sixteen extreme boxes,
//! membership and optimality certificates, and the split of the suppressed
//! input scheme into a uniform part and a PR-generating part.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::boxes::{DeterministicBox, ANTIBOX_PAIRS};
use crate::conditioning::{suppressed_input_likelihood, InputConditioning};
use crate::correlation::{index, Correlation16};
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::metrics::deltas;
use crate::scalar::{Scalar, Q};

/// Weights on the eight 0-bit boxes (`p0`) and the eight 1-bit boxes (`p1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition<T = Q> {
    pub p0: [T; 8],
    pub p1: [T; 8],
}

impl<T: Scalar> Decomposition<T> {
    pub fn p0_total(&self) -> T {
        self.p0.iter().fold(T::zero(), |a, w| a + w.clone())
    }

    pub fn p1_total(&self) -> T {
        self.p1.iter().fold(T::zero(), |a, w| a + w.clone())
    }

    /// `(weight, box)` pairs in [`DeterministicBox::all`] order.
    pub fn weighted_boxes(&self) -> Vec<(T, DeterministicBox)> {
        DeterministicBox::all()
            .zip(self.p0.iter().chain(self.p1.iter()))
            .map(|(d, w)| (w.clone(), d))
            .collect()
    }

    /// Σ_k w_k d_k, without requiring the weights to be normalized.
    pub fn reconstruct_entries(&self) -> [T; 16] {
        let mut out: [T; 16] = std::array::from_fn(|_| T::zero());
        for (w, d) in self.weighted_boxes() {
            if w.is_zero() {
                continue;
            }
            for (row, &(x, y)) in d.table().iter().enumerate() {
                let i = (row << 2) | ((x as usize) << 1) | y as usize;
                out[i] = out[i].clone() + w.clone();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Result<Correlation16<T>> {
        Correlation16::new(self.reconstruct_entries())
    }
}

/// How the three remaining degrees of freedom among the 1-bit weights are
/// fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeParams<T> {
    /// Minimize Σ_j (p¹_j)².
    MinSquares,
    /// Pair sums p¹_0 + p¹_3, p¹_1 + p¹_2, p¹_4 + p¹_7; the last pair takes
    /// the remainder of C_Λ.
    PairSums([T; 3]),
}

/// The 0-bit weights, each read off the single entry where only that box
/// contributes (a CHSH-negative output at its violating input).
pub fn local_weights<T: Scalar>(p: &Correlation16<T>) -> [T; 8] {
    std::array::from_fn(|j| {
        let d = DeterministicBox::zero_bit(j);
        let row = d.chsh_violating_row().expect("0-bit box");
        let (a, b) = ((row >> 1) as u8, (row & 1) as u8);
        let (x, y) = d.outputs(a, b);
        p.get(a, b, x, y).clone()
    })
}

/// Pair sums σ_k minimizing Σσ_k² subject to σ_k ≥ |δ_k| and Σσ_k = C.
/// The solution has the form σ_k = max(|δ_k|, τ).
fn water_fill<T: Scalar>(abs_deltas: &[T; 4], c: &T) -> Option<[T; 4]> {
    let total = abs_deltas.iter().fold(T::zero(), |a, d| a + d.clone());
    if !(c.clone() - total).nonneg() {
        return None;
    }
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| abs_deltas[i].partial_cmp(&abs_deltas[j]).expect("comparable"));
    for free in (1..=4).rev() {
        let clamped = order[free..].iter().fold(T::zero(), |a, &k| a + abs_deltas[k].clone());
        let tau = (c.clone() - clamped) / T::from_usize(free);
        let above_free = (tau.clone() - abs_deltas[order[free - 1]].clone()).nonneg();
        let below_clamped = free == 4 || (abs_deltas[order[free]].clone() - tau.clone()).nonneg();
        if above_free && below_clamped {
            return Some(std::array::from_fn(|k| T::max_of(abs_deltas[k].clone(), tau.clone())));
        }
    }
    None
}

/// Decomposes `p` into the sixteen extreme boxes. The 0-bit weights are
/// forced; the 1-bit weights satisfy Σ p¹ = C_Λ and the four pair
/// imbalances δ_j, with the remaining freedom fixed by `free`.
pub fn construct_decomposition<T: Scalar>(p: &Correlation16<T>, free: &FreeParams<T>) -> Result<Decomposition<T>> {
    let lambda = p.chsh_lambda();
    if !(lambda.clone() - T::ratio(2, 1)).nonneg() {
        return Err(Error::OutOfFragment(lambda.to_f64()));
    }
    let c = p.c_lambda();
    let d = deltas(p);
    // Pair k of ANTIBOX_PAIRS carries δ_k = p¹_second - p¹_first.
    let abs_d: [T; 4] = std::array::from_fn(|k| d[k].abs());
    let sums: [T; 4] = match free {
        FreeParams::MinSquares => water_fill(&abs_d, &c).ok_or_else(|| {
            Error::NotInFragment(format!(
                "pair imbalances need Σ|δ| = {} of 1-bit weight but only C_Λ = {} is available",
                abs_d.iter().fold(T::zero(), |a, x| a + x.clone()).to_f64(),
                c.to_f64()
            ))
        })?,
        FreeParams::PairSums(s) => {
            let last = c.clone() - s[0].clone() - s[1].clone() - s[2].clone();
            [s[0].clone(), s[1].clone(), s[2].clone(), last]
        }
    };
    let mut p1: [T; 8] = std::array::from_fn(|_| T::zero());
    for (k, &(first, second)) in ANTIBOX_PAIRS.iter().enumerate() {
        if !(sums[k].clone() - abs_d[k].clone()).nonneg() {
            return Err(Error::NotInFragment(format!(
                "pair ({first}, {second}) sum {} is below its imbalance {}",
                sums[k].to_f64(),
                abs_d[k].to_f64()
            )));
        }
        p1[first] = (sums[k].clone() - d[k].clone()) * T::half();
        p1[second] = (sums[k].clone() + d[k].clone()) * T::half();
    }
    let out = Decomposition { p0: local_weights(p), p1 };
    let rebuilt = out.reconstruct_entries();
    if !rebuilt.iter().zip(p.entries()).all(|(r, e)| r.near(e)) {
        return Err(Error::NotInFragment("the box lies outside the affine hull of the sixteen extreme boxes".into()));
    }
    Ok(out)
}

/// Constraint matrix with one column per extreme box (in
/// [`DeterministicBox::all`] order) and one row per box entry.
pub fn extreme_box_matrix() -> Vec<Vec<Q>> {
    let cols: Vec<Correlation16<Q>> = DeterministicBox::all().map(|d| d.as_correlation()).collect();
    (0..16).map(|i| cols.iter().map(|c| c.entries()[i].clone()).collect()).collect()
}

fn split_weights(x: &[Q]) -> Decomposition<Q> {
    Decomposition { p0: std::array::from_fn(|j| x[j].clone()), p1: std::array::from_fn(|j| x[8 + j].clone()) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub witness: Option<Decomposition<Q>>,
}

/// Exact test whether `p` is a convex combination of the sixteen extreme
/// boxes, with witness weights when it is.
pub fn membership_oracle(p: &Correlation16<Q>) -> Membership {
    let witness = lp::feasible(&extreme_box_matrix(), p.entries()).map(|x| split_weights(&x));
    Membership { member: witness.is_some(), witness }
}

/// Minimum of Σ p¹ over all decompositions of `p`, by exact LP.
pub fn min_one_bit_weight(p: &Correlation16<Q>) -> Result<(Q, Decomposition<Q>)> {
    let cost: Vec<Q> = (0..16).map(|k| if k < 8 { Q::zero() } else { Q::one() }).collect();
    match lp::minimize(&extreme_box_matrix(), p.entries(), &cost) {
        LpOutcome::Optimal { x, objective } => Ok((objective, split_weights(&x))),
        LpOutcome::Infeasible => Err(Error::NotInFragment("no non-negative weights reproduce the box".into())),
        LpOutcome::Unbounded => Err(Error::Lp("bounded problem reported unbounded".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostCertificate {
    pub c_lambda: Q,
    pub p1_total: Q,
    pub lp_minimum: Q,
    pub deltas: [Q; 4],
    pub optimal: bool,
    pub decomposition: Decomposition<Q>,
}

/// Communication cost of simulating `p`: certifies that the constructed
/// decomposition uses exactly C_Λ of 1-bit weight and that no decomposition
/// uses less.
pub fn communication_cost(p: &Correlation16<Q>) -> Result<CostCertificate> {
    let m = membership_oracle(p);
    if !m.member {
        return Err(Error::NotInFragment("membership oracle found no witness".into()));
    }
    let decomposition = construct_decomposition(p, &FreeParams::MinSquares)?;
    let (lp_minimum, _) = min_one_bit_weight(p)?;
    let c_lambda = p.c_lambda();
    let p1_total = decomposition.p1_total();
    let floor = if c_lambda > Q::zero() { c_lambda.clone() } else { Q::zero() };
    Ok(CostCertificate {
        optimal: p1_total == floor && lp_minimum == c_lambda,
        c_lambda,
        p1_total,
        lp_minimum,
        deltas: deltas(p),
        decomposition,
    })
}

/// Split of the suppressed-input scheme ρ = 4α ρ₀ + (1 - 4α) ρ*.
#[derive(Debug, Clone, PartialEq)]
pub struct InputModelDecomposition {
    pub alpha: Q,
    pub weight_local: Q,
    pub weight_star: Q,
    /// ρ₀(ab|λ) = ¼, one column per 0-bit box.
    pub rho_uniform: Vec<[Q; 4]>,
    /// ρ*(ab|λ): ⅓ on the three inputs each box satisfies, 0 elsewhere.
    pub rho_star: Vec<[Q; 4]>,
    /// Box generated by ρ₀ under a uniform prior over λ.
    pub uniform_box: Correlation16<Q>,
    /// Box generated by ρ* under a uniform prior over λ; a PR box.
    pub star_box: Correlation16<Q>,
}

fn eight_local_boxes() -> Vec<DeterministicBox> {
    (0..8).map(DeterministicBox::zero_bit).collect()
}

/// Splits a conditioning built from the suppressed-input scheme into its
/// uniform and PR-generating parts.
pub fn decompose_input_model(cond: &InputConditioning<Q>) -> Result<InputModelDecomposition> {
    if cond.states() != eight_local_boxes().as_slice() {
        return Err(Error::Conditioning("expected the eight 0-bit boxes as ontic states".into()));
    }
    let first = DeterministicBox::zero_bit(0).chsh_violating_row().expect("0-bit box");
    let alpha = cond.rho_ab_given_lambda()[0][first].clone();
    let expected = suppressed_input_likelihood(&alpha)?;
    if cond.rho_ab_given_lambda() != expected.as_slice() {
        return Err(Error::Conditioning("likelihood is not the suppressed-input scheme".into()));
    }
    let four = Q::from_usize(4);
    let weight_local = four.clone() * alpha.clone();
    let weight_star = Q::one() - weight_local.clone();
    let rho_uniform = vec![std::array::from_fn(|_| Q::ratio(1, 4)); 8];
    let rho_star = suppressed_input_likelihood(&Q::zero())?;

    // The weighted sum must give back the scheme exactly.
    for (k, col) in cond.rho_ab_given_lambda().iter().enumerate() {
        for row in 0..4 {
            let sum = weight_local.clone() * rho_uniform[k][row].clone() + weight_star.clone() * rho_star[k][row].clone();
            if sum != col[row] {
                return Err(Error::Invariant(format!("split does not reproduce ρ(ab|λ) at λ_{k}, row {row}")));
            }
        }
    }
    let uniform_prior = vec![Q::ratio(1, 8); 8];
    let uniform_box = InputConditioning::from_likelihood(eight_local_boxes(), rho_uniform.clone(), uniform_prior.clone())?
        .induced_correlation()?;
    let star_box = InputConditioning::from_likelihood(eight_local_boxes(), rho_star.clone(), uniform_prior)?.induced_correlation()?;
    if star_box != Correlation16::pr_box() {
        return Err(Error::Invariant("ρ* under uniform mixing is not a PR box".into()));
    }
    Ok(InputModelDecomposition { alpha, weight_local, weight_star, rho_uniform, rho_star, uniform_box, star_box })
}

/// Entry of `p` at the given packed position; convenience for tests and
/// the CLI.
pub fn entry<T: Scalar>(p: &Correlation16<T>, a: u8, b: u8, x: u8, y: u8) -> T {
    p.entries()[index(a, b, x, y)].clone()
}
