//! Dependence of the input choice on the ontic state: ρ(ab|λ), ρ(λ|ab) and
//! their priors, together with free will F and the telepathy diagnostic.

use serde::Serialize;

use crate::boxes::DeterministicBox;
use crate::correlation::Correlation16;
use crate::error::{Error, Result};
use crate::metrics::Joint;
use crate::scalar::Scalar;

/// Ontic states are deterministic boxes; `states[k]` labels column `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputConditioning<T> {
    states: Vec<DeterministicBox>,
    /// `rho_ab_given_lambda[k][row]` = ρ(ab|λ_k).
    rho_ab_given_lambda: Vec<[T; 4]>,
    /// `rho_lambda_given_ab[k][row]` = ρ(λ_k|ab).
    rho_lambda_given_ab: Vec<[T; 4]>,
    prior_lambda: Vec<T>,
    prior_ab: [T; 4],
}

fn check_distribution<T: Scalar>(what: &str, values: &[T]) -> Result<()> {
    let mut total = T::zero();
    for v in values {
        if !v.nonneg() {
            return Err(Error::Conditioning(format!("{what} has negative entry {}", v.to_f64())));
        }
        total = total + v.clone();
    }
    if !total.near(&T::one()) {
        return Err(Error::Conditioning(format!("{what} sums to {}", total.to_f64())));
    }
    Ok(())
}

impl<T: Scalar> InputConditioning<T> {
    /// Fully explicit construction. Validates the column sums of ρ(ab|λ),
    /// both priors, and Bayes consistency entrywise.
    pub fn new(
        states: Vec<DeterministicBox>,
        rho_ab_given_lambda: Vec<[T; 4]>,
        rho_lambda_given_ab: Vec<[T; 4]>,
        prior_lambda: Vec<T>,
        prior_ab: [T; 4],
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if rho_ab_given_lambda.len() != n || rho_lambda_given_ab.len() != n || prior_lambda.len() != n {
            return Err(Error::Conditioning("matrix shapes disagree with the number of ontic states".into()));
        }
        for (k, col) in rho_ab_given_lambda.iter().enumerate() {
            check_distribution(&format!("ρ(ab|λ_{k})"), col)?;
        }
        check_distribution("P(λ)", &prior_lambda)?;
        check_distribution("P(ab)", &prior_ab)?;
        let out = Self { states, rho_ab_given_lambda, rho_lambda_given_ab, prior_lambda, prior_ab };
        out.check_bayes()?;
        Ok(out)
    }

    /// From the likelihood ρ(ab|λ) and a prior over λ; P(ab) and ρ(λ|ab)
    /// follow by Bayes. Inputs of zero probability get an all-zero row.
    pub fn from_likelihood(states: Vec<DeterministicBox>, rho_ab_given_lambda: Vec<[T; 4]>, prior_lambda: Vec<T>) -> Result<Self> {
        if rho_ab_given_lambda.len() != prior_lambda.len() {
            return Err(Error::Conditioning("likelihood and prior lengths differ".into()));
        }
        let prior_ab: [T; 4] = std::array::from_fn(|row| {
            rho_ab_given_lambda
                .iter()
                .zip(&prior_lambda)
                .fold(T::zero(), |acc, (col, w)| acc + col[row].clone() * w.clone())
        });
        let posterior = rho_ab_given_lambda
            .iter()
            .zip(&prior_lambda)
            .map(|(col, w)| {
                std::array::from_fn(|row| {
                    if prior_ab[row] > T::zero() {
                        col[row].clone() * w.clone() / prior_ab[row].clone()
                    } else {
                        T::zero()
                    }
                })
            })
            .collect();
        Self::new(states, rho_ab_given_lambda, posterior, prior_lambda, prior_ab)
    }

    /// From the posterior ρ(λ|ab) and a prior over inputs; P(λ) and ρ(ab|λ)
    /// follow by Bayes.
    pub fn from_posterior(states: Vec<DeterministicBox>, rho_lambda_given_ab: Vec<[T; 4]>, prior_ab: [T; 4]) -> Result<Self> {
        for row in 0..4 {
            let total = rho_lambda_given_ab.iter().fold(T::zero(), |acc, col| acc + col[row].clone());
            if prior_ab[row] > T::zero() && !total.near(&T::one()) {
                return Err(Error::Conditioning(format!("ρ(λ|ab) row {row} sums to {}", total.to_f64())));
            }
        }
        let prior_lambda: Vec<T> = rho_lambda_given_ab
            .iter()
            .map(|col| (0..4).fold(T::zero(), |acc, row| acc + col[row].clone() * prior_ab[row].clone()))
            .collect();
        if prior_lambda.iter().any(|w| *w <= T::zero()) {
            return Err(Error::Conditioning("an ontic state has zero prior".into()));
        }
        let likelihood = rho_lambda_given_ab
            .iter()
            .zip(&prior_lambda)
            .map(|(col, w)| std::array::from_fn(|row| col[row].clone() * prior_ab[row].clone() / w.clone()))
            .collect();
        Self::new(states, likelihood, rho_lambda_given_ab, prior_lambda, prior_ab)
    }

    /// ρ(λ|ab)·P(ab) = ρ(ab|λ)·P(λ) for every entry.
    pub fn check_bayes(&self) -> Result<()> {
        for k in 0..self.states.len() {
            for row in 0..4 {
                let lhs = self.rho_lambda_given_ab[k][row].clone() * self.prior_ab[row].clone();
                let rhs = self.rho_ab_given_lambda[k][row].clone() * self.prior_lambda[k].clone();
                if !lhs.near(&rhs) {
                    return Err(Error::Conditioning(format!(
                        "Bayes mismatch at λ_{k}, input row {row}: {} vs {}",
                        lhs.to_f64(),
                        rhs.to_f64()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn states(&self) -> &[DeterministicBox] {
        &self.states
    }

    pub fn rho_ab_given_lambda(&self) -> &[[T; 4]] {
        &self.rho_ab_given_lambda
    }

    pub fn rho_lambda_given_ab(&self) -> &[[T; 4]] {
        &self.rho_lambda_given_ab
    }

    pub fn prior_lambda(&self) -> &[T] {
        &self.prior_lambda
    }

    pub fn prior_ab(&self) -> &[T; 4] {
        &self.prior_ab
    }

    /// P(xy|ab) = Σ_λ ρ(λ|ab) d^λ(xy|ab). Requires every input to have
    /// positive probability.
    pub fn induced_correlation(&self) -> Result<Correlation16<T>> {
        if self.prior_ab.iter().any(|p| *p <= T::zero()) {
            return Err(Error::Conditioning("an input pair never occurs".into()));
        }
        let mut entries: [T; 16] = std::array::from_fn(|_| T::zero());
        for (k, state) in self.states.iter().enumerate() {
            let d = state.as_correlation::<T>();
            for (i, e) in entries.iter_mut().enumerate() {
                *e = e.clone() + self.rho_lambda_given_ab[k][i >> 2].clone() * d.entries()[i].clone();
            }
        }
        Correlation16::new(entries)
    }

    /// P(a,b,x,y) = Σ_λ P(λ) ρ(ab|λ) d^λ(xy|ab).
    pub fn induced_joint(&self) -> Result<Joint<T>> {
        let mut entries: [T; 16] = std::array::from_fn(|_| T::zero());
        for (k, state) in self.states.iter().enumerate() {
            let d = state.as_correlation::<T>();
            for (i, e) in entries.iter_mut().enumerate() {
                let w = self.prior_lambda[k].clone() * self.rho_ab_given_lambda[k][i >> 2].clone();
                *e = e.clone() + w * d.entries()[i].clone();
            }
        }
        Joint::new(entries)
    }
}

/// ρ(ab|λ) over the eight 0-bit boxes with the input each box gets wrong
/// suppressed to weight α and the other three at β = (1 - α)/3.
pub fn suppressed_input_likelihood<T: Scalar>(alpha: &T) -> Result<Vec<[T; 4]>> {
    if !alpha.nonneg() || (*alpha > T::ratio(1, 4) && !alpha.near(&T::ratio(1, 4))) {
        return Err(Error::OutOfRange { name: "alpha", value: alpha.to_f64(), range: "[0, 1/4]" });
    }
    let beta = (T::one() - alpha.clone()) / T::ratio(3, 1);
    Ok((0..8)
        .map(|j| {
            let hot = DeterministicBox::zero_bit(j).chsh_violating_row().expect("0-bit box");
            std::array::from_fn(|row| if row == hot { alpha.clone() } else { beta.clone() })
        })
        .collect())
}

/// F = 1 - ½ max_{ab, a'b'} Σ_λ |ρ(λ|ab) - ρ(λ|a'b')|, over inputs of
/// positive probability.
pub fn free_will<T: Scalar>(cond: &InputConditioning<T>) -> T {
    let live: Vec<usize> = (0..4).filter(|&r| cond.prior_ab[r] > T::zero()).collect();
    let mut worst = T::zero();
    for (i, &r) in live.iter().enumerate() {
        for &s in &live[i + 1..] {
            let dist = cond
                .rho_lambda_given_ab
                .iter()
                .fold(T::zero(), |acc, col| acc + (col[r].clone() - col[s].clone()).abs());
            worst = T::max_of(worst, dist);
        }
    }
    T::one() - T::half() * worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelepathyReport<T> {
    pub state: DeterministicBox,
    /// P(A=a, B=b), rows ab = 00, 01, 10, 11.
    pub joint_ab: [T; 4],
    pub p_a: [T; 2],
    pub p_b: [T; 2],
    /// `p_b_given_a[a][b]`; `None` when P(A=a) = 0.
    pub p_b_given_a: [[Option<T>; 2]; 2],
    /// `p_a_given_b[b][a]`; `None` when P(B=b) = 0.
    pub p_a_given_b: [[Option<T>; 2]; 2],
    pub dependent: bool,
}

/// Input statistics with λ held fixed at `lambda_index`: the joint over
/// (A, B) is the column ρ(ab|λ).
pub fn telepathy_check<T: Scalar>(cond: &InputConditioning<T>, lambda_index: usize) -> Result<TelepathyReport<T>> {
    let col = cond
        .rho_ab_given_lambda
        .get(lambda_index)
        .ok_or_else(|| Error::Conditioning(format!("no ontic state {lambda_index}")))?
        .clone();
    let p_a = [col[0].clone() + col[1].clone(), col[2].clone() + col[3].clone()];
    let p_b = [col[0].clone() + col[2].clone(), col[1].clone() + col[3].clone()];
    let mut dependent = false;
    let p_b_given_a: [[Option<T>; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            (p_a[a] > T::zero()).then(|| {
                let c = col[2 * a + b].clone() / p_a[a].clone();
                dependent |= !c.near(&p_b[b]);
                c
            })
        })
    });
    let p_a_given_b: [[Option<T>; 2]; 2] = std::array::from_fn(|b| {
        std::array::from_fn(|a| {
            (p_b[b] > T::zero()).then(|| {
                let c = col[2 * a + b].clone() / p_b[b].clone();
                dependent |= !c.near(&p_a[a]);
                c
            })
        })
    });
    Ok(TelepathyReport {
        state: cond.states[lambda_index],
        joint_ab: col,
        p_a,
        p_b,
        p_b_given_a,
        p_a_given_b,
        dependent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, Q};

    fn uniform(n: usize) -> InputConditioning<Q> {
        let states: Vec<_> = (0..n).map(DeterministicBox::zero_bit).collect();
        let cols = vec![std::array::from_fn(|_| q(1, 4)); n];
        InputConditioning::from_likelihood(states, cols, vec![q(1, n as i64); n]).unwrap()
    }

    #[test]
    fn identical_columns_give_full_free_will() {
        let c = uniform(8);
        assert_eq!(free_will(&c), q(1, 1));
        let t = telepathy_check(&c, 3).unwrap();
        assert!(!t.dependent);
    }

    #[test]
    fn bayes_mismatch_rejected() {
        let states = vec![DeterministicBox::zero_bit(0), DeterministicBox::zero_bit(1)];
        let lik = vec![[q(1, 1), q(0, 1), q(0, 1), q(0, 1)], [q(0, 1), q(1, 1), q(0, 1), q(0, 1)]];
        let post = vec![[q(1, 2), q(1, 2), q(0, 1), q(0, 1)], [q(1, 2), q(1, 2), q(0, 1), q(0, 1)]];
        let err = InputConditioning::new(states, lik, post, vec![q(1, 2), q(1, 2)], [q(1, 2), q(1, 2), q(0, 1), q(0, 1)]);
        assert!(matches!(err, Err(Error::Conditioning(_))));
    }

    #[test]
    fn suppressed_scheme_matches_published_placement() {
        let (a, b) = (q(1, 10), q(3, 10));
        let t = suppressed_input_likelihood(&a).unwrap();
        // Rows ab = 00, 01, 10, 11; columns d^{0_0} .. d^{7_0}.
        let layout = [
            "bbabbabb", //
            "bbbaabbb",
            "abbbbbba",
            "babbbbab",
        ];
        for (row, pattern) in layout.iter().enumerate() {
            for (j, ch) in pattern.chars().enumerate() {
                assert_eq!(t[j][row], if ch == 'a' { a.clone() } else { b.clone() }, "row {row} box {j}");
            }
        }
        assert!(suppressed_input_likelihood(&q(1, 3)).is_err());
        assert!(suppressed_input_likelihood(&q(-1, 8)).is_err());
    }

    #[test]
    fn bad_column_rejected() {
        let states = vec![DeterministicBox::zero_bit(0)];
        let lik = vec![[q(1, 2), q(0, 1), q(0, 1), q(0, 1)]];
        assert!(InputConditioning::from_likelihood(states, lik, vec![q(1, 1)]).is_err());
    }

    #[test]
    fn posterior_round_trip() {
        let c = uniform(4);
        let back = InputConditioning::from_posterior(c.states().to_vec(), c.rho_lambda_given_ab().to_vec(), c.prior_ab().clone()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn uniform_local_mixture_sits_on_the_local_facet() {
        let c = uniform(8);
        let p = c.induced_correlation().unwrap();
        assert_eq!(p.chsh_lambda(), q(2, 1));
        let joint = c.induced_joint().unwrap();
        assert_eq!(joint.conditional_box().unwrap(), p);
    }
}
