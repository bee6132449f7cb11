//! The acceptance suite: ten criteria, each reported with its measured
//! value, tolerance, runtime limit and verdict.

use std::path::Path;
use std::time::{Duration, Instant};

use boxlab_core::boxes::{table_checksum, DeterministicBox, OutputTable, ONE_BIT_TABLE, TABLE_CHECKSUM, ZERO_BIT_TABLE};
use boxlab_core::correlation::{mix, Correlation16};
use boxlab_core::decomposition::{communication_cost, construct_decomposition, FreeParams};
use boxlab_core::freewill::{build_l_mode, build_partial_l, resource_account};
use boxlab_core::metrics::{ontic_metrics, operational_metrics, signaling};
use boxlab_core::scalar::{format_rational, q, Scalar, Q, FLOAT_TOLERANCE};
use boxlab_core::singlet::{run_singlet_sim, theta_grid, MeasurementPair, SingletStats, Variant};
use boxlab_core::srx::{
    audit_columns, embed_cbox, embed_singlet, hidden_influence_scenario, ontic_vs_operational_report, CBoxScheme,
    EmbedOptions, Event, HieGeometry, OnticComparison, SignalSpeed, SingletProtocol, SrxConfig,
};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::columns_for;
use crate::config::{parse_json, read_text, NumericMode};
use crate::CliResult;

/// Replacement box tables for negative controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tables {
    pub zero: [OutputTable; 8],
    pub one: [OutputTable; 8],
}

impl Default for Tables {
    fn default() -> Self {
        Self { zero: ZERO_BIT_TABLE, one: ONE_BIT_TABLE }
    }
}

pub fn load_tables(path: &Path) -> CliResult<Tables> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub only: Option<Vec<u32>>,
    pub tables: Option<Tables>,
    pub seed: u64,
    pub numeric_mode: NumericMode,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { only: None, tables: None, seed: crate::config::DEFAULT_SEED, numeric_mode: NumericMode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub measured: String,
    pub tolerance: String,
    /// The check itself, before the runtime limit is applied.
    pub within_tolerance: bool,
    pub elapsed_s: f64,
    pub limit_s: f64,
    pub passed: bool,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: measured {}; tolerance {}; {:.2}s of {}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.elapsed_s,
            self.limit_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> Vec<u32> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.id).collect()
    }

    pub fn get(&self, id: u32) -> Option<&CriterionResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn summary_line(&self) -> String {
        let passed = self.results.iter().filter(|r| r.passed).count();
        format!("{passed}/{} criteria passed", self.results.len())
    }
}

/// What a criterion measured and whether it is inside tolerance.
struct Outcome {
    measured: String,
    tolerance: String,
    ok: bool,
}

fn outcome(measured: impl Into<String>, tolerance: impl Into<String>, ok: bool) -> Outcome {
    Outcome { measured: measured.into(), tolerance: tolerance.into(), ok }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "table fixtures", limit: Duration::from_secs(1) },
    Criterion { id: 2, name: "PR-box metrics", limit: Duration::from_secs(1) },
    Criterion { id: 3, name: "free-will law", limit: Duration::from_secs(5) },
    Criterion { id: 4, name: "partial-mix signaling", limit: Duration::from_secs(1) },
    Criterion { id: 5, name: "decomposition optimality", limit: Duration::from_secs(60) },
    Criterion { id: 6, name: "complementarity", limit: Duration::from_secs(30) },
    Criterion { id: 7, name: "singlet Monte Carlo", limit: Duration::from_secs(120) },
    Criterion { id: 8, name: "embedding equivalence", limit: Duration::from_secs(120) },
    Criterion { id: 9, name: "hidden-influence signaling", limit: Duration::from_secs(30) },
    Criterion { id: 10, name: "derived theorems", limit: Duration::from_secs(10) },
];

pub const SINGLET_TRIALS: u64 = 100_000;
pub const THETA_POINTS: usize = 12;

struct Suite<'a> {
    opts: &'a SuiteOptions,
    /// Bare PR-box statistics shared by criteria 7 and 8.
    pr_stats: Option<SingletStats>,
}

/// Runs the selected criteria in order, calling `on_result` as each one
/// finishes.
pub fn run_suite(opts: &SuiteOptions, mut on_result: impl FnMut(&CriterionResult)) -> SuiteReport {
    let mut suite = Suite { opts, pr_stats: None };
    let mut results = Vec::new();
    for c in &CRITERIA {
        if opts.only.as_ref().is_some_and(|ids| !ids.contains(&c.id)) {
            continue;
        }
        let start = Instant::now();
        let out = suite.run(c.id).unwrap_or_else(|e| outcome(format!("error: {e}"), "-", false));
        let elapsed = start.elapsed();
        let res = CriterionResult {
            id: c.id,
            name: c.name,
            measured: out.measured,
            tolerance: out.tolerance,
            within_tolerance: out.ok,
            elapsed_s: elapsed.as_secs_f64(),
            limit_s: c.limit.as_secs_f64(),
            passed: out.ok && elapsed <= c.limit,
        };
        on_result(&res);
        results.push(res);
    }
    SuiteReport { results }
}

type R = CliResult<Outcome>;

impl Suite<'_> {
    fn run(&mut self, id: u32) -> R {
        match id {
            1 => self.tables(),
            2 => pr_metrics(),
            3 => free_will_law(),
            4 => partial_mix(),
            5 => decomposition_optimality(self.opts.seed),
            6 => match self.opts.numeric_mode {
                NumericMode::Exact => complementarity::<Q>(),
                NumericMode::Float => complementarity::<f64>(),
            },
            7 => self.singlet(),
            8 => self.embedding(),
            9 => hidden_influence(self.opts.seed),
            10 => derived_theorems(self.opts.seed),
            _ => unreachable!("criterion ids are fixed"),
        }
    }

    fn tables(&self) -> R {
        let t = self.opts.tables.clone().unwrap_or_default();
        let checksum = table_checksum(&t.zero, &t.one);
        let lambdas = |tab: &[OutputTable; 8]| -> Vec<Q> {
            tab.iter().map(|o| Correlation16::<Q>::deterministic(*o).chsh_lambda()).collect()
        };
        let (l0, l1) = (lambdas(&t.zero), lambdas(&t.one));
        let ok = checksum == TABLE_CHECKSUM && l0.iter().all(|l| *l == q(2, 1)) && l1.iter().all(|l| *l == q(4, 1));
        let fmt = |v: &[Q]| v.iter().map(format_rational).collect::<Vec<_>>().join(",");
        Ok(outcome(
            format!("sha256 {}…, lambda(0-bit) [{}], lambda(1-bit) [{}]", &checksum[..12], fmt(&l0), fmt(&l1)),
            format!("sha256 {}…, 2 and 4 exactly", &TABLE_CHECKSUM[..12]),
            ok,
        ))
    }

    fn pr_bare(&mut self) -> CliResult<&SingletStats> {
        if self.pr_stats.is_none() {
            self.pr_stats = Some(run_singlet_sim(&Variant::PrBox, &singlet_pairs(), SINGLET_TRIALS, self.opts.seed)?);
        }
        Ok(self.pr_stats.as_ref().expect("just set"))
    }

    fn singlet(&mut self) -> R {
        let seed = self.opts.seed;
        let tb = run_singlet_sim(&Variant::TonerBacon, &singlet_pairs(), SINGLET_TRIALS, seed)?;
        let pr = self.pr_bare()?.clone();
        let mut worst_z = 0.0f64;
        let mut worst_marginal = 0.0f64;
        for p in pr.points.iter().chain(&tb.points) {
            worst_z = worst_z.max(p.z_score());
            for (m, se) in [(p.mean_a, p.se_a), (p.mean_b, p.se_b)] {
                worst_marginal = worst_marginal.max((m - 0.5).abs() / se.max(f64::MIN_POSITIVE));
            }
        }
        Ok(outcome(
            format!("max |estimate - target| = {worst_z:.3} SE, max |marginal - 1/2| = {worst_marginal:.3} SE"),
            "4 SE",
            worst_z <= 4.0 && worst_marginal <= 4.0,
        ))
    }

    fn embedding(&mut self) -> R {
        let seed = self.opts.seed;
        let pairs = singlet_pairs();
        let bare = self.pr_bare()?.points.clone();
        let alice = Event::new("A", 0.0, [0.0, 0.0]);
        let bob = Event::new("B", 1.0, [1.0, 0.0]);
        let emb = embed_singlet(
            &SrxConfig::newtonian(),
            &alice,
            &bob,
            Variant::PrBox,
            &pairs,
            Some([1.0, 0.0, 0.0]),
            SINGLET_TRIALS,
            seed,
            EmbedOptions::default(),
        )?;
        let columns = columns_for("srx-embed");
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        let identical = emb.stats == bare;
        let audit = emb.run.audit.clean() && audit_columns(&names).clean();
        let signal = emb.signal.antithetic;
        Ok(outcome(
            format!("bit-identical {identical}, signal estimate {signal}, audit clean {audit}"),
            "identical, 0, clean",
            identical && signal == 0.0 && audit,
        ))
    }
}

fn singlet_pairs() -> Vec<MeasurementPair> {
    theta_grid(THETA_POINTS).into_iter().map(MeasurementPair::from_angle).collect()
}

fn pr_metrics() -> R {
    let d = [DeterministicBox::one_bit(0), DeterministicBox::one_bit(3)];
    let ensemble: Vec<(Q, Correlation16<Q>)> = d.iter().map(|b| (q(1, 2), b.as_correlation())).collect();
    let p = mix(&ensemble)?;
    let op = operational_metrics(&p);
    let ontic = ontic_metrics(&ensemble)?;
    let ok = p == Correlation16::pr_box() && op.s.is_zero() && op.i == q(1, 2) && ontic.s_lambda == q(1, 1) && ontic.i_lambda.is_zero();
    Ok(outcome(
        format!(
            "S = {}, I = {}, S_lambda = {}, I_lambda = {}",
            format_rational(&op.s),
            format_rational(&op.i),
            format_rational(&ontic.s_lambda),
            format_rational(&ontic.i_lambda)
        ),
        "0, 1/2, 1, 0 exactly",
        ok,
    ))
}

fn free_will_law() -> R {
    let mut failures = 0;
    let mut points = 0;
    for k in 0..=16 {
        let alpha = q(k, 64);
        let m = build_l_mode(alpha.clone())?;
        let f_law = (q(2, 1) + q(4, 1) * alpha) / q(3, 1);
        let lambda_law = q(2, 1) * (q(4, 1) - q(3, 1) * m.free_will.clone());
        points += 1;
        if m.free_will != f_law || m.lambda != lambda_law {
            failures += 1;
        }
    }
    let full = build_l_mode(q(1, 4))?;
    let none = build_l_mode(q(0, 1))?;
    let endpoints = full.free_will == q(1, 1) && full.lambda == q(2, 1) && none.free_will == q(2, 3) && none.lambda == q(4, 1);
    let sqrt2 = std::f64::consts::SQRT_2;
    let tsirelson = build_l_mode((2.0 - sqrt2) / 4.0)?;
    let lambda_gap = (tsirelson.lambda - 2.0 * sqrt2).abs();
    let f_gap = (tsirelson.free_will - (4.0 - sqrt2) / 3.0).abs();
    Ok(outcome(
        format!(
            "{} of {points} grid points off the laws; endpoints {}; |Lambda - 2 sqrt 2| = {lambda_gap:.1e}, |F - (4 - sqrt 2)/3| = {f_gap:.1e}",
            failures,
            if endpoints { "exact" } else { "wrong" }
        ),
        "exact on the grid, 1e-12 in float mode",
        failures == 0 && endpoints && lambda_gap <= 1e-12 && f_gap <= 1e-12,
    ))
}

fn partial_mix() -> R {
    let mut worst = Q::zero();
    for k in 0..20 {
        let alpha = q(k, 76);
        let beta = (q(1, 1) - alpha.clone()) / q(3, 1);
        let mixed = build_partial_l(alpha.clone(), &[0, 1, 2, 3])?;
        let gap = (signaling(&mixed.correlation).s - (beta - alpha)).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(outcome(format!("max |S - (beta - alpha)| = {} over 20 points", format_rational(&worst)), "0 exactly", worst.is_zero()))
}

pub const RANDOM_BOXES: usize = 1000;

/// Random exact mixtures of the sixteen extreme boxes; about a third of the
/// weights are zero so faces of the polytope are covered too.
pub fn random_fragment_boxes(seed: u64, n: usize) -> Vec<Correlation16<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let w: Vec<i64> = (0..16).map(|_| if rng.random_bool(0.35) { 0 } else { rng.random_range(1..=24) }).collect();
            let total: i64 = w.iter().sum();
            if total == 0 {
                continue;
            }
            let parts: Vec<_> = DeterministicBox::all().zip(&w).map(|(d, &x)| (q(x, total), d.as_correlation())).collect();
            break mix(&parts).expect("weights sum to one");
        })
        .collect()
}

fn decomposition_optimality(seed: u64) -> R {
    let boxes = random_fragment_boxes(seed, RANDOM_BOXES);
    let failures: usize = boxes
        .par_iter()
        .map(|p| {
            let ok = construct_decomposition(p, &FreeParams::MinSquares).is_ok_and(|d| {
                d.reconstruct().is_ok_and(|r| r == *p) && d.p1_total() == p.c_lambda()
            }) && communication_cost(p).is_ok_and(|c| c.optimal && c.lp_minimum == p.c_lambda());
            usize::from(!ok)
        })
        .sum();
    Ok(outcome(
        format!("{failures} of {RANDOM_BOXES} boxes fail reconstruction, p1 = C_lambda, or LP optimality"),
        "0 failures, exact",
        failures == 0,
    ))
}

/// Grid of (F, C) with F from 1 - C/3 to 1, and s ∈ {0, ½, 1}.
fn complementarity<T: Scalar>() -> R {
    let mut min_slack = f64::INFINITY;
    let mut extreme_slack = 0.0f64;
    let mut points = 0;
    for ck in 1..=8 {
        let c = T::ratio(ck, 8);
        for fk in 0..=6 {
            // F = 1 - (C/3)(1 - fk/6)
            let f = T::one() - c.clone() / T::ratio(3, 1) * (T::one() - T::ratio(fk, 6));
            for sk in 0..=2 {
                let s = T::ratio(sk, 2);
                let acc = resource_account(&f, &c, &s)?;
                points += 1;
                min_slack = min_slack.min(acc.slack.to_f64());
                if ck == 8 && fk == 6 && sk != 1 {
                    extreme_slack = extreme_slack.max(acc.slack.to_f64().abs());
                }
            }
        }
    }
    let mode = if T::is_exact() { "exact" } else { "float" };
    Ok(outcome(
        format!("min slack {min_slack} over {points} points, |slack| at the extremes {extreme_slack} ({mode})"),
        format!("slack >= 0; extremes <= {FLOAT_TOLERANCE:e}"),
        min_slack >= -FLOAT_TOLERANCE && extreme_slack <= FLOAT_TOLERANCE,
    ))
}

pub const HIE_TRIALS: u64 = 10_000;

fn hidden_influence(seed: u64) -> R {
    let geom = HieGeometry::new(100.0, 1.0, 0.0, 10.0)?;
    let finite = hidden_influence_scenario(&SrxConfig::new(SignalSpeed::Finite(50.0))?, &geom, HIE_TRIALS, seed)?;
    let infinite = hidden_influence_scenario(&SrxConfig::newtonian(), &geom, HIE_TRIALS, seed)?;
    Ok(outcome(
        format!(
            "v_exp = {:.4}; signal at v = 50: {}, at v = inf: {}",
            geom.experimental_speed(),
            finite.signal,
            infinite.signal
        ),
        ">= 0.95 finite, <= 0.02 infinite",
        geom.experimental_speed() < 50.0 && finite.signal >= 0.95 && infinite.signal <= 0.02,
    ))
}

pub const ENSEMBLE_TRIALS: u64 = 4_000;

/// One member of the embedded family and whether it sits at an extreme of
/// the complementarity relation.
struct Member {
    label: String,
    report: OnticComparison,
    extreme: bool,
    check_trivial: bool,
}

fn derived_theorems(seed: u64) -> R {
    let cfg = SrxConfig::newtonian();
    let alice = Event::new("A", 0.0, [0.0, 0.0]);
    let bob = Event::new("B", 1.0, [1.0, 0.0]);
    let pairs: Vec<_> = theta_grid(3).into_iter().map(MeasurementPair::from_angle).collect();
    let probe = Some([1.0, 0.0, 0.0]);
    let mut members = Vec::new();
    let variants = [
        Variant::PrBox,
        Variant::TonerBacon,
        Variant::CBoxGeneral { s: 0.25 },
        Variant::CBoxGeneral { s: 0.5 },
        Variant::CBoxGeneral { s: 0.75 },
    ];
    for v in variants {
        let emb = embed_singlet(&cfg, &alice, &bob, v, &pairs, probe, ENSEMBLE_TRIALS, seed, EmbedOptions::default())?;
        let protocol = SingletProtocol { variant: v, pairs: pairs.clone(), probe };
        let report = ontic_vs_operational_report(&protocol, &emb.run, emb.operational())?;
        let s = v.resource_metrics().0;
        members.push(Member { label: format!("singlet {}", v.tag()), report, extreme: s == 0.0 || s == 1.0, check_trivial: true });
    }
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let (protocol, emb) = embed_cbox(&cfg, &alice, &bob, CBoxScheme::Resource { s }, ENSEMBLE_TRIALS, seed, EmbedOptions::default())?;
        let ops = emb.operational.ok_or_else(|| crate::CliError::Invariant("empty input row".into()))?;
        let report = ontic_vs_operational_report(&protocol, &emb.run, ops)?;
        members.push(Member { label: format!("cbox s={s}"), report, extreme: s == 0.0 || s == 1.0, check_trivial: false });
    }
    let mut failing = Vec::new();
    let mut extreme_slack = 0.0f64;
    for m in &members {
        let r = &m.report;
        let ok = r.consistent() && (!m.check_trivial || r.trivial_checks.holds());
        if !ok {
            failing.push(m.label.clone());
        }
        if m.extreme {
            let mut slacks = vec![r.fine_checks.complementarity_slack];
            slacks.extend(r.declared_checks.as_ref().map(|c| c.complementarity_slack));
            if m.check_trivial {
                slacks.push(r.trivial_checks.complementarity_slack);
            }
            for s in slacks {
                extreme_slack = extreme_slack.max(s.abs());
            }
        }
    }
    Ok(outcome(
        format!(
            "{} of {} ensembles violate a check{}; |S_lambda + 2 I_lambda - 1| at the extremes {extreme_slack}",
            failing.len(),
            members.len(),
            if failing.is_empty() { String::new() } else { format!(" ({})", failing.join(", ")) }
        ),
        format!("all hold; extremes <= {FLOAT_TOLERANCE:e}"),
        failing.is_empty() && extreme_slack <= FLOAT_TOLERANCE,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_boxes_are_reproducible_members() {
        let a = random_fragment_boxes(7, 5);
        assert_eq!(a, random_fragment_boxes(7, 5));
        assert_ne!(a, random_fragment_boxes(8, 5));
        assert!(a.iter().all(|p| p.chsh_lambda() >= q(2, 1)));
    }

    #[test]
    fn fast_criteria_pass() {
        let opts = SuiteOptions { only: Some(vec![1, 2, 3, 4, 6]), ..SuiteOptions::default() };
        let report = run_suite(&opts, |_| {});
        assert_eq!(report.results.len(), 5);
        for r in &report.results {
            assert!(r.within_tolerance, "{}", r.line());
        }
    }

    #[test]
    fn swapped_boxes_fail_the_table_check() {
        let mut t = Tables::default();
        t.one.swap(0, 1);
        let opts = SuiteOptions { only: Some(vec![1]), tables: Some(t), ..SuiteOptions::default() };
        let report = run_suite(&opts, |_| {});
        assert!(!report.all_passed());
        assert!(report.results[0].line().starts_with("[FAIL]"));
    }
}
