use std::path::PathBuf;

use boxlab_core::boxes::{BoxKind, DeterministicBox};
use boxlab_core::correlation::{mix, unpack, Correlation16};
use boxlab_core::decomposition::{communication_cost, construct_decomposition, min_one_bit_weight, FreeParams};
use boxlab_core::freewill::{
    build_l_mode, build_lf_mode, build_mixed_mode, complementarity_bound, resource_account, ChiStar, FreewillModel,
};
use boxlab_core::metrics::{ontic_metrics, randomness, signaling};
use boxlab_core::scalar::{format_rational, Scalar, Q};
use boxlab_core::singlet::{run_singlet_sim, theta_grid, MeasurementPair, Variant};
use boxlab_core::srx::{
    audit_columns, embed_cbox, embed_singlet, hidden_influence_scenario, hie_arm, ontic_vs_operational_report, CBoxScheme,
    EmbedOptions, EmbeddingRun, HieGeometry, SignalSpeed, SingletProtocol, SrxConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cli::{columns_for, BoxSource, Cli, Command};
use crate::config::{
    load_config, parse_grid, parse_json, read_text, Arms, BoxSpec, ConfigFile, Format, NumText, NumericMode, ProtocolSpec,
    Resolved, SweepMode, DEFAULT_SEED,
};
use crate::output::{fmt_f64, render, write_bytes, write_json_file, Output, Table};
use crate::{acceptance, CliError, CliResult};

/// Scalar types the runner can report in.
pub trait Num: Scalar {
    fn from_q(q: &Q) -> Self;
    /// Exact rationals as `n/d`, doubles as shortest decimals.
    fn cell(&self) -> String;
    fn exact_cell(&self) -> String;
    fn json(&self) -> Value;
}

impl Num for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn cell(&self) -> String {
        format_rational(self)
    }
    fn exact_cell(&self) -> String {
        format_rational(self)
    }
    fn json(&self) -> Value {
        crate::output::q_json(self)
    }
}

impl Num for f64 {
    fn from_q(q: &Q) -> Self {
        q.to_f64()
    }
    fn cell(&self) -> String {
        fmt_f64(*self)
    }
    fn exact_cell(&self) -> String {
        String::new()
    }
    fn json(&self) -> Value {
        json!(self)
    }
}

struct Globals {
    file: ConfigFile,
    seed: Option<u64>,
    numeric_mode: Option<NumericMode>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

impl Globals {
    fn resolve<P: Serialize>(
        &self,
        command: &'static str,
        params: P,
        mode: NumericMode,
        format: Format,
        seed: Option<u64>,
    ) -> Resolved<P> {
        Resolved {
            command,
            seed: self.seed.or(seed).or(self.file.seed).unwrap_or(DEFAULT_SEED),
            numeric_mode: mode,
            format: self.format.or(self.file.format).unwrap_or(format),
            output_path: self
                .output
                .as_ref()
                .map(|p| p.display().to_string())
                .or_else(|| self.file.output_path.clone()),
            params,
        }
    }

    fn mode(&self, default: NumericMode) -> NumericMode {
        self.numeric_mode.or(self.file.numeric_mode).unwrap_or(default)
    }
}

/// Runs a parsed command line: resolves the configuration, executes the
/// subcommand and writes its output.
pub fn run(cli: Cli) -> CliResult<()> {
    let g = Globals {
        file: load_config(cli.config.as_deref())?,
        seed: cli.seed,
        numeric_mode: cli.numeric_mode,
        format: cli.format,
        output: cli.output,
    };
    match cli.command {
        Command::Metrics(args) => {
            let mut params = g.file.metrics.clone().unwrap_or_default();
            if let Some(src) = box_override(&args.source)? {
                params.source = src;
                params.ensemble = None;
            }
            let r = g.resolve("metrics", params, g.mode(NumericMode::Exact), Format::Json, None);
            let out = match r.numeric_mode {
                NumericMode::Exact => metrics::<Q>(&r.params)?,
                NumericMode::Float => metrics::<f64>(&r.params)?,
            };
            emit(&r, out)
        }
        Command::Decompose(args) => {
            let mut params = g.file.decompose.clone().unwrap_or_default();
            if let Some(src) = box_override(&args.source)? {
                params.source = src;
            }
            if let Some(s) = args.pair_sums {
                params.pair_sums = Some([s[0].clone(), s[1].clone(), s[2].clone()]);
            }
            let mode = if args.exact { NumericMode::Exact } else { g.mode(NumericMode::Exact) };
            let r = g.resolve("decompose", params, mode, Format::Json, None);
            let out = match r.numeric_mode {
                NumericMode::Exact => decompose::<Q>(&r.params)?,
                NumericMode::Float => decompose::<f64>(&r.params)?,
            };
            emit(&r, out)
        }
        Command::FreewillSweep(args) => {
            let mut p = g.file.freewill_sweep.clone().unwrap_or_default();
            if let Some(m) = args.mode {
                p.mode = m;
            }
            if let Some(v) = args.alpha_grid {
                p.alpha_grid = v;
            }
            if let Some(v) = args.l_grid {
                p.l_grid = v;
            }
            if let Some(v) = args.f_grid {
                p.f_grid = v;
            }
            if let Some(v) = args.c_grid {
                p.c_grid = v;
            }
            if let Some(v) = args.s {
                p.s = v;
            }
            let r = g.resolve("freewill-sweep", p, g.mode(NumericMode::Exact), Format::Csv, None);
            let out = match r.numeric_mode {
                NumericMode::Exact => sweep::<Q>(&r.params)?,
                NumericMode::Float => sweep::<f64>(&r.params)?,
            };
            emit(&r, out)
        }
        Command::SingletSim(args) => {
            let mut p = g.file.singlet_sim.clone().unwrap_or_default();
            if let Some(v) = args.variant {
                p.variant = v;
            }
            if args.s.is_some() {
                p.s = args.s;
            }
            if args.theta.is_some() {
                p.theta = args.theta;
            }
            if let Some(v) = args.theta_points {
                p.theta_points = v;
            }
            if let Some(v) = args.trials {
                p.trials = v;
            }
            let r = g.resolve("singlet-sim", p, NumericMode::Float, Format::Csv, None);
            let out = singlet(&r.params.variant, r.params.s, &r.params.theta, r.params.theta_points, r.params.trials, r.seed)?;
            emit(&r, out)
        }
        Command::SrxEmbed(args) => {
            let mut p = match &args.scenario {
                Some(path) => parse_json(&read_text(path)?, &path.display().to_string())?,
                None => g.file.srx_embed.clone().unwrap_or_default(),
            };
            if let Some(v) = &args.v_lambda {
                p.v_lambda = SignalSpeed::parse(v)?;
            }
            if let Some(v) = &args.breakdown_policy {
                p.breakdown_policy = boxlab_core::srx::BreakdownPolicy::parse(v)?;
            }
            if let Some(v) = args.trials {
                p.trials = v;
            }
            p.oblivious_strict |= args.oblivious_strict;
            if p.oblivious_strict && args.ontic_trace.is_some() {
                return Err(CliError::Schema("oblivious-strict mode refuses to write an ontic trace".into()));
            }
            let seed = p.seed;
            let r = g.resolve("srx-embed", p, NumericMode::Float, Format::Json, seed);
            let out = srx_embed(&r, args.ontic_trace.as_deref(), args.records.as_deref())?;
            emit(&r, out)
        }
        Command::Hie(args) => {
            let mut p = g.file.hie.clone().unwrap_or_default();
            if let Some(v) = &args.v_lambda {
                p.v_lambda = SignalSpeed::parse(v)?;
            }
            if let Some(v) = args.distance {
                p.distance = v;
            }
            if let Some(v) = args.separation {
                p.separation = v;
            }
            if let Some(v) = args.t_a {
                p.t_a = v;
            }
            if let Some(v) = args.t_b {
                p.t_b = v;
            }
            if let Some(v) = args.trials {
                p.trials = v;
            }
            if let Some(v) = args.alice_measures {
                p.alice_measures = v;
            }
            let r = g.resolve("hie", p, NumericMode::Float, Format::Csv, None);
            let out = hie(&r)?;
            emit(&r, out)
        }
        Command::Acceptance(args) => {
            let mut p = g.file.acceptance.clone().unwrap_or_default();
            if args.only.is_some() {
                p.only = args.only;
            }
            if let Some(t) = args.tables {
                p.tables = Some(t.display().to_string());
            }
            let r = g.resolve("acceptance", p, g.mode(NumericMode::Exact), Format::Json, None);
            let tables = match &r.params.tables {
                Some(path) => Some(acceptance::load_tables(std::path::Path::new(path))?),
                None => None,
            };
            let opts = acceptance::SuiteOptions { only: r.params.only.clone(), tables, seed: r.seed, numeric_mode: r.numeric_mode };
            let report = acceptance::run_suite(&opts, |res| println!("{}", res.line()));
            println!("{}", report.summary_line());
            if let Some(path) = &r.output_path {
                let bytes = crate::output::render_json(&r, serde_json::to_value(&report).expect("report serializes"));
                write_bytes(Some(std::path::Path::new(path)), &bytes)?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Invariant(format!("{} acceptance criteria failed", report.failed().len())))
            }
        }
    }
}

fn emit<P: Serialize>(r: &Resolved<P>, out: Output) -> CliResult<()> {
    let bytes = render(r, out)?;
    write_bytes(r.output_path.as_deref().map(std::path::Path::new), &bytes)
}

fn box_override(src: &BoxSource) -> CliResult<Option<BoxSpec>> {
    match (&src.name, &src.box_file) {
        (Some(_), Some(_)) => Err(CliError::Schema("give either --box or --box-file, not both".into())),
        (Some(n), None) => Ok(Some(BoxSpec { name: Some(n.clone()), entries: None })),
        (None, Some(path)) => {
            let entries: Vec<NumText> = parse_json(&read_text(path)?, &path.display().to_string())?;
            Ok(Some(BoxSpec { name: None, entries: Some(entries) }))
        }
        (None, None) => Ok(None),
    }
}

/// `d3_1` style names.
pub fn parse_box_name(name: &str) -> Option<DeterministicBox> {
    let rest = name.strip_prefix('d')?;
    let (j, k) = rest.split_once('_')?;
    let j: usize = j.parse().ok()?;
    let kind = match k {
        "0" => BoxKind::ZeroBit,
        "1" => BoxKind::OneBit,
        _ => return None,
    };
    DeterministicBox::new(kind, j).ok()
}

/// A box and, when known, an ensemble of deterministic boxes realizing it.
struct Source<T> {
    correlation: Correlation16<T>,
    ensemble: Option<Vec<(T, DeterministicBox)>>,
}

fn to_correlation<T: Num>(ensemble: &[(T, DeterministicBox)]) -> CliResult<Correlation16<T>> {
    Ok(mix(&ensemble.iter().map(|(w, d)| (w.clone(), d.as_correlation())).collect::<Vec<_>>())?)
}

fn named<T: Num>(name: &str) -> CliResult<Source<T>> {
    let ensemble: Vec<(T, DeterministicBox)> = match name {
        "pr" => vec![(T::half(), DeterministicBox::one_bit(0)), (T::half(), DeterministicBox::one_bit(3))],
        "white" => return Ok(Source { correlation: Correlation16::white_noise(), ensemble: None }),
        "uniform-local" => (0..8).map(|j| (T::ratio(1, 8), DeterministicBox::zero_bit(j))).collect(),
        other => match parse_box_name(other) {
            Some(d) => vec![(T::one(), d)],
            None => {
                return Err(CliError::Schema(format!("unknown box {other:?}; use pr, white, uniform-local or dJ_K")));
            }
        },
    };
    Ok(Source { correlation: to_correlation(&ensemble)?, ensemble: Some(ensemble) })
}

fn from_spec<T: Num>(spec: &BoxSpec) -> CliResult<Source<T>> {
    match (&spec.name, &spec.entries) {
        (Some(_), Some(_)) => Err(CliError::Schema("give either box or entries, not both".into())),
        (_, Some(entries)) => {
            let vals = entries.iter().map(|e| e.exact().map(|q| T::from_q(&q))).collect::<CliResult<Vec<T>>>()?;
            Ok(Source { correlation: Correlation16::from_slice(&vals)?, ensemble: None })
        }
        (name, None) => named(name.as_deref().unwrap_or("pr")),
    }
}

fn metrics<T: Num>(params: &crate::config::MetricsParams) -> CliResult<Output> {
    let src = match &params.ensemble {
        Some(members) => {
            let ens = members
                .iter()
                .map(|m| m.weight.exact().map(|w| (T::from_q(&w), m.member.0)))
                .collect::<CliResult<Vec<_>>>()?;
            Source { correlation: to_correlation(&ens)?, ensemble: Some(ens) }
        }
        None => from_spec::<T>(&params.source)?,
    };
    let p = &src.correlation;
    let sig = signaling(p);
    let mut rows: Vec<(String, T)> = vec![
        ("lambda".into(), p.chsh_lambda()),
        ("c_lambda".into(), p.c_lambda()),
        ("s".into(), sig.s.clone()),
        ("s_a_to_b".into(), sig.s_a_to_b.clone()),
        ("s_b_to_a".into(), sig.s_b_to_a.clone()),
    ];
    for (k, d) in sig.deltas.iter().enumerate() {
        rows.push((format!("delta_{}", k + 1), d.clone()));
    }
    rows.push(("i".into(), randomness(p)));
    let (ensemble, ontology) = match src.ensemble {
        Some(e) => (Some(e), "declared"),
        None => match construct_decomposition(p, &FreeParams::MinSquares) {
            Ok(d) => (Some(d.weighted_boxes()), "constructed decomposition"),
            Err(_) => (None, "none"),
        },
    };
    if let Some(e) = &ensemble {
        let boxes: Vec<(T, Correlation16<T>)> = e.iter().map(|(w, d)| (w.clone(), d.as_correlation())).collect();
        let m = ontic_metrics(&boxes)?;
        rows.push(("s_lambda".into(), m.s_lambda));
        rows.push(("i_lambda".into(), m.i_lambda));
    }
    let mut table = Table::new(columns_for("metrics"));
    let mut values = Map::new();
    for (name, v) in &rows {
        table.push(vec![name.clone(), fmt_f64(v.to_f64()), v.exact_cell()]);
        values.insert(name.clone(), v.json());
    }
    let json = json!({
        "box": p.entries().iter().map(Num::json).collect::<Vec<_>>(),
        "ontology": ontology,
        "metrics": values,
    });
    Ok(Output { table: Some(table), json })
}

fn decompose<T: Num>(params: &crate::config::DecomposeParams) -> CliResult<Output> {
    let src = from_spec::<T>(&params.source)?;
    let p = &src.correlation;
    let free = match &params.pair_sums {
        Some(s) => {
            let v = s.iter().map(|x| x.exact().map(|q| T::from_q(&q))).collect::<CliResult<Vec<T>>>()?;
            FreeParams::PairSums([v[0].clone(), v[1].clone(), v[2].clone()])
        }
        None => FreeParams::MinSquares,
    };
    let d = construct_decomposition(p, &free)?;
    let rebuilt = d.reconstruct()?;
    if !rebuilt.near(p) {
        return Err(CliError::Invariant("decomposition does not reproduce the box".into()));
    }
    if !d.p1_total().near(&p.c_lambda()) {
        return Err(CliError::Invariant("1-bit weight differs from C_lambda".into()));
    }
    let mut table = Table::new(columns_for("decompose"));
    for (kind, weights) in [("0bit", &d.p0), ("1bit", &d.p1)] {
        for (j, w) in weights.iter().enumerate() {
            table.push(vec![kind.into(), j.to_string(), fmt_f64(w.to_f64()), w.exact_cell()]);
        }
    }
    let mut json = json!({
        "lambda": p.chsh_lambda().json(),
        "c_lambda": p.c_lambda().json(),
        "p0": d.p0.iter().map(Num::json).collect::<Vec<_>>(),
        "p1": d.p1.iter().map(Num::json).collect::<Vec<_>>(),
        "p1_total": d.p1_total().json(),
        "reconstructs": true,
    });
    // The LP certificate needs exact entries.
    if T::is_exact() {
        let exact = exact_source(&params.source)?;
        let (lp_min, _) = min_one_bit_weight(&exact)?;
        let cert = communication_cost(&exact)?;
        json["lp_minimum"] = lp_min.json();
        json["optimal"] = json!(cert.optimal);
    }
    Ok(Output { table: Some(table), json })
}

fn exact_source(spec: &BoxSpec) -> CliResult<Correlation16<Q>> {
    Ok(from_spec::<Q>(spec)?.correlation)
}

struct SweepRow<T> {
    alpha: T,
    l: Option<T>,
    model: FreewillModel<T>,
}

fn sweep<T: Num>(params: &crate::config::SweepParams) -> CliResult<Output> {
    let conv = |grid: &str| -> CliResult<Vec<T>> { Ok(parse_grid(grid)?.iter().map(T::from_q).collect()) };
    let s = T::from_q(&params.s.exact()?);
    let points: Vec<(T, T)> = match params.mode {
        SweepMode::L => conv(&params.alpha_grid)?.into_iter().map(|a| (a, T::one())).collect(),
        SweepMode::LF => {
            let (alphas, ls) = (conv(&params.alpha_grid)?, conv(&params.l_grid)?);
            alphas.iter().flat_map(|a| ls.iter().map(move |l| (a.clone(), l.clone()))).collect()
        }
        SweepMode::Mixed => {
            let (fs, cs) = (conv(&params.f_grid)?, conv(&params.c_grid)?);
            // Only points with F in [1 - C/3, 1] exist.
            fs.iter()
                .flat_map(|f| cs.iter().map(move |c| (f.clone(), c.clone())))
                .filter(|(f, c)| (f.clone() - (T::one() - c.clone() / T::ratio(3, 1))).nonneg() && (T::one() - f.clone()).nonneg())
                .collect()
        }
    };
    let mode = params.mode;
    let rows: Vec<SweepRow<T>> = points
        .into_par_iter()
        .map(|(u, v)| -> CliResult<SweepRow<T>> {
            Ok(match mode {
                SweepMode::L => SweepRow { alpha: u.clone(), l: Some(T::one()), model: build_l_mode(u)? },
                SweepMode::LF => SweepRow { alpha: u.clone(), l: Some(v.clone()), model: build_lf_mode(u, v)? },
                SweepMode::Mixed => {
                    let model = build_mixed_mode(u, v)?;
                    SweepRow { alpha: model.alpha.clone(), l: None, model }
                }
            })
        })
        .collect::<CliResult<_>>()?;
    let mut table = Table::new(columns_for("freewill-sweep"));
    for row in rows {
        let m = &row.model;
        let c = m.c_lambda();
        let f = &m.free_will;
        let bound = complementarity_bound(f, &c);
        let account = resource_account(f, &c, &s)?;
        if !m.lambda.near(&(T::ratio(2, 1) + T::ratio(2, 1) * c.clone())) {
            return Err(CliError::Invariant("lambda and C_lambda disagree".into()));
        }
        table.push(vec![
            row.alpha.cell(),
            row.l.as_ref().map(Num::cell).unwrap_or_default(),
            f.cell(),
            m.lambda.cell(),
            signaling(&m.correlation).s.cell(),
            randomness(&m.correlation).cell(),
            bound.cell(),
            account.slack.cell(),
        ]);
    }
    Ok(Output { table: Some(table), json: Value::Null })
}

/// Angles as (degrees for output, radians).
fn angles(theta: &Option<Vec<f64>>, points: usize) -> CliResult<Vec<(f64, f64)>> {
    let out: Vec<(f64, f64)> = match theta {
        Some(deg) => deg.iter().map(|d| (*d, d.to_radians())).collect(),
        None => theta_grid(points).into_iter().map(|t| (t.to_degrees(), t)).collect(),
    };
    if out.is_empty() || out.iter().any(|(d, _)| !d.is_finite()) {
        return Err(CliError::Schema("need at least one finite angle".into()));
    }
    Ok(out)
}

fn thetas_radians(theta: &Option<Vec<f64>>, points: usize) -> CliResult<Vec<f64>> {
    Ok(angles(theta, points)?.into_iter().map(|(_, r)| r).collect())
}

fn singlet(variant: &str, s: Option<f64>, theta: &Option<Vec<f64>>, points: usize, trials: u64, seed: u64) -> CliResult<Output> {
    let variant = Variant::parse(variant, s)?;
    let thetas = angles(theta, points)?;
    let pairs: Vec<_> = thetas.iter().map(|&(_, t)| MeasurementPair::from_angle(t)).collect();
    let stats = run_singlet_sim(&variant, &pairs, trials, seed)?;
    let mut table = Table::new(columns_for("singlet-sim"));
    for ((deg, _), p) in thetas.iter().zip(&stats.points) {
        table.push(vec![
            fmt_f64(*deg),
            fmt_f64(p.estimate),
            fmt_f64(p.target),
            fmt_f64(p.stderr),
            fmt_f64(p.comm_bits_per_trial),
        ]);
    }
    let json = json!({
        "theta_degrees": thetas.iter().map(|(d, _)| *d).collect::<Vec<_>>(),
        "stats": stats,
    });
    Ok(Output { table: Some(table), json })
}

fn count_table(run: &EmbeddingRun) -> CliResult<Table> {
    let columns = columns_for("srx-embed");
    let names: Vec<&str> = columns.iter().map(String::as_str).collect();
    let audit = audit_columns(&names);
    if !audit.clean() {
        return Err(CliError::Invariant(format!("output columns leak hidden data: {:?}", audit.violations)));
    }
    let mut table = Table::new(columns);
    for p in &run.points {
        for (i, c) in p.operational.counts.iter().enumerate() {
            let (a, b, x, y) = unpack(i);
            table.push(vec![p.point.to_string(), a.to_string(), b.to_string(), x.to_string(), y.to_string(), c.to_string()]);
        }
    }
    Ok(table)
}

fn srx_embed(
    r: &Resolved<crate::config::SrxParams>,
    trace_path: Option<&std::path::Path>,
    records_path: Option<&std::path::Path>,
) -> CliResult<Output> {
    let p = &r.params;
    let cfg = SrxConfig::new(p.v_lambda)?;
    let options = EmbedOptions {
        policy: p.breakdown_policy,
        oblivious_strict: p.oblivious_strict,
        keep_ontic_trace: trace_path.is_some(),
        ..EmbedOptions::default()
    };
    let (alice, bob) = (&p.geometry.alice, &p.geometry.bob);
    let (run, mut summary, report) = match &p.protocol {
        ProtocolSpec::Singlet { variant, s, theta, theta_points, probe } => {
            let variant = Variant::parse(variant, *s)?;
            let pairs: Vec<_> = thetas_radians(theta, *theta_points)?.into_iter().map(MeasurementPair::from_angle).collect();
            let emb = embed_singlet(&cfg, alice, bob, variant, &pairs, *probe, p.trials, r.seed, options)?;
            let protocol = SingletProtocol { variant, pairs, probe: *probe };
            let ops = emb.operational();
            let report = ontic_vs_operational_report(&protocol, &emb.run, ops.clone())?;
            let estimates: Vec<Value> = emb
                .stats
                .iter()
                .map(|s| json!({ "estimate": s.estimate, "stderr": s.stderr, "target": s.target, "mean_a": s.mean_a, "mean_b": s.mean_b }))
                .collect();
            let summary = json!({ "operational": ops, "signal": emb.signal, "points": estimates });
            (emb.run, summary, report)
        }
        ProtocolSpec::Cbox { s } => {
            let (protocol, emb) = embed_cbox(&cfg, alice, bob, CBoxScheme::Resource { s: *s }, p.trials, r.seed, options)?;
            cbox_parts(&protocol, emb)?
        }
        ProtocolSpec::Mixture { f, c, r_star } => {
            let chi = ChiStar::new(f.float()?, c.float()?)?;
            let scheme = CBoxScheme::ReducedFreeWill { chi, r_star: *r_star };
            let (protocol, emb) = embed_cbox(&cfg, alice, bob, scheme, p.trials, r.seed, options)?;
            cbox_parts(&protocol, emb)?
        }
    };
    if !run.audit.clean() {
        return Err(CliError::Invariant(format!("operational records leak hidden data: {:?}", run.audit.violations)));
    }
    let table = count_table(&run)?;
    summary["protocol"] = json!(run.protocol);
    summary["relabeled"] = json!(run.relabeled);
    summary["delivered"] = json!(run.delivered);
    summary["trials"] = json!(run.trials);
    summary["audit"] = json!(run.audit);
    summary["counts"] = json!(run.points.iter().map(|pt| json!({ "point": pt.point, "counts": pt.operational.counts })).collect::<Vec<_>>());
    if !p.oblivious_strict {
        summary["ontic"] = json!(run.ontic_total());
        summary["ontic_report"] = json!(report);
        summary["consistent"] = json!(report.consistent());
    }
    if let Some(path) = records_path {
        write_json_file(path, &run.operational_sample)?;
    }
    if let Some(path) = trace_path {
        write_json_file(path, &run.ontic_trace)?;
    }
    Ok(Output { table: Some(table), json: summary })
}

fn cbox_parts(
    protocol: &boxlab_core::srx::CBoxProtocol,
    emb: boxlab_core::srx::CBoxEmbedding,
) -> CliResult<(EmbeddingRun, Value, boxlab_core::srx::OnticComparison)> {
    let ops = emb
        .operational
        .clone()
        .ok_or_else(|| CliError::Schema("too few trials to estimate every input pair".into()))?;
    let report = ontic_vs_operational_report(protocol, &emb.run, ops.clone())?;
    let summary = json!({ "operational": ops, "empirical": emb.empirical, "marginal_se": emb.marginal_se });
    Ok((emb.run, summary, report))
}

fn hie(r: &Resolved<crate::config::HieParams>) -> CliResult<Output> {
    let p = &r.params;
    let cfg = SrxConfig::new(p.v_lambda)?;
    let geom = HieGeometry::new(p.distance, p.separation, p.t_a, p.t_b)?;
    let mut table = Table::new(columns_for("hie"));
    let row = |arm: &boxlab_core::srx::HieArm, signal: String| {
        vec![arm.alice_measures.to_string(), fmt_f64(arm.corr), fmt_f64(arm.stderr), arm.trials.to_string(), signal]
    };
    let json = match p.alice_measures {
        Arms::Both => {
            let rep = hidden_influence_scenario(&cfg, &geom, p.trials, r.seed)?;
            table.push(row(&rep.measured, fmt_f64(rep.signal)));
            table.push(row(&rep.idle, fmt_f64(rep.signal)));
            json!(rep)
        }
        Arms::True | Arms::False => {
            let arm = hie_arm(&cfg, &geom, p.alice_measures == Arms::True, p.trials, r.seed)?;
            table.push(row(&arm, String::new()));
            json!({ "geometry": geom, "v_exp": geom.experimental_speed(), "arm": arm })
        }
    };
    Ok(Output { table: Some(table), json })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_names() {
        assert_eq!(parse_box_name("d3_1"), Some(DeterministicBox::one_bit(3)));
        assert_eq!(parse_box_name("d7_0"), Some(DeterministicBox::zero_bit(7)));
        assert_eq!(parse_box_name("d8_0"), None);
        assert_eq!(parse_box_name("d1_2"), None);
        assert_eq!(parse_box_name("pr"), None);
    }

    #[test]
    fn pr_metrics_exact() {
        let out = metrics::<Q>(&crate::config::MetricsParams::default()).unwrap();
        let m = &out.json["metrics"];
        assert_eq!(m["s"]["exact"], "0");
        assert_eq!(m["i"]["exact"], "1/2");
        assert_eq!(m["s_lambda"]["exact"], "1");
        assert_eq!(m["i_lambda"]["exact"], "0");
        assert_eq!(m["lambda"]["exact"], "4");
    }

    #[test]
    fn decomposition_of_entries() {
        let spec = BoxSpec {
            name: None,
            entries: Some("0.5 0 0 0.5 0.5 0 0 0.5 0 0.5 0.5 0 0.5 0 0 0.5".split(' ').map(NumText::new).collect()),
        };
        let out = decompose::<Q>(&crate::config::DecomposeParams { source: spec, pair_sums: None }).unwrap();
        assert_eq!(out.json["optimal"], true);
        assert_eq!(out.json["p1_total"]["exact"], "1");
    }
}
