use std::path::Path;

use liepair_core::flow::{assign_strata, MinimizeOptions};
use liepair_core::moment::derivation_orthogonality_check;
use liepair_core::structure::{
    abelian_classify, adapted_basis, criticality_test, d_phi_commutator, gradation, levi_decompose, metric_constant,
    minimal_metric_gauge, mostow_involution, psd_check, rational_spectrum, reductive_part_pair, restrict_nilradical,
    semidirect_extend, theta_invariant_derivations, toral_line,
};
use liepair_core::{
    catalog, derivation_space, flow_energy, io, kempf_ness_minimize, moment_definitional, moment_explicit, residuals,
    validate_algebra, Error, FlowOptions, FlowResult, GroupElement, MinimizeResult, MomentValue, Pair, RandomMode,
    Subgroup, Verdict,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CatalogAction, Cli, Command, FlowArgs, Source};
use crate::input::{self, load, load_seeded, Loaded};
use crate::output::{self, render, seeded_path, write_file, write_trajectory};
use crate::profile::Tolerances;
use crate::{EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Unreadable or malformed input.
    Io(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn input(e: Error) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                Error::Format(_) | Error::UnknownName(_) => EXIT_IO,
                Error::Reconstruction { .. }
                | Error::IllConditioned(_)
                | Error::ResidualGuard { .. }
                | Error::SingularGroupElement(_) => EXIT_NUMERICAL,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(s) => write!(f, "{s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn mat(m: &DMatrix<f64>) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn vecv(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

fn pair_value(p: &Pair, in_variety: bool) -> Value {
    to_value(&io::pair_to_file(p, in_variety))
}

fn group_value(g: &GroupElement) -> Value {
    json!({"gl_part": mat(&g.gl_part), "inner_part": mat(&g.inner_part)})
}

fn moment_value(mv: &MomentValue, p: &Pair) -> Value {
    json!({
        "m_gl": mat(&mv.m_gl),
        "u": vecv(&mv.u),
        "d": mat(&mv.d),
        "k": mv.k,
        "energy": mv.energy,
        "norm_pair_sq": mv.norm_pair_sq,
        "norm_m_sq": mv.norm_m_sq,
        "trace_identity_residual": mv.trace_identity_residual(p),
        "u_in_p_residual": mv.u_in_p_residual(p),
    })
}

fn status(ok: bool) -> u8 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

fn emit_pair(path: Option<&Path>, p: &Pair) -> CliResult<()> {
    match path {
        Some(path) => write_file(path, &io::write_pair(p, true)?),
        None => Ok(()),
    }
}

pub fn run(cli: &Cli) -> CliResult<u8> {
    let tol = cli.profile.tolerances();
    let (report, code) = match &cli.command {
        Command::Catalog { fixtures, action } => return catalog_cmd(cli, *fixtures, action.as_ref()),
        Command::Random { mode, n, algebra, seed, base } => {
            let l = input::generate(RandomMode::from(*mode), algebra, *n, *seed, base.as_deref())?;
            output::emit(&io::write_pair(&l.pair, l.in_variety)?, cli.out.as_deref())?;
            return Ok(EXIT_OK);
        }
        Command::Validate { source } => validate_cmd(source, &tol)?,
        Command::Moment { source, oracle } => moment_cmd(source, *oracle)?,
        Command::Derivations { source, tol: cut } => derivations_cmd(source, *cut)?,
        Command::Critical { source, tol: t } => critical_cmd(source, t.unwrap_or(tol.critical))?,
        Command::Flow { source, flow, count, trajectory, emit } => {
            flow_cmd(source, flow, *count, trajectory.as_deref(), emit.as_deref())?
        }
        Command::Minimize { source, subgroup, step, tol: t, max_steps, collapse, record_every, count, emit } => {
            let opts = MinimizeOptions {
                step_init: *step,
                tol: *t,
                max_steps: *max_steps,
                collapse: *collapse,
                record_every: *record_every,
            };
            minimize_cmd(source, Subgroup::from(*subgroup), &opts, *count, emit.as_deref())?
        }
        Command::Decompose { source, tol: t, emit } => {
            decompose_cmd(source, t.unwrap_or(tol.critical), emit.as_deref())?
        }
        Command::Gradation { source, max_den } => gradation_cmd(source, *max_den, &tol)?,
        Command::Reductive { source, emit } => reductive_cmd(source, emit.as_deref(), &tol)?,
        Command::Extend { source, ext, emit } => extend_cmd(source, ext.as_deref(), emit.as_deref(), &tol)?,
        Command::Mostow { source, minimize, tol: t } => mostow_cmd(source, *minimize, t.unwrap_or(tol.structure))?,
        Command::ClassifyAbelian { source } => {
            let l = load(source)?;
            let c = abelian_classify(&l.pair)?;
            let code = status(c.consistent);
            (json!({"origin": l.origin, "classification": to_value(&c)}), code)
        }
        Command::Gauge { source, tol: t } => gauge_cmd(source, t.unwrap_or(tol.structure))?,
    };
    output::emit(&render(&report, cli.format)?, cli.out.as_deref())?;
    Ok(code)
}

fn validate_cmd(source: &Source, tol: &Tolerances) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let r = residuals(&l.pair);
    let av = validate_algebra(l.pair.codomain(), tol.algebra);
    let residuals_ok = !l.in_variety || (r.jacobi <= tol.residual && r.hom <= tol.residual);
    let ok = av.ok && residuals_ok;
    let report = json!({
        "origin": l.origin,
        "n": l.pair.n(),
        "algebra": l.pair.codomain().label(),
        "in_variety": l.in_variety,
        "residuals": to_value(&r),
        "residual_tolerance": tol.residual,
        "algebra_validation": to_value(&av),
        "ok": ok,
    });
    Ok((report, status(ok)))
}

const ORACLE_TOL: f64 = 1e-10;

fn moment_cmd(source: &Source, oracle: bool) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let mv = moment_explicit(&l.pair)?;
    let mut report = json!({
        "origin": l.origin,
        "in_variety": l.in_variety,
        "residuals": to_value(&residuals(&l.pair)),
        "moment": moment_value(&mv, &l.pair),
    });
    let mut code = EXIT_OK;
    if oracle {
        let d = moment_definitional(&l.pair)?;
        let disc = mv.discrepancy(&d);
        if disc > ORACLE_TOL {
            code = EXIT_NUMERICAL;
        }
        report["oracle"] = json!({"discrepancy": disc, "tolerance": ORACLE_TOL, "agrees": disc <= ORACLE_TOL});
    }
    Ok((report, code))
}

fn derivations_cmd(source: &Source, cut: f64) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let x = l.pair.normalized()?;
    let ds = derivation_space(&x, cut)?;
    let orth = derivation_orthogonality_check(&x, &ds.basis)?;
    let r = theta_invariant_derivations(&x)?;
    let basis: Vec<Value> = ds.basis.iter().map(|(a, v)| json!({"a": mat(a), "v": vecv(v)})).collect();
    let report = json!({
        "origin": l.origin,
        "der_dim": ds.dim(),
        "cutoff": ds.cutoff,
        "singular_values": ds.singular_values,
        "basis": basis,
        "moment_orthogonality": orth,
        "theta_invariant": to_value(&r.summary()),
    });
    Ok((report, EXIT_OK))
}

fn critical_cmd(source: &Source, tol: f64) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let c = criticality_test(&l.pair, tol)?;
    let psd = psd_check(&l.pair)?;
    let comm = d_phi_commutator(&l.pair)?;
    let code = status(c.is_critical);
    let report = json!({
        "origin": l.origin,
        "criticality": to_value(&c),
        "psd": to_value(&psd),
        "d_phi_commutator": comm,
    });
    Ok((report, code))
}

fn seeds(source: &Source, count: u64) -> CliResult<Vec<u64>> {
    if count == 0 {
        return Err(CliError::Core(Error::Precondition("--count must be positive".into())));
    }
    if count > 1 && source.input != "random" {
        return Err(CliError::Core(Error::Precondition("--count needs `random` input".into())));
    }
    Ok((0..count).map(|i| source.seed.wrapping_add(i)).collect())
}

fn fan_out<T: Send>(
    source: &Source,
    seeds: &[u64],
    f: impl Fn(&Loaded) -> CliResult<T> + Sync,
) -> CliResult<Vec<(Loaded, T)>> {
    seeds
        .par_iter()
        .map(|&s| {
            let l = load_seeded(source, s)?;
            let r = f(&l)?;
            Ok((l, r))
        })
        .collect()
}

fn flow_summary(seed: u64, r: &FlowResult) -> Value {
    json!({
        "seed": seed,
        "converged": r.converged,
        "steps": r.steps,
        "limit_energy": r.limit_energy,
        "stratum_label": r.stratum_label,
        "final_grad_norm": r.final_grad_norm,
        "final_step_size": r.final_step_size,
    })
}

fn flow_cmd(
    source: &Source,
    args: &FlowArgs,
    count: u64,
    trajectory: Option<&Path>,
    emit: Option<&Path>,
) -> CliResult<(Value, u8)> {
    let opts = FlowOptions {
        step_init: args.step,
        tol_grad: args.tol,
        max_steps: args.max_steps,
        residual_guard: args.guard,
        record_every: args.record_every,
    };
    opts.validate()?;
    let seeds = seeds(source, count)?;
    let runs = fan_out(source, &seeds, |l| {
        let e0 = moment_explicit(&l.pair)?.energy;
        Ok((e0, flow_energy(&l.pair, &opts)?))
    })?;
    let (loaded, results): (Vec<Loaded>, Vec<(f64, FlowResult)>) = runs.into_iter().unzip();
    let (initial, mut results): (Vec<f64>, Vec<FlowResult>) = results.into_iter().unzip();
    assign_strata(&mut results, 1e-4);
    let fan = seeds.len() > 1;
    for (s, r) in seeds.iter().zip(&results) {
        if let Some(path) = trajectory {
            let path = if fan { seeded_path(path, *s) } else { path.to_path_buf() };
            write_trajectory(&path, &r.trajectory)?;
        }
        if let Some(path) = emit {
            let path = if fan { seeded_path(path, *s) } else { path.to_path_buf() };
            emit_pair(Some(&path), &r.limit)?;
        }
    }
    let all_converged = results.iter().all(|r| r.converged);
    let code = if all_converged { EXIT_OK } else { EXIT_NUMERICAL };
    let report = if fan {
        let mut strata: Vec<(f64, usize)> = Vec::new();
        for r in &results {
            match strata.iter_mut().find(|(e, _)| *e == r.stratum_label) {
                Some(s) => s.1 += 1,
                None => strata.push((r.stratum_label, 1)),
            }
        }
        strata.sort_by(|a, b| a.0.total_cmp(&b.0));
        json!({
            "origin": loaded[0].origin,
            "options": to_value(&opts),
            "count": seeds.len(),
            "all_converged": all_converged,
            "runs": seeds.iter().zip(&results).map(|(s, r)| flow_summary(*s, r)).collect::<Vec<_>>(),
            "strata": strata.iter().map(|(e, c)| json!({"energy": e, "count": c})).collect::<Vec<_>>(),
        })
    } else {
        let r = &results[0];
        let mut v = flow_summary(seeds[0], r);
        v["origin"] = loaded[0].origin.clone();
        v["options"] = to_value(&opts);
        v["initial_energy"] = json!(initial[0]);
        v["limit"] = pair_value(&r.limit, true);
        v
    };
    Ok((report, code))
}

fn minimize_summary(seed: u64, r: &MinimizeResult) -> CliResult<Value> {
    Ok(json!({
        "seed": seed,
        "verdict": to_value(&r.verdict),
        "steps": r.steps,
        "initial_norm": r.initial_norm,
        "final_norm": r.final_norm,
        "moment_norm": r.moment_norm,
        "energy": if r.minimizer.is_zero() { Value::Null } else { json!(moment_explicit(&r.minimizer)?.energy) },
    }))
}

fn minimize_cmd(
    source: &Source,
    subgroup: Subgroup,
    opts: &MinimizeOptions,
    count: u64,
    emit: Option<&Path>,
) -> CliResult<(Value, u8)> {
    let seeds = seeds(source, count)?;
    let runs = fan_out(source, &seeds, |l| Ok(kempf_ness_minimize(&l.pair, subgroup, opts)?))?;
    let fan = seeds.len() > 1;
    let mut summaries = Vec::new();
    for (s, (_, r)) in seeds.iter().zip(&runs) {
        summaries.push(minimize_summary(*s, r)?);
        if let Some(path) = emit {
            let path = if fan { seeded_path(path, *s) } else { path.to_path_buf() };
            emit_pair(Some(&path), &r.minimizer)?;
        }
    }
    let conclusive = runs.iter().all(|(_, r)| r.verdict != Verdict::Inconclusive);
    let code = if conclusive { EXIT_OK } else { EXIT_NUMERICAL };
    let report = if fan {
        json!({
            "origin": runs[0].0.origin,
            "subgroup": to_value(&subgroup),
            "options": to_value(opts),
            "runs": summaries,
        })
    } else {
        let (l, r) = &runs[0];
        let mut v = summaries.remove(0);
        v["origin"] = l.origin.clone();
        v["subgroup"] = to_value(&subgroup);
        v["options"] = to_value(opts);
        v["norm_history"] = json!(r.norm_history);
        v["group_log"] = group_value(&r.group_log);
        v["minimizer"] = pair_value(&r.minimizer, l.in_variety);
        v
    };
    Ok((report, code))
}

fn decompose_cmd(source: &Source, tol: f64, emit: Option<&Path>) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let crit = criticality_test(&l.pair, tol)?;
    let levi = levi_decompose(&l.pair, tol)?;
    let (nu, nc) = restrict_nilradical(&l.pair)?;
    if let Some(nu) = &nu {
        emit_pair(emit, nu)?;
    }
    let ok = crit.is_critical && levi.ok;
    let report = json!({
        "origin": l.origin,
        "criticality": to_value(&crit),
        "levi": to_value(&levi.summary()),
        "nilradical": to_value(&nc),
        "ok": ok,
    });
    Ok((report, status(ok)))
}

fn gradation_cmd(source: &Source, max_den: u64, tol: &Tolerances) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let crit = criticality_test(&l.pair, tol.critical)?;
    if !crit.is_critical {
        return Err(Error::NotCritical { residual: crit.projection_residual, tolerance: tol.critical }.into());
    }
    let rs = rational_spectrum(&l.pair, max_den)?;
    let gr = gradation(&l.pair, max_den)?;
    let ab = adapted_basis(&l.pair)?;
    let ok = gr.compat_residual <= tol.structure;
    let report = json!({
        "origin": l.origin,
        "spectrum": to_value(&rs),
        "gradation": to_value(&gr),
        "adapted_basis": to_value(&ab),
        "tolerance": tol.structure,
        "ok": ok,
    });
    Ok((report, status(ok)))
}

fn reductive_cmd(source: &Source, emit: Option<&Path>, tol: &Tolerances) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let (pair, check) = reductive_part_pair(&l.pair)?;
    emit_pair(emit, &pair)?;
    let ok = check.criticality_residual <= tol.structure
        && check.energy_gap <= tol.structure
        && check.k_difference <= tol.structure
        && check.u_norm <= tol.structure;
    let report = json!({
        "origin": l.origin,
        "check": to_value(&check),
        "pair": pair_value(&pair, true),
        "tolerance": tol.structure,
        "ok": ok,
    });
    Ok((report, status(ok)))
}

fn extend_cmd(source: &Source, ext: Option<&Path>, emit: Option<&Path>, tol: &Tolerances) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let r = theta_invariant_derivations(&l.pair)?;
    let ext = match ext {
        Some(path) => io::read_pair(&input::read_text(path)?).map_err(CliError::input)?.0,
        None => toral_line(&l.pair, &r)?,
    };
    let (prod, check) = semidirect_extend(&l.pair, &ext, &r)?;
    emit_pair(emit, &prod)?;
    let ok = check.r_valid
        && check.jacobi_residual <= tol.residual
        && check.hom_residual <= tol.residual
        && check.criticality_residual <= tol.structure
        && check.d_identity <= tol.structure
        && check.u_identity <= tol.structure;
    let report = json!({
        "origin": l.origin,
        "theta_invariant": to_value(&r.summary()),
        "extension": pair_value(&ext, true),
        "check": to_value(&check),
        "product": pair_value(&prod, true),
        "ok": ok,
    });
    Ok((report, status(ok)))
}

fn mostow_cmd(source: &Source, minimize: bool, tol: f64) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let mut report = json!({"origin": l.origin});
    let pair = if minimize {
        let r = kempf_ness_minimize(&l.pair, Subgroup::Det1, &MinimizeOptions::default())?;
        report["minimization"] = minimize_summary(source.seed, &r)?;
        if r.verdict != Verdict::PolystableCandidate {
            return Ok((report, EXIT_NUMERICAL));
        }
        r.minimizer
    } else {
        l.pair
    };
    let (_, m) = mostow_involution(&pair, tol)?;
    let code = status(m.ok);
    report["mostow"] = to_value(&m);
    Ok((report, code))
}

fn gauge_cmd(source: &Source, tol: f64) -> CliResult<(Value, u8)> {
    let l = load(source)?;
    let x = l.pair.normalized()?;
    let (theta, m) = mostow_involution(&x, tol)?;
    let g = minimal_metric_gauge(x.n(), x.mu(), &theta)?;
    let ok = m.ok && g.residual <= tol;
    let report = json!({
        "origin": l.origin,
        "metric_constant": metric_constant(x.n(), x.mu()),
        "mostow": to_value(&m),
        "gauge": to_value(&g),
        "tolerance": tol,
        "ok": ok,
    });
    Ok((report, status(ok)))
}

/// Exact values for the catalog normalizations: `(pair, quantity, numerator, denominator)`.
const FIXTURES: &[(&str, &str, i64, i64)] = &[
    ("heisenberg-sl3", "norm_pair_sq", 19, 6),
    ("heisenberg-sl3", "k", 3, 2),
    ("heisenberg-sl3", "energy", 9, 19),
    ("heisenberg-sl3", "u_norm_sq", 4, 3),
    ("borel-sl2", "norm_pair_sq", 5, 2),
    ("borel-sl2", "k", 3, 2),
    ("borel-sl2", "energy", 3, 5),
    ("borel-sl2", "u_norm_sq", 1, 2),
    ("cartan-line-sl2", "energy", 1, 1),
];

fn fixture_quantity(p: &Pair, q: &str) -> CliResult<f64> {
    let mv = moment_explicit(p)?;
    Ok(match q {
        "norm_pair_sq" => mv.norm_pair_sq,
        "k" => mv.k,
        "energy" => mv.energy,
        _ => p.codomain().norm_sq(&mv.u),
    })
}

fn fixtures() -> CliResult<Value> {
    let mut out = serde_json::Map::new();
    for (name, q, num, den) in FIXTURES {
        let p = catalog::pair(name)?;
        let exact = *num as f64 / *den as f64;
        let computed = fixture_quantity(&p, q)?;
        let entry = out.entry(name.to_string()).or_insert_with(|| json!({}));
        entry[*q] = json!({
            "exact": format!("{num}/{den}"),
            "value": exact,
            "computed": computed,
            "error": (computed - exact).abs(),
        });
    }
    let h = catalog::pair("heisenberg-sl3")?;
    let rs = rational_spectrum(&h, 1000)?;
    out["heisenberg-sl3"]["weights"] = json!({"c": rs.c, "d_ints": rs.d_ints, "adu_ints": rs.adu_ints});
    Ok(Value::Object(out))
}

fn catalog_cmd(cli: &Cli, want_fixtures: bool, action: Option<&CatalogAction>) -> CliResult<u8> {
    let text = match (want_fixtures, action) {
        (true, _) => render(&fixtures()?, cli.format)?,
        (false, Some(CatalogAction::Emit { name })) => match catalog::pair(name) {
            Ok(p) => io::write_pair(&p, true)?,
            Err(_) => io::write_algebra(&catalog::algebra(name).map_err(CliError::input)?)?,
        },
        (false, _) => {
            let pairs: Vec<Value> = catalog::PAIR_NAMES
                .iter()
                .map(|name| {
                    let p = catalog::pair(name)?;
                    Ok(json!({"name": name, "n": p.n(), "algebra": p.codomain().label()}))
                })
                .collect::<CliResult<_>>()?;
            render(&json!({"algebras": catalog::ALGEBRA_NAMES, "pairs": pairs}), cli.format)?
        }
    };
    output::emit(&text, cli.out.as_deref())?;
    Ok(EXIT_OK)
}
