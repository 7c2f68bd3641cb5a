//! Command dispatch. Each command validates its inputs, computes, and stages
//! its output files; the caller writes whatever was staged, even when a
//! numerical failure ends the run.

use std::path::{Path, PathBuf};

use flatlab_core::calculus::{asymptotic_order_fit, flatness_certificate};
use flatlab_core::conservation::{
    coefficient_drift, conservation_check, diagonal_generator, flattening_check, flow_integrate, gradient_descent,
    matfac_generators, monomial_generators, Conserved, ConservedQuantity, Field, GeneratorSet, StepRule, Termination,
    TrajectoryRecord,
};
use flatlab_core::io::{parse_matrix_csv, write_matrix_csv, write_profile_csv, write_trajectory_csv};
use flatlab_core::linalg::{svd, Mat};
use flatlab_core::matfac::{
    balanced_eigvec_residual, exact_factorizations, flat_check_frobenius, l1_flat_analysis, nuclear_balance_check,
    power_lambda1, random_gauges, recover_gauge, RANK_CUTOFF,
};
use flatlab_core::profiler::{compare, duality_check, geometric_grid, profile};
use flatlab_core::{build_catalog_objective, FlatError, Objective};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommandKind, DescentConfig, ExperimentConfig, FieldKind, GridConfig, ObjectiveSpec};
use crate::error::CliError;
use crate::plot;
use crate::suite;

/// Files produced by a run, in the order they are written.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::validation("out_dir", format!("cannot create {}: {e}", dir.display())))?;
        for (name, contents) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, contents)
                .map_err(|e| CliError::validation("out_dir", format!("cannot write {}: {e}", p.display())))?;
        }
        Ok(())
    }
}

/// Everything a run needs besides the config itself.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command: CommandKind,
    /// Directory that relative paths in the config are resolved against.
    pub base_dir: PathBuf,
    pub seed: u64,
    /// SVG timestamp comment, or `None` for reproducible plots.
    pub timestamp: Option<String>,
}

pub fn jsonl<T: Serialize>(records: &[T]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

/// Runs one experiment. `Err` after staging artifacts means a numerical
/// failure that still produced partial output.
pub fn run(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    if let Some(c) = cfg.command {
        if c != ctx.command {
            return Err(CliError::validation(
                "command",
                format!("config is for `{}` but `{}` was requested", c.as_str(), ctx.command.as_str()),
            ));
        }
    }
    match ctx.command {
        CommandKind::Profile => run_profile(cfg, ctx, out),
        CommandKind::Compare => run_compare(cfg, ctx, out),
        CommandKind::Certify => run_certify(cfg, ctx, out),
        CommandKind::Flow => run_flow(cfg, ctx, out),
        CommandKind::Descend => run_descend(cfg, ctx, out),
        CommandKind::Matfac => run_matfac(cfg, ctx, out),
        CommandKind::Examples => suite::run_examples(ctx, out),
    }
}

/// A built objective with the data needed to derive its symmetries.
pub struct Loaded {
    pub f: Objective,
    pub name: String,
    pub params: Vec<f64>,
    pub matrix: Option<Mat>,
}

pub fn load_objective(cfg: &ExperimentConfig, base: &Path) -> Result<Loaded, CliError> {
    let spec = cfg
        .objective
        .as_ref()
        .ok_or_else(|| CliError::validation("objective", "an objective is required"))?;
    match spec {
        ObjectiveSpec::Catalog { name, params } => {
            let f = build_catalog_objective(name, params).map_err(|e| CliError::from_core("objective", e))?;
            Ok(Loaded {
                f,
                name: name.clone(),
                params: params.clone(),
                matrix: None,
            })
        }
        ObjectiveSpec::Matrix { matrix, rank } => {
            let path = base.join(matrix);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CliError::validation("objective.matrix", format!("cannot read {}: {e}", path.display()))
            })?;
            let m = parse_matrix_csv(&text).map_err(|e| CliError::validation("objective.matrix", e.to_string()))?;
            let r = match rank {
                Some(0) => return Err(CliError::validation("objective.rank", "rank must be positive")),
                Some(r) => *r,
                None => svd(&m).rank(RANK_CUTOFF).max(1),
            };
            let mut params = vec![m.rows() as f64, m.cols() as f64, r as f64];
            params.extend_from_slice(m.as_slice());
            let f = build_catalog_objective("mf_frobenius", &params).map_err(|e| CliError::from_core("objective", e))?;
            Ok(Loaded {
                f,
                name: "mf_frobenius".into(),
                params,
                matrix: Some(m),
            })
        }
    }
}

fn check_points(cfg: &ExperimentConfig, dim: usize, min: usize, max: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let k = cfg.points.len();
    if k < min || k > max {
        let want = if min == max { format!("exactly {min}") } else { format!("{min} to {max}") };
        return Err(CliError::validation("points", format!("expected {want} points, got {k}")));
    }
    for (i, p) in cfg.points.iter().enumerate() {
        if p.len() != dim {
            return Err(CliError::validation(
                format!("points[{i}]"),
                format!("expected {dim} coordinates, got {}", p.len()),
            ));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation(format!("points[{i}]"), "coordinates must be finite"));
        }
    }
    Ok(cfg.points.clone())
}

fn grid_of(cfg: &ExperimentConfig) -> Result<(GridConfig, Vec<f64>), CliError> {
    let g = cfg.grid.clone().unwrap_or_default();
    if g.budget == 0 {
        return Err(CliError::validation("grid.budget", "budget must be at least 1"));
    }
    let radii = geometric_grid(g.r_min, g.r_max, g.m).map_err(|e| CliError::from_core("grid", e))?;
    Ok((g, radii))
}

fn order_of(cfg: &ExperimentConfig, default: usize) -> Result<usize, CliError> {
    let k = cfg.order.unwrap_or(default);
    if !(1..=4).contains(&k) {
        return Err(CliError::validation("order", format!("order must be 1 to 4, got {k}")));
    }
    Ok(k)
}

fn error_value(e: &FlatError) -> Value {
    json!({ "error": e.to_string() })
}

fn run_profile(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    let x = check_points(cfg, obj.f.dim(), 1, 1)?.remove(0);
    let (g, _) = grid_of(cfg)?;
    let p = profile(&obj.f, &x, g.r_min, g.r_max, g.m, g.budget, ctx.seed).map_err(|e| CliError::from_core("grid", e))?;
    out.add("profile.csv", write_profile_csv(&p));
    let fit = match asymptotic_order_fit(&p) {
        Ok(fit) => serde_json::to_value(fit).expect("fit serializes"),
        Err(e) => error_value(&e),
    };
    let records = vec![
        json!({ "kind": "duality", "objective": obj.name, "point": x, "report": duality_check(&p) }),
        json!({ "kind": "order_fit", "objective": obj.name, "point": x, "fit": fit }),
    ];
    out.add("verdict.jsonl", jsonl(&records));
    let title = format!("flatness profile of {} at {:?}", obj.name, x);
    out.add(
        "plot.svg",
        plot::profile_plot(&title, &[("profile", &p.radii, &p.values)], ctx.timestamp.as_deref()),
    );
    Ok(())
}

fn run_compare(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    let pts = check_points(cfg, obj.f.dim(), 2, 2)?;
    let (g, radii) = grid_of(cfg)?;
    let v = compare(&obj.f, &pts[0], &pts[1], &radii, g.budget, ctx.seed).map_err(CliError::numerical)?;
    let mut csv = String::from("r,fcirc_x,fcirc_y\n");
    for ((r, a), b) in radii.iter().zip(&v.fx).zip(&v.fy) {
        csv.push_str(&format!(
            "{},{},{}\n",
            flatlab_core::io::fmt_f64(*r),
            flatlab_core::io::fmt_f64(*a),
            flatlab_core::io::fmt_f64(*b)
        ));
    }
    out.add("compare.csv", csv);
    out.add(
        "verdict.jsonl",
        jsonl(&[json!({ "kind": "compare", "objective": obj.name, "x": pts[0], "y": pts[1], "verdict": v })]),
    );
    let title = format!("profiles of {}", obj.name);
    out.add(
        "plot.svg",
        plot::profile_plot(&title, &[("x", &radii, &v.fx), ("y", &radii, &v.fy)], ctx.timestamp.as_deref()),
    );
    Ok(())
}

fn run_certify(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    let pts = check_points(cfg, obj.f.dim(), 1, usize::MAX)?;
    let k = order_of(cfg, 2)?;
    let budget = cfg.grid.as_ref().map_or(16, |g| g.budget);
    let rep = flatness_certificate(&obj.f, &pts, k, budget, ctx.seed).map_err(|e| match e {
        FlatError::InvalidArgument { .. } => CliError::validation("points", e.to_string()),
        e => CliError::numerical(e),
    })?;
    let records: Vec<Value> = rep
        .entries
        .iter()
        .map(|e| json!({ "kind": "certificate", "objective": obj.name, "order": k, "point": e.point, "coefficient": e.coefficient, "status": e.status }))
        .collect();
    out.add("verdict.jsonl", jsonl(&records));
    Ok(())
}

/// Symmetry generators of catalog objectives whose group is known.
pub fn default_generators(obj: &Loaded) -> Option<GeneratorSet> {
    let gens = match obj.name.as_str() {
        "monomial" => {
            let exps: Vec<u32> = obj.params.iter().map(|&p| p as u32).collect();
            return monomial_generators(&exps).ok();
        }
        "mf4" | "abs_product" => return monomial_generators(&[1, 1]).ok(),
        "mf1_ab" => vec![diagonal_generator(&[1.0, 1.0, -1.0])],
        "nn" => vec![diagonal_generator(&[1.0, -1.0, 0.0])],
        "mf_frobenius" | "mf_l1" => {
            let (m, n, r) = (obj.params[0] as usize, obj.params[1] as usize, obj.params[2] as usize);
            return matfac_generators(m, n, r).ok();
        }
        _ => return None,
    };
    GeneratorSet::new(gens).ok()
}

fn conserved_quantity(cfg_flow: Option<&crate::config::FlowConfig>, obj: &Loaded) -> Result<Option<ConservedQuantity>, CliError> {
    let n = obj.f.dim();
    let gen = match cfg_flow.and_then(|f| f.generators.as_ref()) {
        Some(list) => {
            let mut mats = Vec::with_capacity(list.len());
            for (i, rows) in list.iter().enumerate() {
                let field = format!("flow.generators[{i}]");
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::validation(field, format!("generators must be {n}×{n}")));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(CliError::validation(field, "entries must be finite"));
                }
                mats.push(Mat::from_rows(rows));
            }
            Some(GeneratorSet::new(mats).map_err(|e| CliError::from_core("flow.generators", e))?)
        }
        None => default_generators(obj),
    };
    let Some(gen) = gen else { return Ok(None) };
    let anchor = cfg_flow.and_then(|f| f.anchor.clone());
    if let Some(a) = &anchor {
        if a.len() != n || a.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation("flow.anchor", format!("expected {n} finite coordinates")));
        }
    }
    Ok(Some(ConservedQuantity::new(gen, anchor).map_err(|e| CliError::from_core("flow.anchor", e))?))
}

fn trajectory_outputs(title: &str, f: &Objective, tr: &TrajectoryRecord, ctx: &RunContext, out: &mut Artifacts) {
    out.add("trajectory.csv", write_trajectory_csv(tr));
    let svg = if f.dim() == 2 {
        plot::trajectory_plot(title, f, &tr.states, ctx.timestamp.as_deref())
    } else {
        plot::series_plot(title, &tr.times, &tr.states, ctx.timestamp.as_deref())
    };
    out.add("plot.svg", svg);
}

fn run_flow(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    let x0 = check_points(cfg, obj.f.dim(), 1, 1)?.remove(0);
    let fc = cfg
        .flow
        .as_ref()
        .ok_or_else(|| CliError::validation("flow", "flow settings are required"))?;
    if !(fc.t_end > 0.0) || !fc.t_end.is_finite() {
        return Err(CliError::validation("flow.t_end", "t_end must be positive and finite"));
    }
    if !(fc.dt > 0.0) || fc.dt > fc.t_end {
        return Err(CliError::validation("flow.dt", "dt must be positive and at most t_end"));
    }
    if let Some(k) = fc.coeff_order {
        if !(1..=4).contains(&k) {
            return Err(CliError::validation("flow.coeff_order", format!("order must be 1 to 4, got {k}")));
        }
    }
    let cq = conserved_quantity(Some(fc), &obj)?;
    let field = match fc.field {
        FieldKind::GradC => Field::GradC,
        FieldKind::NegGradC => Field::NegGradC,
        FieldKind::NegGradF => Field::NegGradF,
        FieldKind::Monomial => {
            if obj.name != "monomial" {
                return Err(CliError::validation("flow.field", "the monomial field needs the `monomial` objective"));
            }
            Field::Monomial(obj.params.iter().map(|&p| p as u32).collect())
        }
    };
    if matches!(fc.field, FieldKind::GradC | FieldKind::NegGradC) && cq.is_none() {
        return Err(CliError::validation(
            "flow.generators",
            format!("no known symmetry generators for `{}`; supply flow.generators", obj.name),
        ));
    }
    let mut tr = flow_integrate(&field, &obj.f, cq.as_ref(), &x0, fc.t_end, fc.dt).map_err(|e| CliError::from_core("flow", e))?;
    let mut record = json!({
        "kind": "flow",
        "objective": obj.name,
        "field": fc.field,
        "start": x0,
        "end": tr.last_state(),
        "records": tr.len(),
        "termination": tr.termination,
        "max_halvings": tr.max_halvings,
        "f_drift": conservation_check(&tr, Conserved::FConserved),
    });
    if let Some(q) = &cq {
        record["c_drift"] = json!(conservation_check(&tr, Conserved::CConserved));
        record["coefficient_drift"] = json!(coefficient_drift(&tr, q));
    }
    if let Some(k) = fc.coeff_order {
        if tr.termination != Termination::Diverged {
            let rep = flattening_check(&tr, &obj.f, k).map_err(CliError::numerical)?;
            record["flattening"] = json!({
                "order": k,
                "monotone": rep.monotone,
                "min_decrease": rep.min_decrease,
                "fitted_rate": rep.fitted_rate,
            });
            tr.coeff_values = Some(rep.coefficients);
        }
    }
    out.add("verdict.jsonl", jsonl(&[record]));
    let title = format!("{:?} flow of {}", fc.field, obj.name);
    trajectory_outputs(&title, &obj.f, &tr, ctx, out);
    if tr.termination == Termination::Diverged {
        return Err(CliError::Numerical(format!(
            "flow diverged at t = {}",
            tr.times.last().copied().unwrap_or(0.0)
        )));
    }
    Ok(())
}

fn check_step(rule: &StepRule) -> Result<(), CliError> {
    let ok = match *rule {
        StepRule::Constant { h } => h > 0.0 && h.is_finite(),
        StepRule::PowerDecay { scale, exponent } | StepRule::Normalized { scale, exponent } => {
            scale > 0.0 && scale.is_finite() && exponent.is_finite()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::validation("descent.step", "step parameters must be finite with a positive scale"))
    }
}

fn run_descend(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    let x0 = check_points(cfg, obj.f.dim(), 1, 1)?.remove(0);
    let d: DescentConfig = cfg
        .descent
        .clone()
        .ok_or_else(|| CliError::validation("descent", "descent settings are required"))?;
    if d.iters == 0 {
        return Err(CliError::validation("descent.iters", "at least one iteration is required"));
    }
    check_step(&d.step)?;
    let mut tr = gradient_descent(&obj.f, &x0, d.step, d.iters).map_err(CliError::numerical)?;
    if let Some(q) = conserved_quantity(None, &obj)? {
        tr.c_values = tr.states.iter().map(|x| q.c(x)).collect();
    }
    let record = json!({
        "kind": "descent",
        "objective": obj.name,
        "step": d.step,
        "start": x0,
        "end": tr.last_state(),
        "f_end": tr.f_values.last(),
        "iterations": d.iters,
    });
    out.add("verdict.jsonl", jsonl(&[record]));
    let title = format!("gradient descent on {}", obj.name);
    trajectory_outputs(&title, &obj.f, &tr, ctx, out);
    Ok(())
}

fn run_matfac(cfg: &ExperimentConfig, ctx: &RunContext, out: &mut Artifacts) -> Result<(), CliError> {
    let obj = load_objective(cfg, &ctx.base_dir)?;
    if obj.name == "mf1_ab" {
        let ts = if cfg.ts.is_empty() { vec![0.5, 1.0, 2.0] } else { cfg.ts.clone() };
        if ts.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(CliError::validation("ts", "curve parameters must be positive and finite"));
        }
        let an = l1_flat_analysis(obj.params[0], obj.params[1], &ts).map_err(CliError::numerical)?;
        out.add("verdict.jsonl", jsonl(&[json!({ "kind": "l1_analysis", "analysis": an })]));
        return Ok(());
    }
    let Some(m) = obj.matrix.clone() else {
        return Err(CliError::validation("objective", "matfac needs a matrix objective or `mf1_ab`"));
    };
    let r = svd(&m).rank(RANK_CUTOFF);
    if r == 0 {
        return Err(CliError::validation("objective.matrix", "matrix has rank zero"));
    }
    if obj.params[2] as usize != r {
        return Err(CliError::validation(
            "objective.rank",
            format!("exact factorizations use the numerical rank {r}"),
        ));
    }
    let mut gauges = Vec::new();
    for (i, rows) in cfg.gauges.iter().enumerate() {
        if rows.len() != r || rows.iter().any(|row| row.len() != r) {
            return Err(CliError::validation(format!("gauges[{i}]"), format!("gauge must be {r}×{r}")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::validation(format!("gauges[{i}]"), "entries must be finite"));
        }
        gauges.push(Mat::from_rows(rows));
    }
    gauges.extend(random_gauges(r, cfg.random_gauges.unwrap_or(0), ctx.seed));
    if gauges.is_empty() {
        gauges.push(Mat::identity(r));
    }
    let mut records = Vec::with_capacity(gauges.len());
    for (i, a) in gauges.iter().enumerate() {
        let p = exact_factorizations(&m, a).map_err(|e| CliError::validation(format!("gauges[{i}]"), e.to_string()))?;
        let verdict = flat_check_frobenius(&p).map_err(CliError::numerical)?;
        let nuclear = nuclear_balance_check(&p).map_err(CliError::numerical)?;
        let lam = power_lambda1(&p, ctx.seed).map_err(CliError::numerical)?;
        let balanced = match balanced_eigvec_residual(&p, 16, ctx.seed) {
            Ok((res, _)) => json!(res),
            Err(_) => Value::Null,
        };
        let (_, recovery) = recover_gauge(&p).map_err(CliError::numerical)?;
        out.add(&format!("x{i}.csv"), write_matrix_csv(&p.x));
        out.add(&format!("y{i}.csv"), write_matrix_csv(&p.y));
        records.push(json!({
            "kind": "factorization",
            "gauge": i,
            "residual": p.residual,
            "verdict": verdict,
            "power_lambda1": lam,
            "nuclear": nuclear,
            "balanced_eigvec_residual": balanced,
            "gauge_recovery_error": recovery,
        }));
    }
    out.add("verdict.jsonl", jsonl(&records));
    Ok(())
}
