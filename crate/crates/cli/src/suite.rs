//! Regression suite over the worked examples: one verdict per example.

use flatlab_core::calculus::{flatness_certificate, CertificateStatus};
use flatlab_core::conservation::{gradient_descent, StepRule};
use flatlab_core::funcmodel::{monomial_flat_point, nn_in_flat_set, nn_in_stated_flat_set};
use flatlab_core::io::write_trajectory_csv;
use flatlab_core::linalg::Mat;
use flatlab_core::matfac::{balanced_eigvec_residual, exact_factorizations, flat_check_frobenius, l1_flat_analysis};
use flatlab_core::profiler::{compare, geometric_grid, Relation};
use flatlab_core::{build_catalog_objective, Objective, Result};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::plot;
use crate::run::{jsonl, Artifacts, RunContext};

fn catalog(name: &str, params: &[f64]) -> Objective {
    build_catalog_objective(name, params).expect("suite parameters are valid")
}

fn verdict(example: &str, pass: bool, detail: Value) -> Value {
    json!({ "example": example, "pass": pass, "detail": detail })
}

/// Zeros of the ReLU example: `(flat under the stated set, point)`.
pub fn nn_samples() -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    for i in 0..14 {
        pts.push([-0.2 - 0.3 * i as f64, -2.0 + 0.3 * i as f64, 1.0]);
    }
    for x2 in [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0] {
        pts.push([0.0, x2, 1.0]);
    }
    for i in 0..14 {
        let (x1, x2) = (0.2 + 0.25 * i as f64, -1.5 + 0.2 * i as f64);
        pts.push([x1, x2, 1.0 - x1 * x2]);
    }
    for x2 in [-3.0, -2.0, -1.5, 1.2, 2.0, 3.0] {
        pts.push([0.0, x2, 1.0]);
    }
    pts
}

fn nn(seed: u64) -> Result<Value> {
    let f = catalog("nn", &[]);
    let radii = geometric_grid(1e-3, 0.1, 12)?;
    let reference = [-1.0, 0.0, 1.0];
    let (mut stated, mut derived, mut wrong) = (0, 0, Vec::new());
    let samples = nn_samples();
    for p in &samples {
        let v = compare(&f, &reference, p, &radii, 16, seed)?;
        let flat = v.relation == Relation::Equivalent;
        let decided = flat || v.relation == Relation::Flatter;
        if decided && flat == nn_in_stated_flat_set(p, 1e-12) {
            stated += 1;
        } else {
            wrong.push(p.to_vec());
        }
        if decided && flat == nn_in_flat_set(p, 1e-12) {
            derived += 1;
        }
    }
    Ok(verdict(
        "nn",
        stated == samples.len(),
        json!({
            "samples": samples.len(),
            "agree_stated_set": stated,
            "agree_profile_set": derived,
            "disagreements": wrong,
        }),
    ))
}

fn mf4(seed: u64) -> Result<Value> {
    let f = catalog("mf4", &[]);
    let cands = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![2.0, 0.5], vec![0.5, 2.0], vec![-4.0, -0.25]];
    let rep = flatness_certificate(&f, &cands, 4, 16, seed)?;
    let pass = rep.flat_points() == vec![&[1.0, 1.0][..], &[-1.0, -1.0][..]];
    Ok(verdict("mf4", pass, json!({ "certificate": rep })))
}

fn fourth(seed: u64) -> Result<Value> {
    let f = catalog("4th", &[]);
    let radii = geometric_grid(1e-2, 0.3, 12)?;
    let mut rels = Vec::new();
    for a in [1.0, -1.0, 2.0, -2.0] {
        rels.push(compare(&f, &[0.0, 0.0], &[a, 0.0], &radii, 16, seed)?.relation);
    }
    let pass = rels.iter().all(|r| *r == Relation::Flatter);
    Ok(verdict("4th", pass, json!({ "origin_vs_(±1,0),(±2,0)": rels })))
}

fn orthogonal(seed: u64) -> Result<Value> {
    let f = catalog("orthogonal", &[1.0, 2.0]);
    let s = 0.5f64.sqrt();
    let cands = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, s], vec![0.0, -s], vec![0.6, 0.8 * s]];
    let rep = flatness_certificate(&f, &cands, 2, 16, seed)?;
    let pass = rep
        .entries
        .iter()
        .enumerate()
        .all(|(i, e)| (e.status == CertificateStatus::CertifiedFlat) == (i < 2));
    Ok(verdict("orthogonal", pass, json!({ "certificate": rep })))
}

fn mf1_ab() -> Result<Value> {
    let mut worst = 0.0f64;
    let mut analyses = Vec::new();
    for (a, b) in [(1.0, 1.0), (1.0, 0.0), (2.0, 3.0)] {
        let an = l1_flat_analysis(a, b, &[0.5, 1.0, 2.0])?;
        for c in &an.checks {
            worst = worst.max((c.closed_form - c.numeric).abs());
        }
        analyses.push(an);
    }
    Ok(verdict("mf1_ab", worst <= 1e-9, json!({ "max_lip_sq_error": worst, "analyses": analyses })))
}

/// The closed-form point must have the smallest `λ₁` among zeros of `f`
/// reached by the scaling symmetries.
fn monomial(seed: u64) -> Result<Value> {
    let mut details = Vec::new();
    let mut pass = true;
    for exps in [vec![1u32, 1], vec![2, 1], vec![1, 2, 3]] {
        let params: Vec<f64> = exps.iter().map(|&e| e as f64).collect();
        let f = catalog("monomial", &params);
        let star = monomial_flat_point(&exps);
        let n = exps.len();
        let mut cands = vec![star.clone()];
        for s in [-0.3, 0.2, 0.5] {
            // d ⊥ υ keeps x^υ = 1
            let mut d = vec![0.0; n];
            d[0] = exps[n - 1] as f64;
            d[n - 1] = -(exps[0] as f64);
            cands.push(star.iter().zip(&d).map(|(x, di)| x * (s * di).exp()).collect());
        }
        let rep = flatness_certificate(&f, &cands, 2, 16, seed)?;
        let ok = rep.entries[0].status == CertificateStatus::CertifiedFlat
            && rep.entries[1..].iter().all(|e| e.status == CertificateStatus::CertifiedNotFlat);
        pass &= ok;
        details.push(json!({ "exponents": exps, "flat_point": star, "certificate": rep }));
    }
    Ok(verdict("monomial", pass, json!(details)))
}

fn flat_not_strict(seed: u64) -> Result<Value> {
    let f = catalog("flat_not_strict", &[]);
    let radii = geometric_grid(1e-3, 0.2, 12)?;
    let mut rels = Vec::new();
    for x3 in [0.5, 1.0, 2.0] {
        rels.push(compare(&f, &[0.0, 0.0, 0.0], &[0.0, 0.0, x3], &radii, 16, seed)?.relation);
    }
    let pass = rels.iter().all(|r| *r == Relation::Equivalent);
    Ok(verdict("flat_not_strict", pass, json!({ "origin_vs_(0,0,x3)": rels })))
}

fn strict_not_flat(seed: u64) -> Result<Value> {
    let f = catalog("strict_not_flat", &[]);
    let radii = geometric_grid(1e-2, 0.3, 12)?;
    let mut rels = Vec::new();
    for x3 in [0.0, 0.5, 2.0] {
        rels.push(compare(&f, &[0.0, 0.0, 1.0], &[0.0, 0.0, x3], &radii, 16, seed)?.relation);
    }
    let pass = rels.iter().all(|r| *r == Relation::Flatter);
    Ok(verdict("strict_not_flat", pass, json!({ "(0,0,1)_vs_(0,0,x3)": rels })))
}

fn unbalanced(seed: u64) -> Result<Value> {
    let m = Mat::from_diag(&[2.0, 1.0]);
    let p = exact_factorizations(&m, &Mat::from_diag(&[1.0, 2f64.sqrt()]))?;
    let v = flat_check_frobenius(&p)?;
    let (res, _) = balanced_eigvec_residual(&p, 16, seed)?;
    let bal_err = p.balance.sub(&Mat::from_diag(&[0.0, 1.5])).max_abs();
    let pass = v.is_flat && res <= 1e-8 && bal_err <= 1e-12;
    Ok(verdict(
        "unbalanced",
        pass,
        json!({ "verdict": v, "balanced_eigvec_residual": res, "balance_error": bal_err }),
    ))
}

/// Descent on `4th` from `(3.2, 0.6)` with steps `(k+1)^{−1/6}`. The plotted
/// trajectory is the literal iteration when it stays finite, otherwise the
/// normalized-step variant.
fn descent_4th(ctx: &RunContext, out: &mut Artifacts) -> Result<Value> {
    let f = catalog("4th", &[]);
    let x0 = [3.2, 0.6];
    let literal = gradient_descent(&f, &x0, StepRule::PowerDecay { scale: 1.0, exponent: 1.0 / 6.0 }, 1000);
    let (pass, literal_detail) = match &literal {
        Ok(tr) => {
            let end = tr.last_state();
            let fe = *tr.f_values.last().expect("nonempty");
            (
                fe <= 1e-3 && end[1].abs() <= 1e-2 && end[0].abs() < 3.2,
                json!({ "end": end, "f_end": fe }),
            )
        }
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    let normalized = gradient_descent(&f, &x0, StepRule::Normalized { scale: 1.0, exponent: 1.0 / 6.0 }, 1000)?;
    let (shown, name) = match literal {
        Ok(tr) => (tr, "literal"),
        Err(_) => (normalized.clone(), "normalized"),
    };
    out.add("trajectory.csv", write_trajectory_csv(&shown));
    out.add(
        "plot.svg",
        plot::trajectory_plot(
            &format!("gradient descent on 4th ({name} steps)"),
            &f,
            &shown.states,
            ctx.timestamp.as_deref(),
        ),
    );
    Ok(verdict(
        "descent_4th",
        pass,
        json!({
            "literal": literal_detail,
            "normalized": { "end": normalized.last_state(), "f_end": normalized.f_values.last() },
            "plotted": name,
        }),
    ))
}

pub fn run_examples(ctx: &RunContext, out: &mut Artifacts) -> std::result::Result<(), CliError> {
    let seed = ctx.seed;
    let results = [
        nn(seed),
        mf4(seed),
        fourth(seed),
        orthogonal(seed),
        mf1_ab(),
        monomial(seed),
        flat_not_strict(seed),
        strict_not_flat(seed),
        unbalanced(seed),
        descent_4th(ctx, out),
    ];
    let records = results
        .into_iter()
        .collect::<Result<Vec<Value>>>()
        .map_err(CliError::numerical)?;
    out.add("verdict.jsonl", jsonl(&records));
    Ok(())
}
