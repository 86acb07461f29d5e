use std::f64::consts::PI;

use serrin_core::domain::{build_grid, Boundary, CurvGrid, DomainSpec, FourierRadius, Resolution};
use serrin_core::model::{boundary_data_of, refined_k, BoundaryData, ModelParams, ProblemCase};
use serrin_core::solver::{fitted_slope, solve_dirichlet, ScalarField, SolveOptions};
use serrin_core::verify::{
    degenerate_expansion, divergence_identity_residual, full_report, gradient_bound_margin,
    measured_boundary_data, pohozaev_residual, refined_pohozaev_check, CheckStatus, CSV_COLUMNS,
};
use serrin_core::Error;

const SIZES: [usize; 3] = [33, 65, 129];

fn model_a() -> ModelParams {
    ModelParams::new(0.0, 4.0, 1.0, 1.5).unwrap()
}

fn model_b() -> ModelParams {
    ModelParams::new(2.0, 0.0, 1.0, 2.0).unwrap()
}

fn model_c() -> ModelParams {
    ModelParams::new(0.0, 1.0, 1.2, 2.0).unwrap()
}

fn perturbed_a(eps: f64) -> DomainSpec {
    DomainSpec {
        inner: FourierRadius::circle(1.0).with_cos_mode(3, eps),
        outer: FourierRadius::circle(1.5),
    }
}

fn solve(spec: &DomainSpec, d: &BoundaryData, n: usize) -> (CurvGrid, ScalarField) {
    let g = build_grid(spec, n, n).unwrap();
    let (u, _) = solve_dirichlet(
        &g,
        &vec![-2.0; g.len()],
        d.inner_value,
        d.outer_value,
        &SolveOptions::default(),
    )
    .unwrap();
    (g, u)
}

fn solve_model(p: &ModelParams, n: usize) -> (CurvGrid, ScalarField) {
    solve(&DomainSpec::annulus(p.r_inner, p.r_outer), &boundary_data_of(p), n)
}

fn order(values: &[f64]) -> f64 {
    let hs: Vec<f64> = SIZES.iter().map(|&n| 1.0 / (n - 1) as f64).collect();
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    fitted_slope(&hs, &abs)
}

#[test]
fn neumann_constancy_on_model_a_and_its_perturbation() {
    let d = boundary_data_of(&model_a());
    let (g, u) = solve(&DomainSpec::annulus(1.0, 1.5), &d, 129);
    let flat = measured_boundary_data(&g, &u).unwrap();
    assert!((flat.inner.mean + 3.0).abs() < 1e-3, "{:?}", flat.inner);
    assert!(flat.inner.sd <= 5e-3);
    let (g, u) = solve(&perturbed_a(0.1), &d, 129);
    let bumpy = measured_boundary_data(&g, &u).unwrap();
    assert!(bumpy.inner.sd > 10.0 * flat.inner.sd);
}

#[test]
fn residuals_shrink_on_model_a() {
    let p = model_a();
    let d = boundary_data_of(&p);
    let (mut poho, mut div, mut grad) = (Vec::new(), Vec::new(), Vec::new());
    for n in SIZES {
        let (g, u) = solve_model(&p, n);
        poho.push(pohozaev_residual(&g, &u, &d).unwrap());
        div.push(divergence_identity_residual(&g, &u, &p, None).unwrap().residual);
        grad.push(gradient_bound_margin(&g, &u, &p).unwrap().max);
    }
    assert!(poho[2].abs() <= 5e-3 && order(&poho) >= 1.5, "{poho:?}");
    assert!(div[2].abs() <= 1e-2 && order(&div) >= 1.0, "{div:?}");
    assert!(grad[2] <= 5e-3 && order(&grad) >= 1.0, "{grad:?}");
    assert!(grad.windows(2).all(|w| w[1] <= w[0]), "{grad:?}");
}

#[test]
fn residuals_shrink_on_decreasing_models() {
    for p in [model_b(), model_c()] {
        let d = boundary_data_of(&p);
        let (mut poho, mut refined, mut grad) = (Vec::new(), Vec::new(), Vec::new());
        for n in SIZES {
            let (g, u) = solve_model(&p, n);
            poho.push(pohozaev_residual(&g, &u, &d).unwrap());
            let rp = refined_pohozaev_check(&g, &u, &p, None, None).unwrap();
            assert!(rp.case1_margin.abs() <= 2e-2, "{rp:?}");
            refined.push(rp.identity_residual);
            grad.push(gradient_bound_margin(&g, &u, &p).unwrap().max);
        }
        assert!(poho[2].abs() <= 5e-3 && order(&poho) >= 1.5, "{poho:?}");
        assert!(refined[2].abs() <= 2e-2 && order(&refined) >= 1.0, "{refined:?}");
        // model B's margin sits at rounding level on every grid
        assert!(grad.iter().all(|&m| m <= 5e-3), "{grad:?}");
        if grad.iter().any(|m| m.abs() > 1e-10) {
            assert!(order(&grad) >= 1.0, "{grad:?}");
        }
    }
}

#[test]
fn refined_identity_is_insensitive_to_raising_k() {
    let p = model_c();
    let (g, u) = solve_model(&p, 129);
    let k = refined_k(&p).unwrap();
    let base = refined_pohozaev_check(&g, &u, &p, Some(k), None).unwrap();
    let shifted = refined_pohozaev_check(&g, &u, &p, Some(k + 1.0), None).unwrap();
    assert!(shifted.identity_residual.abs() <= 2.0 * 2e-2);
    assert!((shifted.identity_residual - base.identity_residual).abs() <= 2e-2);
}

#[test]
fn flat_outer_boundary_truncation() {
    // r_o = √M: the outer normal derivative vanishes
    let p = ModelParams::new(0.0, 4.0, 1.0, 2.0).unwrap();
    let mut res = Vec::new();
    for n in [65, 129] {
        let (g, u) = solve_model(&p, n);
        let div = divergence_identity_residual(&g, &u, &p, None).unwrap();
        assert_eq!(div.cutoff, 1e-4 * 2.0);
        assert!(div.excised_nodes >= n);
        assert!((div.outer_boundary - 2.0 * PI).abs() < 1e-12);
        res.push(div.residual.abs());
        let wide = divergence_identity_residual(&g, &u, &p, Some(0.1)).unwrap();
        assert!(wide.residual.abs() < div.residual.abs());
    }
    assert!(res[1] < 0.6 * res[0], "{res:?}");
}

#[test]
fn degenerate_inner_boundary_expansion() {
    let p = ModelParams::new(0.5, 1.0, 1.0, 2.0).unwrap();
    let (g, u) = solve_model(&p, 129);
    let fit = degenerate_expansion(&g, &u).unwrap();
    assert_eq!(fit.boundary, Boundary::Inner);
    assert!((fit.coefficient + 1.0).abs() <= 0.1, "{fit:?}");
    let (g, u) = solve_model(&model_a(), 33);
    assert!(matches!(degenerate_expansion(&g, &u), Err(Error::NotApplicable(_))));
}

#[test]
fn perturbed_diagnostics_regression() {
    let p = model_a();
    let (g, u) = solve(&perturbed_a(0.1), &boundary_data_of(&p), 33);
    let gm = gradient_bound_margin(&g, &u, &p).unwrap();
    assert!((gm.max - 3.7932381126550823).abs() <= 1e-9 * gm.max, "{gm:?}");
    assert_eq!(gm.node, (1, 22));
    let report = full_report(
        &perturbed_a(0.1),
        &boundary_data_of(&p),
        Resolution::square(33),
        &SolveOptions::default(),
    )
    .unwrap();
    // perimeter of ρ = 1 + 0.1 cos 3θ minus 2π
    let am = report.area_margins.unwrap();
    assert!((am.inner - (6.4225893330511 - 2.0 * PI)).abs() < 1e-10, "{am:?}");
}

#[test]
fn model_a_report_passes() {
    let r = full_report(
        &DomainSpec::annulus(1.0, 1.5),
        &boundary_data_of(&model_a()),
        Resolution::square(129),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(r.case, ProblemCase::Increasing);
    assert!(r.passed(), "{:?}", r.checks);
    assert!(!r.diagnostic_only);
    assert!(r.divergence_identity.is_some() && r.refined_pohozaev.is_none());
    let json = serde_json::to_value(&r).unwrap();
    assert!(json.get("refined_pohozaev").is_none());
    assert!(json.get("expansion").is_none());
    let row = r.csv_record(0.0);
    assert_eq!(row.len(), CSV_COLUMNS.len());
    assert_eq!(row[0], "increasing");
    assert!(row[11].is_empty() && row[12].is_empty() && row[13].is_empty());
    assert!(row.iter().take(11).all(|v| !v.is_empty()));
}

#[test]
fn model_b_report_passes() {
    let r = full_report(
        &DomainSpec::annulus(1.0, 2.0),
        &boundary_data_of(&model_b()),
        Resolution::square(129),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(r.case, ProblemCase::DecreasingCovered);
    assert!(r.passed(), "{:?}", r.checks);
    assert!(r.refined_pohozaev.is_some() && r.divergence_identity.is_none());
}

#[test]
fn perturbed_report_flags_neumann_non_constancy() {
    let r = full_report(
        &perturbed_a(0.1),
        &boundary_data_of(&model_a()),
        Resolution::square(65),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(r.diagnostic_only);
    let inner = r.checks.iter().find(|c| c.name == "neumann_sd_inner").unwrap();
    assert_eq!(inner.status, CheckStatus::Fail);
    let grad = r.checks.iter().find(|c| c.name == "grad_margin").unwrap();
    assert_eq!(grad.status, CheckStatus::Diagnostic);
}

#[test]
fn inadmissible_data_is_refused() {
    let err = full_report(
        &DomainSpec::annulus(1.0, 2.0),
        &BoundaryData::new(0.0, 1.0, 1.0, 1.0),
        Resolution::square(17),
        &SolveOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::UnsupportedRegime { case: ProblemCase::Inadmissible, .. }));
}

#[test]
fn reports_are_reproducible() {
    let run = || {
        let r = full_report(
            &perturbed_a(0.05),
            &boundary_data_of(&model_a()),
            Resolution::square(33),
            &SolveOptions::default(),
        )
        .unwrap();
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}
