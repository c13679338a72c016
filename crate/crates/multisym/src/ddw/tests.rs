use crate::expr::Expression;
use crate::exterior::Role;

use super::*;

fn e(s: &str) -> Expression {
    Expression::parse(s).unwrap()
}

/// Klein-Gordon with unit mass on (t, x): L = (vt^2 - vx^2)/2 - y^2/2.
fn kg_lagrangian(mass_sq: &str) -> LagrangianField {
    let l = e(&format!("(vt^2 - vx^2)/2 - ({mass_sq})*y^2/2"));
    LagrangianField::new(&["t", "x"], &["y"], &[&["vt", "vx"]], l).unwrap()
}

fn kg_system(mass_sq: &str) -> DDWSystem {
    legendre_field(&kg_lagrangian(mass_sq)).unwrap()
}

#[test]
fn legendre_mechanics_examples() {
    // L = z^2/2 -> H = p^2/2
    let lm = legendre_mechanics(&e("z^2/2"), &["z"], &["p"]).unwrap();
    assert!(lm.hamiltonian.equivalent(&e("p^2/2")));
    assert!(lm.velocity_map[0].equivalent(&e("p")));

    // L = z^2/2 - q^2/2 -> H = (p^2 + q^2)/2
    let lm = legendre_mechanics(&e("z^2/2 - q^2/2"), &["z"], &["p"]).unwrap();
    assert!(lm.hamiltonian.equivalent(&e("(p^2 + q^2)/2")));

    // degenerate: L = z
    assert!(matches!(
        legendre_mechanics(&e("z"), &["z"], &["p"]),
        Err(DdwError::DegenerateLegendre(_))
    ));

    // non-quadratic falls back to numeric inversion: L = z^4/4
    assert!(matches!(
        legendre_mechanics(&e("z^4/4"), &["z"], &["p"]),
        Err(DdwError::NonQuadraticLagrangian)
    ));
    let coords = std::collections::BTreeMap::new();
    let (h, z) = legendre_eval_numeric(&e("z^4/4"), &coords, &["z"], &[8.0]).unwrap();
    // p = z^3 -> z = 2, H = p z - z^4/4 = 16 - 4 = 12
    assert!((z[0] - 2.0).abs() < 1e-9);
    assert!((h - 12.0).abs() < 1e-8);
}

#[test]
fn legendre_field_klein_gordon_signs() {
    let sys = kg_system("1");
    // H = (p_t^2 - p_x^2)/2 + y^2/2 under the (+,-) signature
    assert!(sys
        .hamiltonian()
        .equivalent(&e("(p_t_y^2 - p_x_y^2)/2 + y^2/2")));
    // free field drops the mass term
    let free = kg_system("0");
    assert!(free.hamiltonian().equivalent(&e("(p_t_y^2 - p_x_y^2)/2")));
}

#[test]
fn legendre_field_reduces_to_mechanics_for_n1() {
    let l = e("v^2/2 - y^2/2");
    let lf = LagrangianField::new(&["t"], &["y"], &[&["v"]], l.clone()).unwrap();
    let sys = legendre_field(&lf).unwrap();
    let lm = legendre_mechanics(&l, &["v"], &["p_t_y"]).unwrap();
    assert!(sys.hamiltonian().equivalent(&lm.hamiltonian));
}

#[test]
fn universal_form_counts_and_exactness() {
    // n = 1 on a 2-dim base reduces to dp ^ dq
    let sys1 = {
        let l = e("v^2/2");
        let lf = LagrangianField::new(&["t"], &["q"], &[&["v"]], l).unwrap();
        legendre_field(&lf).unwrap()
    };
    let uni1 = universal_chart_for(&sys1).unwrap();
    // base (t, q) plus momenta P_t, P_q
    assert_eq!(uni1.dim(), 4);
    let (theta1, omega1) = universal_forms(&uni1).unwrap();
    assert!(theta1.exterior_derivative().sub(&omega1).unwrap().is_zero());

    // n = 2, base dim 3: C(3,2) = 3 multimomenta, Omega has 3 top terms
    let sys2 = kg_system("1");
    let uni2 = universal_chart_for(&sys2).unwrap();
    assert_eq!(uni2.dim(), 3 + 3);
    let (theta2, omega2) = universal_forms(&uni2).unwrap();
    assert_eq!(omega2.terms().count(), 3);
    assert!(theta2.exterior_derivative().sub(&omega2).unwrap().is_zero());
    // d Omega = 0
    assert!(omega2.exterior_derivative().is_zero());
}

#[test]
fn restriction_matches_ddw_form_termwise() {
    // k = 1: no higher momenta exist; the restriction must reproduce the
    // DDW form exactly, term by term
    let sys = kg_system("1");
    let restricted = restrict_to_ddw(&sys).unwrap();
    assert!(restricted.sub(sys.omega()).unwrap().is_zero());
    assert_eq!(
        restricted.terms().count(),
        sys.omega().terms().count(),
        "termwise match"
    );

    // and Omega^DDW is closed
    assert!(sys.omega().exterior_derivative().is_zero());
}

#[test]
fn restriction_deletes_higher_momenta() {
    // n = 2, k = 2: exactly one higher momentum family P_{y1 y2}
    let l = e("(v1t^2 - v1x^2)/2 + (v2t^2 - v2x^2)/2 - y1^2/2 - y2^2/2");
    let lf = LagrangianField::new(
        &["t", "x"],
        &["y1", "y2"],
        &[&["v1t", "v1x"], &["v2t", "v2x"]],
        l,
    )
    .unwrap();
    let sys = legendre_field(&lf).unwrap();
    let uni = universal_chart_for(&sys).unwrap();
    // C(4,2) = 6 multimomenta; 1 has two field indices
    let higher: Vec<_> = uni
        .coords()
        .iter()
        .filter(|c| match &c.role {
            Role::MultiMomentum { base } => base.iter().filter(|j| **j >= 2).count() >= 2,
            _ => false,
        })
        .collect();
    assert_eq!(higher.len(), 1);
    let restricted = restrict_to_ddw(&sys).unwrap();
    assert!(restricted.sub(sys.omega()).unwrap().is_zero());
}

// ---------------------------------------------------------------------------
// Grid residuals with the manufactured standing wave
// u = cos(w t) cos(k x), w^2 = k^2 + m^2.
// ---------------------------------------------------------------------------

const KWAVE: f64 = 1.0;
const MASS_SQ: f64 = 1.0;

fn omega_disp() -> f64 {
    (KWAVE * KWAVE + MASS_SQ).sqrt()
}

fn standing_gamma(sys: &DDWSystem, nt: usize, nx: usize) -> DiscreteGamma {
    let w = omega_disp();
    let spec = GridSpec { t_max: 1.0, nt, x_max: 2.0 * std::f64::consts::PI, nx };
    let u = move |t: f64, x: f64| (w * t).cos() * (KWAVE * x).cos();
    let pt = move |t: f64, x: f64| -w * (w * t).sin() * (KWAVE * x).cos();
    let px = move |t: f64, x: f64| KWAVE * (w * t).cos() * (KWAVE * x).sin();
    DiscreteGamma::from_fields(sys, spec, &[&u], &[&pt, &px]).unwrap()
}

#[test]
fn euler_lagrange_residual_manufactured() {
    let lf = kg_lagrangian("1");
    let sys = kg_system("1");
    let coarse = standing_gamma(&sys, 32, 32);
    let fine = standing_gamma(&sys, 64, 64);
    let r1 = euler_lagrange_residual(&lf, &coarse).unwrap()[0].max_abs();
    let r2 = euler_lagrange_residual(&lf, &fine).unwrap()[0].max_abs();
    assert!(r1 > 0.0);
    let ratio = r1 / r2;
    assert!((3.5..=4.5).contains(&ratio), "EL convergence ratio {ratio}");
}

#[test]
fn euler_lagrange_residual_trivial_cases() {
    let lf = kg_lagrangian("0");
    let sys = kg_system("0");
    let spec = GridSpec { t_max: 1.0, nt: 16, x_max: 1.0, nx: 8 };
    // u = 0
    let zero = DiscreteGamma::from_fields(&sys, spec, &[&|_, _| 0.0], &[&|_, _| 0.0, &|_, _| 0.0])
        .unwrap();
    assert_eq!(euler_lagrange_residual(&lf, &zero).unwrap()[0].max_abs(), 0.0);
    // u = t solves the free field exactly (linear solutions)
    let linear =
        DiscreteGamma::from_fields(&sys, spec, &[&|t, _| t], &[&|_, _| 1.0, &|_, _| 0.0])
            .unwrap();
    let r = euler_lagrange_residual(&lf, &linear).unwrap()[0].max_abs();
    assert!(r <= 1e-12, "linear solution residual {r}");
}

#[test]
fn ddw_residual_manufactured_and_controls() {
    let sys = kg_system("1");
    let coarse = standing_gamma(&sys, 32, 32);
    let fine = standing_gamma(&sys, 64, 64);
    let r1 = ddw_residual(&sys, &coarse).unwrap().max_abs();
    let r2 = ddw_residual(&sys, &fine).unwrap().max_abs();
    let ratio = r1 / r2;
    assert!((3.5..=4.5).contains(&ratio), "DDW convergence ratio {ratio} ({r1} / {r2})");

    // constant fields with dH/dy = 0 at the constant (m = 0): residual = 0
    let free = kg_system("0");
    let spec = GridSpec { t_max: 1.0, nt: 8, x_max: 1.0, nx: 4 };
    let constant =
        DiscreteGamma::from_fields(&free, spec, &[&|_, _| 0.7], &[&|_, _| 0.0, &|_, _| 0.0])
            .unwrap();
    assert_eq!(ddw_residual(&free, &constant).unwrap().max_abs(), 0.0);

    // wrong-sign spatial momentum on a generic wave: first family blows up
    let w = omega_disp();
    let spec = GridSpec { t_max: 1.0, nt: 64, x_max: 2.0 * std::f64::consts::PI, nx: 64 };
    let u = move |t: f64, x: f64| (w * t).cos() * (KWAVE * x).cos();
    let pt = move |t: f64, x: f64| -w * (w * t).sin() * (KWAVE * x).cos();
    let px_wrong = move |t: f64, x: f64| -KWAVE * (w * t).cos() * (KWAVE * x).sin();
    let bad = DiscreteGamma::from_fields(&sys, spec, &[&u], &[&pt, &px_wrong]).unwrap();
    let fam1_max = ddw_residual(&sys, &bad)
        .unwrap()
        .family1
        .iter()
        .fold(0.0_f64, |m, f| m.max(f.max_abs()));
    assert!(fam1_max >= 0.1, "wrong-sign momentum must be detected, got {fam1_max}");
}

#[test]
fn geometric_residual_agrees_with_coordinates() {
    let sys = kg_system("1");
    let gamma = standing_gamma(&sys, 24, 24);
    let geo = geometric_residual(&sys, &gamma).unwrap();
    let ddw = ddw_residual(&sys, &gamma).unwrap();
    assert!(
        geo.route_disagreement <= EQUIVALENCE_TOLERANCE,
        "routes disagree: {}",
        geo.route_disagreement
    );
    // the reduced 1-form magnitude matches the coordinate residual scale
    assert!((geo.max_deviation - ddw.max_abs()).abs() <= 1e-12 * ddw.max_abs().max(1.0));

    // zero fields, massless: residual identically zero
    let free = kg_system("0");
    let spec = GridSpec { t_max: 1.0, nt: 8, x_max: 1.0, nx: 4 };
    let zero =
        DiscreteGamma::from_fields(&free, spec, &[&|_, _| 0.0], &[&|_, _| 0.0, &|_, _| 0.0])
            .unwrap();
    assert_eq!(geometric_residual(&free, &zero).unwrap().max_deviation, 0.0);
}

#[test]
fn geometric_residual_single_point_brute_force() {
    // hand-expanded check at one grid node: the reduced 1-form components
    // must equal (family1_t, family1_x, -family2) for n = 2
    let sys = kg_system("1");
    let gamma = standing_gamma(&sys, 8, 8);
    let (it, ix) = (3, 2);
    let u_t = gamma.dt(&gamma.y[0], it, ix);
    let u_x = gamma.dx(&gamma.y[0], it, ix);
    let pt_t = gamma.dt(&gamma.p[0], it, ix);
    let px_x = gamma.dx(&gamma.p[1], it, ix);
    let id = gamma.idx(it, ix);
    let (y, pt, px) = (gamma.y[0][id], gamma.p[0][id], gamma.p[1][id]);
    // dH/dp^t = p^t, dH/dp^x = -p^x, dH/dy = y (unit mass)
    let fam1_t = u_t - pt;
    let fam1_x = u_x + px;
    let fam2 = pt_t + px_x + y;
    let expected = fam1_t.abs().max(fam1_x.abs()).max(fam2.abs());
    let geo = geometric_residual(&sys, &gamma).unwrap();
    let ddw = ddw_residual(&sys, &gamma).unwrap();
    let node = (it - 1) * gamma.nx + ix;
    assert!((ddw.family1[0].values[node] - fam1_t).abs() < 1e-15);
    assert!((ddw.family1[1].values[node] - fam1_x).abs() < 1e-15);
    assert!((ddw.family2[0].values[node] - fam2).abs() < 1e-15);
    assert!(geo.max_deviation >= expected * (1.0 - 1e-12));
}

#[test]
fn geometric_residual_reduces_to_mechanics_for_n1() {
    // n = 1 oscillator as a DDW system: H = (p^2 + q^2)/2
    let l = e("v^2/2 - q^2/2");
    let lf = LagrangianField::new(&["t"], &["q"], &[&["v"]], l).unwrap();
    let sys = legendre_field(&lf).unwrap();
    // exact-solution samples q = cos t, p = -sin t
    let spec = GridSpec { t_max: 1.0, nt: 64, x_max: 0.0, nx: 1 };
    let gamma = DiscreteGamma::from_fields(
        &sys,
        spec,
        &[&|t: f64, _| t.cos()],
        &[&|t: f64, _| -t.sin()],
    )
    .unwrap();
    let geo = geometric_residual(&sys, &gamma).unwrap();
    assert!(geo.route_disagreement <= EQUIVALENCE_TOLERANCE);
    // |xi . Omega + dH_cov| components are O(h^2) on the exact solution
    assert!(geo.max_deviation <= 1e-3, "n=1 deviation {}", geo.max_deviation);
}

#[test]
fn solver_matches_manufactured_solution() {
    let sys = kg_system("1");
    let w = omega_disp();
    let x_max = 2.0 * std::f64::consts::PI;
    let run = |nt: usize, nx: usize| -> f64 {
        let gamma = solve_field(
            &sys,
            &|x| (KWAVE * x).cos(),
            &|_| 0.0,
            GridSpec { t_max: 1.0, nt, x_max, nx },
        )
        .unwrap();
        let mut err = 0.0_f64;
        for it in 0..=nt {
            let t = gamma.t(it);
            for ix in 0..nx {
                let exact = (w * t).cos() * (KWAVE * gamma.x(ix)).cos();
                err = err.max((gamma.y[0][gamma.idx(it, ix)] - exact).abs());
            }
        }
        err
    };
    let e1 = run(64, 64);
    let e2 = run(128, 128);
    assert!(e1 < 5e-3, "coarse error {e1}");
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "solver convergence ratio {ratio}");
}

#[test]
fn solver_output_residuals_and_equivalence() {
    let sys = kg_system("1");
    let run = |nt: usize, nx: usize| {
        solve_field(
            &sys,
            &|x| (KWAVE * x).cos(),
            &|x| 0.3 * (2.0 * x).sin(),
            GridSpec { t_max: 1.0, nt, x_max: 2.0 * std::f64::consts::PI, nx },
        )
        .unwrap()
    };
    let coarse = run(64, 64);
    let fine = run(128, 128);
    let r1 = ddw_residual(&sys, &coarse).unwrap().max_abs();
    let r2 = ddw_residual(&sys, &fine).unwrap().max_abs();
    let ratio = r1 / r2;
    assert!((3.5..=4.5).contains(&ratio), "solver residual ratio {ratio}");

    // equivalence of the two residual routes on solver output
    let geo = geometric_residual(&sys, &coarse).unwrap();
    assert!(geo.route_disagreement <= EQUIVALENCE_TOLERANCE);
}

#[test]
fn solver_trivial_and_error_cases() {
    let sys = kg_system("1");
    // zero initial data stays zero
    let gamma = solve_field(
        &sys,
        &|_| 0.0,
        &|_| 0.0,
        GridSpec { t_max: 1.0, nt: 16, x_max: 6.0, nx: 16 },
    )
    .unwrap();
    assert!(gamma.y[0].iter().all(|v| *v == 0.0));

    // CFL violation is rejected with the computed ratio
    match solve_field(
        &sys,
        &|_| 0.0,
        &|_| 0.0,
        GridSpec { t_max: 1.5, nt: 10, x_max: 1.0, nx: 10 },
    ) {
        Err(DdwError::CflViolation { ratio }) => assert!((ratio - 1.5).abs() < 1e-12),
        other => panic!("expected CFL violation, got {other:?}"),
    }

    // non-wave Hamiltonians are rejected
    let odd = DDWSystem::new(&["t", "x"], &["y"], e("p_t_y^2/2 + p_x_y^2/2")).unwrap();
    assert!(matches!(
        solve_field(&odd, &|_| 0.0, &|_| 0.0, GridSpec { t_max: 1.0, nt: 8, x_max: 6.0, nx: 8 }),
        Err(DdwError::NotWaveFamily(_))
    ));
}

#[test]
fn leapfrog_energy_drift_second_order() {
    let sys = kg_system("1");
    let drift = |nt: usize, nx: usize| -> f64 {
        let gamma = solve_field(
            &sys,
            &|x| (KWAVE * x).cos(),
            &|_| 0.0,
            GridSpec { t_max: 1.0, nt, x_max: 2.0 * std::f64::consts::PI, nx },
        )
        .unwrap();
        let series = energy_series(&sys, &gamma).unwrap();
        let e0 = series[0];
        series.iter().fold(0.0_f64, |m, v| m.max((v - e0).abs()))
    };
    let d1 = drift(64, 64);
    let d2 = drift(128, 128);
    let ratio = d1 / d2;
    assert!((3.0..=5.0).contains(&ratio), "energy drift ratio {ratio} ({d1} / {d2})");
}

#[test]
fn energy_constant_matches_continuum_value() {
    // standing wave energy: (X/4) * w^2 with unit amplitude
    let sys = kg_system("1");
    let gamma = standing_gamma(&sys, 64, 64);
    let series = energy_series(&sys, &gamma).unwrap();
    let x_max = 2.0 * std::f64::consts::PI;
    let exact = x_max / 4.0 * omega_disp().powi(2);
    for v in &series {
        assert!((v - exact).abs() < 5e-3 * exact, "energy {v} vs {exact}");
    }
}

#[test]
fn grid_export_roundtrip() {
    let sys = kg_system("1");
    let gamma = standing_gamma(&sys, 4, 4);
    let mut csv = Vec::new();
    gamma.write_csv(&sys, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,x,y,p_t_y,p_x_y,e\n"));
    assert_eq!(text.lines().count(), 1 + gamma.nodes());
    let json = gamma.to_json(&sys);
    assert_eq!(json["nt"], 4);
    assert!(json["variables"]["p_x_y"].as_array().unwrap().len() == gamma.nodes());
}
