//! Acceptance criteria, one PASS/FAIL line each. Runs with a custom harness
//! so every line is printed regardless of output capture.

use std::path::PathBuf;

use gradcert_cli::{cmd_certify, cmd_check, load_problem, ProblemSpec};
use gradcert::critical::{classify, find_critical_points, CriticalKind};
use gradcert::expr::{parse, Expr};
use gradcert::fields::{
    exterior_derivative_1, exterior_derivative_2, Chart, OneForm, ScalarField, TensorField,
    TwoForm, VectorField,
};
use gradcert::gradlike::{
    blend_certificates, certify, check_certificate, construct_certificate_embryonic,
    construct_certificate_morse, delta_from_certificate, forced_tensor_1d, solve_vector_field,
    Certificate, Cutoff, EmbryonicNormalForm, GradError, Region, Status, DEFAULT_SEED,
};
use gradcert::tol::Tolerances;
use gradcert::weinstein::{
    check_weinstein, cotangent_fixture, cotangent_vars, deform, homotopy, standard_j,
    stein_to_weinstein, WeinsteinError, WeinsteinStructure,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../cli/problems")
        .join(format!("{name}.toml"))
}

fn load(name: &str) -> ProblemSpec {
    load_problem(&problem(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn scalar(dim: usize, vars: &[&str], src: &str) -> ScalarField {
    ScalarField::new(dim, parse(src, &names(vars)).unwrap()).unwrap()
}

fn vector(dim: usize, vars: &[&str], src: &[&str]) -> VectorField {
    let v = names(vars);
    VectorField::from_exprs(dim, src.iter().map(|s| parse(s, &v).unwrap()).collect()).unwrap()
}

fn square() -> Chart {
    Chart::centered(2, 1.0).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let r = cmd_check(&load("cubic_quartic"), DEFAULT_SEED).map_err(|e| e.to_string())?;
    ensure(r.verdicts["condition1"].status == Status::Pass, || "x³/x⁴: condition1 not pass".into())?;
    ensure(r.verdicts["condition2"].status == Status::Fail, || "x³/x⁴: condition2 not fail".into())?;
    let profile = r.decay_profiles.first().ok_or("x³/x⁴: no decay profile")?;
    let mut worst = 0.0f64;
    for k in 2..=8 {
        let rad = 0.5f64.powi(k);
        let oracle = 3.0 * rad.powi(6) / (rad.powi(8) + 9.0 * rad.powi(4));
        let got = profile
            .infimum_at_inner_radius(rad)
            .ok_or(format!("x³/x⁴: no annulus with inner radius {rad}"))?;
        let rel = (got - oracle).abs() / oracle;
        worst = worst.max(rel);
        ensure(rel <= 0.25, || format!("x³/x⁴: annulus at r={rad}: {got} vs oracle {oracle}"))?;
    }

    let spec = load("bump");
    let r = cmd_check(&spec, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let c2 = &r.verdicts["condition2"];
    let margin = c2.margin.unwrap_or(f64::NAN);
    ensure(c2.status == Status::Pass && (0.35..=0.55).contains(&margin), || {
        format!("bump: condition2 {:?} margin {margin}", c2.status)
    })?;
    let f = forced_tensor_1d(&spec.phi, spec.x.as_ref().unwrap(), &spec.chart().unwrap(), &spec.tol)
        .map_err(|e| e.to_string())?;
    let l = f.limits.first().ok_or("bump: no zero found")?;
    let (left, right) = (l.left.unwrap_or(f64::NAN), l.right.unwrap_or(f64::NAN));
    ensure((left - 1.0).abs() <= 1e-3 && (right - 2.0).abs() <= 1e-3 && f.obstruction, || {
        format!("bump: limits {left}, {right}, obstruction {}", f.obstruction)
    })?;
    ensure(r.verdicts["condition3_1d"].status == Status::Fail, || "bump: obstruction not reported".into())?;

    let spec = load("eliashberg");
    let r = cmd_check(&spec, DEFAULT_SEED).map_err(|e| e.to_string())?;
    for c in ["condition1", "condition2"] {
        ensure(r.verdicts[c].status == Status::Pass, || format!("Eliashberg: {c} {:?}", r.verdicts[c]))?;
    }
    let e_margin = r.verdicts["condition2"].margin.unwrap();
    let r = cmd_certify(&spec).map_err(|e| e.to_string())?;
    let v = &r.verdicts["certify"];
    ensure(v.status == Status::Inconclusive && r.certificate.is_none(), || {
        format!("Eliashberg: certify {:?}", v.status)
    })?;
    let local = certify(&spec.phi, spec.x.as_ref().unwrap(), &spec.chart().unwrap(), &spec.tol)
        .map_err(|e| e.to_string())?;
    ensure(
        local.local.iter().any(|l| {
            l.status == Status::Inconclusive && l.location.iter().all(|c| c.abs() < 1e-3)
        }),
        || format!("Eliashberg: no inconclusive piece at the origin: {:?}", local.local),
    )?;
    Ok(format!(
        "x³/x⁴ annulus error ≤ {:.1}%; bump margin {margin:.4}, limits {left:.4}/{right:.4}; Eliashberg condition2 margin {e_margin:.3e}, certify inconclusive",
        100.0 * worst
    ))
}

struct Fixture {
    name: &'static str,
    phi: ScalarField,
    x: VectorField,
    cert: Certificate,
}

fn certificate_fixtures() -> Vec<Fixture> {
    let tol = Tolerances::default();
    let xy = ["x", "y"];
    let mut out = Vec::new();

    let phi = scalar(2, &xy, "(x^2 + y^2)/2");
    let x = vector(2, &xy, &["x", "y"]);
    let cert = check_certificate(&phi, &x, &TensorField::identity(2), Region::Chart { chart: square() }, &tol);
    out.push(Fixture { name: "euclidean", phi, x, cert });

    let phi = scalar(2, &xy, "(x^2 + y^2)/2");
    let x = vector(2, &xy, &["x - y/2", "y + x/2"]);
    let cert = construct_certificate_morse(&phi, &x, &[0.0, 0.0], 0.5, &square(), &tol).unwrap();
    out.push(Fixture { name: "rotated-morse", phi: phi.clone(), x: x.clone(), cert });
    let cert = certify(&phi, &x, &square(), &tol).unwrap().certificate.unwrap();
    out.push(Fixture { name: "rotated-global", phi, x, cert });

    let nf = embryonic(&["w", "z"], "z");
    let cert = construct_certificate_embryonic(&nf, 0.5, &square(), &tol).unwrap();
    out.push(Fixture { name: "embryonic", phi: nf.phi(), x: nf.x(), cert });

    let w = stein_to_weinstein(&standard_j(2), &scalar(2, &xy, "(x^2 + y^2)/2"), &square(), &tol).unwrap();
    let cert = check_certificate(w.phi(), w.x(), w.certificate().unwrap(), Region::Chart { chart: square() }, &tol);
    out.push(Fixture { name: "stein", phi: w.phi().clone(), x: w.x().clone(), cert });

    for n in [1, 2] {
        let w = cotangent_fixture(n).unwrap();
        let chart = Chart::centered(2 * n, 1.0).unwrap();
        let cert = check_certificate(w.phi(), w.x(), w.certificate().unwrap(), Region::Chart { chart }, &tol);
        out.push(Fixture {
            name: if n == 1 { "cotangent-1" } else { "cotangent-2" },
            phi: w.phi().clone(),
            x: w.x().clone(),
            cert,
        });
    }
    out
}

fn embryonic(vars: &[&str], a2: &str) -> EmbryonicNormalForm {
    let v = names(vars);
    EmbryonicNormalForm {
        b: nalgebra::DMatrix::from_element(1, 1, 1.0),
        c: 1.0,
        a: vec![Expr::Const(1.0)],
        a1: Expr::Const(1.0),
        a2: vec![parse(a2, &v).unwrap()],
    }
}

fn random_point(rng: &mut ChaCha8Rng, region: &Region) -> Vec<f64> {
    let chart = region.chart();
    loop {
        let p: Vec<f64> = chart
            .lo()
            .iter()
            .zip(chart.hi())
            .map(|(lo, hi)| rng.random_range(*lo..=*hi))
            .collect();
        match region {
            Region::Chart { .. } => return p,
            Region::Ball { center, radius, .. } => {
                let d: f64 = p.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                if d.sqrt() <= *radius {
                    return p;
                }
            }
        }
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let fixtures = certificate_fixtures();
    for f in &fixtures {
        ensure(f.cert.passes(), || format!("{}: certificate does not pass", f.name))?;
        for _ in 0..200 {
            let p = random_point(&mut rng, f.cert.region());
            let bound = match delta_from_certificate(&f.phi, &f.x, f.cert.g(), &p) {
                Ok(b) => b,
                Err(GradError::BoundViolated { ratio, delta, .. }) => {
                    return Err(format!("{}: at {p:?} ratio {ratio} < δ {delta}", f.name))
                }
                Err(e) => return Err(format!("{}: {e}", f.name)),
            };
            let grad = f.phi.gradient(&p).unwrap();
            let xv = f.x.eval(&p).unwrap();
            let dphi_x: f64 = grad.iter().zip(&xv).map(|(a, b)| a * b).sum();
            let norms: f64 = grad.iter().chain(&xv).map(|v| v * v).sum();
            let slack = dphi_x - bound.delta * norms;
            worst = worst.min(slack);
            ensure(slack >= -1e-12, || format!("{}: slack {slack:e} at {p:?}", f.name))?;
        }
    }
    Ok(format!("{} fixtures × 200 points, min slack {worst:.3e}", fixtures.len()))
}

fn criterion_3() -> Outcome {
    let xy = ["x", "y"];
    let phi = scalar(2, &xy, "(x^2 + y^2)/2");
    let x = vector(2, &xy, &["x - y/2", "y + x/2"]);
    let c = construct_certificate_morse(&phi, &x, &[0.0, 0.0], 0.5, &square(), &Tolerances::default())
        .map_err(|e| e.to_string())?;
    let radius = match c.region() {
        Region::Ball { radius, .. } => *radius,
        Region::Chart { .. } => f64::NAN,
    };
    let m0 = c.g().matrix(&[0.0, 0.0]).unwrap();
    let origin = 0.5 * (m0[(0, 0)] + m0[(1, 1)]) - 0.5 * ((m0[(0, 0)] - m0[(1, 1)]).powi(2) + (m0[(0, 1)] + m0[(1, 0)]).powi(2)).sqrt();
    ensure(radius == 0.5, || format!("ball shrank to {radius}"))?;
    ensure(c.residual() < 1e-9, || format!("residual {:e}", c.residual()))?;
    ensure(c.positivity_margin() >= 0.5, || format!("margin {}", c.positivity_margin()))?;
    ensure((origin - 0.8).abs() < 1e-12, || format!("margin at origin {origin}, oracle 0.8"))?;
    Ok(format!(
        "residual {:.2e}, margin {:.4} on r=0.5, {origin:.4} at the origin",
        c.residual(),
        c.positivity_margin()
    ))
}

fn criterion_4() -> Outcome {
    let nf = embryonic(&["w", "z"], "z");
    let c = construct_certificate_embryonic(&nf, 0.5, &square(), &Tolerances::default())
        .map_err(|e| e.to_string())?;
    let radius = match c.region() {
        Region::Ball { radius, .. } => *radius,
        Region::Chart { .. } => f64::NAN,
    };
    ensure(radius == 0.5, || format!("ball shrank to {radius}"))?;
    ensure(c.residual() < 1e-10, || format!("residual {:e}", c.residual()))?;
    ensure(c.positivity_margin() >= 1.0 - 0.25 - 1e-6, || format!("margin {}", c.positivity_margin()))?;
    // eigenvalue oracle 1 − |z|/2 pointwise
    for z in [-0.5, -0.2, 0.0, 0.3, 0.5] {
        let m = c.g().matrix(&[0.0, z]).unwrap();
        let s = (&m + m.transpose()) * 0.5;
        let lmin = s.symmetric_eigenvalues().min();
        ensure((lmin - (1.0 - z.abs() / 2.0)).abs() < 1e-12, || format!("λ_min {lmin} at z={z}"))?;
    }
    Ok(format!("residual {:.2e}, margin {:.6}", c.residual(), c.positivity_margin()))
}

fn criterion_5() -> Outcome {
    let tol = Tolerances::default();
    let xy = ["x", "y"];
    let phi = scalar(2, &xy, "(x^2 + y^2)/2");
    let x = vector(2, &xy, &["x - y/2", "y + x/2"]);
    let r = certify(&phi, &x, &square(), &tol).map_err(|e| e.to_string())?;
    let global = r.certificate.ok_or("no global certificate")?;
    let again = check_certificate(&phi, &x, global.g(), Region::Chart { chart: square() }, &tol);
    ensure(again.passes() && again.residual() < 1e-8 && again.positivity_margin() > 0.0, || {
        format!("recheck: residual {:e}, margin {}", again.residual(), again.positivity_margin())
    })?;

    // Certificates for X = ∇φ = (x, y): I + c·u·(−y, x)ᵀ kills (x, y).
    let phi = scalar(2, &xy, "(x^2 + y^2)/2");
    let x = vector(2, &xy, &["x", "y"]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let piece = |rng: &mut ChaCha8Rng| {
        let c: f64 = rng.random_range(-0.5..0.5);
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (a, b) = (c * th.cos(), c * th.sin());
        let src = [
            format!("1 - ({a})*y"),
            format!("({a})*x"),
            format!("-({b})*y"),
            format!("1 + ({b})*x"),
        ];
        let g = TensorField::from_exprs(
            2,
            src.iter().map(|s| parse(s, &names(&xy)).unwrap()).collect(),
        )
        .unwrap();
        check_certificate(&phi, &x, &g, Region::Chart { chart: square() }, &tol)
    };
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let (c1, c2) = (piece(&mut rng), piece(&mut rng));
        ensure(c1.passes() && c2.passes(), || format!("pair {i}: piece fails"))?;
        let (al, be, ga): (f64, f64, f64) =
            (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..6.3));
        let rho = Cutoff::Field(scalar(2, &xy, &format!("(1 + sin(({al})*x + ({be})*y + ({ga})))/2")));
        let rest = Cutoff::Complement(vec![rho.clone()]);
        let b = blend_certificates(&[(c1.clone(), rho), (c2.clone(), rest)], &phi, &x, &square(), &tol)
            .map_err(|e| format!("pair {i}: {e}"))?;
        let floor = c1.positivity_margin().min(c2.positivity_margin());
        worst = worst.min(b.positivity_margin() - floor);
        ensure(b.passes() && b.positivity_margin() >= floor - 1e-12, || {
            format!("pair {i}: blended margin {} below {floor}", b.positivity_margin())
        })?;
    }
    Ok(format!(
        "global residual {:.2e}, margin {:.4}; 100 blends, margin − min(pieces) ≥ {worst:.3e}",
        again.residual(),
        again.positivity_margin()
    ))
}

fn criterion_6() -> Outcome {
    let tol = Tolerances::default();
    let chart = Chart::centered(1, 2.0).unwrap();
    let g = TensorField::identity(1);
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let phi = scalar(1, &["x"], &format!("x^2/2 + ({t})*x"));
        let x = solve_vector_field(&phi, &g).map_err(|e| e.to_string())?;
        for p in chart.grid_points() {
            worst = worst.max((x.eval(&p).unwrap()[0] - (p[0] + t)).abs());
        }
        let crit = find_critical_points(&phi, &chart, &tol);
        ensure(crit.isolated.len() == 1 && crit.non_isolated.is_empty(), || {
            format!("t={t}: critical set {crit:?}")
        })?;
        let cp = classify(&phi, &crit.isolated[0], &tol).map_err(|e| e.to_string())?;
        ensure((cp.location[0] + t).abs() < 1e-12, || format!("t={t}: critical point {:?}", cp.location))?;
        ensure(matches!(cp.kind, CriticalKind::Morse { index: 0 }), || format!("t={t}: {:?}", cp.kind))?;
    }
    ensure(worst < 1e-12, || format!("|X_t − (x + t)| = {worst:e}"))?;
    Ok(format!("11 values of t, |X_t − (x + t)| ≤ {worst:.1e}, one Morse point at −t"))
}

fn radial() -> WeinsteinStructure {
    let xy = ["x", "y"];
    WeinsteinStructure::new(
        TwoForm::from_wedges(2, &[(0, 1, Expr::Const(1.0))]).unwrap(),
        vector(2, &xy, &["x/2", "y/2"]),
        scalar(2, &xy, "(x^2 + y^2)/4"),
        Some(TensorField::identity(2)),
    )
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_7() -> Outcome {
    let tol = Tolerances::default();
    let w = radial();
    let g = TensorField::identity(2);
    let report = check_weinstein(&w, &square(), &tol);
    let closed = report.closedness_residual.unwrap_or(f64::NAN);
    let liouville = report.liouville_residual.unwrap_or(f64::NAN);
    ensure(report.status == Status::Pass && closed < 1e-10 && liouville < 1e-10, || {
        format!("input: {:?}, dω {closed:e}, Liouville {liouville:e}", report.status)
    })?;

    let scaled = scalar(2, &["x", "y"], "(1.1)*((x^2+y^2)/4)");
    let r = deform(&w, &g, &scaled, &square(), &tol).map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    for p in square().grid_points() {
        let s = |v: Vec<f64>| v.into_iter().map(|a| 1.1 * a).collect::<Vec<_>>();
        err = err.max(max_diff(&r.lambda.eval(&p).unwrap(), &s(w.lambda().eval(&p).unwrap())));
        err = err.max(max_diff(&r.structure.omega().eval(&p).unwrap(), &s(w.omega().eval(&p).unwrap())));
        err = err.max(max_diff(&r.structure.certificate().unwrap().eval(&p).unwrap(), &s(g.eval(&p).unwrap())));
        err = err.max(max_diff(&r.structure.x().eval(&p).unwrap(), &w.x().eval(&p).unwrap()));
    }
    ensure(err < 1e-10, || format!("scaling oracle error {err:e}"))?;

    let bump = scalar(2, &["x", "y"], "(x^2 + y^2)/4 + 0.05*exp(-4*(x^2 + y^2))");
    let h = homotopy(&w, &g, &bump, 11, &square(), &tol);
    ensure(h.all_passed() && h.results.len() == 11, || format!("homotopy stopped: {:?}", h.failure))?;

    let r = deform(&w, &g, &bump, &square(), &tol).map_err(|e| e.to_string())?;
    let d = &r.diagnostics;
    ensure(d.liouville < 1e-8, || format!("bump Liouville residual {:e}", d.liouville))?;
    ensure(d.positivity_margin > 0.3, || {
        format!(
            "bump: g̃ margin {:.6} ≤ 0.3 (g̃ = Δφ̃·I, min 1 − 0.05·16 = 0.2 at the origin); scaling error {err:.1e}, homotopy 11/11 pass, Liouville {:.1e}",
            d.positivity_margin, d.liouville
        )
    })?;
    Ok(format!("scaling error {err:.1e}; bump margin {:.4}; homotopy 11/11", d.positivity_margin))
}

fn criterion_8() -> Outcome {
    let tol = Tolerances::default();
    let xy = ["x", "y"];
    let w = stein_to_weinstein(&standard_j(2), &scalar(2, &xy, "(x^2 + y^2)/2"), &square(), &tol)
        .map_err(|e| e.to_string())?;
    let exprs = w.omega().exprs().ok_or("ω is not symbolic")?;
    let expect = [0.0, -2.0, 2.0, 0.0];
    ensure(exprs.iter().zip(expect).all(|(e, v)| e.simplify().is_const(v)), || {
        format!("Ω = {exprs:?}")
    })?;
    let mut res = 0.0f64;
    for p in square().grid_points() {
        res = res.max(max_diff(&w.x().eval(&p).unwrap(), &[p[0] / 2.0, p[1] / 2.0]));
    }
    ensure(res < 1e-12, || format!("|X_φ − (x/2, y/2)| = {res:e}"))?;
    match stein_to_weinstein(&standard_j(2), &scalar(2, &xy, "x^2 - y^2"), &square(), &tol) {
        Err(WeinsteinError::NotJConvex { .. }) => {}
        other => return Err(format!("x² − y²: {:?}", other.map(|_| ()))),
    }
    Ok(format!("Ω = ±2 exactly, X_φ residual {res:.1e}, x² − y² not J-convex"))
}

fn criterion_9() -> Outcome {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for n in [1, 2] {
        let w = cotangent_fixture(n).map_err(|e| e.to_string())?;
        let r = check_weinstein(&w, &Chart::centered(2 * n, 1.0).unwrap(), &tol);
        let l = r.liouville_residual.unwrap_or(f64::NAN);
        ensure(r.status == Status::Pass && l < 1e-10, || format!("n={n}: {:?}, Liouville {l:e}", r.verdicts))?;
        out.push(format!("n={n} ({}) Liouville {l:.1e}", cotangent_vars(n).join(",")));
    }
    Ok(out.join("; "))
}

const CALCULUS_EXPRS: [&str; 20] = [
    "x^2*y",
    "sin(x)*cos(y)",
    "exp(x*y)",
    "ln(x + 2)",
    "sqrt(x^2 + y^2 + 1)",
    "x/(1 + y^2)",
    "(x - y)^3",
    "exp(-x^2)*sin(3*y)",
    "cos(x^2 + y)",
    "ln(1 + x^2 + y^2)*x",
    "x^5 - 3*x^3*y + y^4",
    "sin(x)^2 + cos(y)^3",
    "1/(2 + sin(x*y))",
    "sqrt(2 + x)*exp(y/3)",
    "x*exp(-y^2/2)",
    "(x^2 + 1)/(y^2 + 2)",
    "sin(exp(x/2))",
    "cos(x)*ln(3 + y)",
    "x^2*y^3 - x*y + 7",
    "exp(sin(x) + cos(y))",
];

/// Five-point central difference.
fn finite_difference(e: &Expr, p: &[f64], i: usize) -> f64 {
    let h = 1e-3;
    let at = |s: f64| {
        let mut q = p.to_vec();
        q[i] += s * h;
        e.eval(&q).unwrap()
    };
    (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
}

fn criterion_10() -> Outcome {
    let xy = names(&["x", "y"]);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for src in CALCULUS_EXPRS {
        let e = parse(src, &xy).map_err(|e| e.to_string())?;
        let d = [e.diff(0), e.diff(1)];
        for _ in 0..50 {
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            for i in 0..2 {
                let s = d[i].eval(&p).unwrap();
                let f = finite_difference(&e, &p, i);
                let rel = (s - f).abs() / s.abs().max(1.0);
                worst = worst.max(rel);
                ensure(rel < 1e-6, || format!("∂{i} {src} at {p:?}: {s} vs {f}"))?;
            }
        }
    }

    let xyz = names(&["x", "y", "z"]);
    let mut dd = 0.0f64;
    for k in 0..50 {
        let mut coeff = || {
            let (a, b, c): (f64, f64, f64) = (
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let v = ["x", "y", "z"];
            let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
            let src = format!(
                "({a})*sin({b}*{} + {}) + ({c})*{}^2*{} + exp(({b})*{}*{})/3",
                v[i], v[j], v[j], v[i], v[i], v[(i + 1) % 3]
            );
            parse(&src, &xyz).unwrap()
        };
        let lambda = OneForm::from_exprs(3, vec![coeff(), coeff(), coeff()]).unwrap();
        let ddl = exterior_derivative_2(&exterior_derivative_1(&lambda));
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let r = ddl.max_abs_on(&pts).map_err(|e| e.to_string())?;
        dd = dd.max(r);
        ensure(r < 1e-12, || format!("1-form {k}: |ddλ| = {r:e}"))?;
    }
    Ok(format!("derivative rel. error ≤ {worst:.1e}; |d∘d| ≤ {dd:.1e}"))
}

fn run_cli(args: &[&str]) -> (String, i32) {
    let inv = gradcert_cli::app::run(std::iter::once("gradcert").chain(args.iter().copied()));
    (inv.stdout, inv.code)
}

fn criterion_11() -> Outcome {
    let invocations: [(&str, &str, i32); 11] = [
        ("check", "cubic_quartic", 1),
        ("check", "bump", 1),
        ("check", "eliashberg", 0),
        ("certify", "eliashberg", 3),
        ("certify", "rotated_gradient", 0),
        ("check", "euclidean_gradient", 0),
        ("deform", "radial_deform", 0),
        ("deform", "radial_bump", 0),
        ("deform", "radial_bump_homotopy", 0),
        ("stein", "stein_disc", 0),
        ("stein", "stein_saddle", 1),
    ];
    let mut runs = 0;
    for (cmd, name, code) in invocations {
        let path = problem(name);
        let args = [cmd, "--spec", path.to_str().unwrap()];
        let (a, ca) = run_cli(&args);
        let (b, cb) = run_cli(&args);
        runs += 2;
        ensure(!a.is_empty() && a == b, || format!("{cmd} {name}: output differs between runs"))?;
        ensure(ca == code && cb == code, || format!("{cmd} {name}: exit {ca}/{cb}, expected {code}"))?;
    }
    for n in ["1", "2"] {
        let (a, ca) = run_cli(&["fixture", "cotangent", n]);
        let (b, cb) = run_cli(&["fixture", "cotangent", n]);
        runs += 2;
        ensure(!a.is_empty() && a == b, || format!("fixture cotangent {n}: output differs"))?;
        ensure(ca == 0 && cb == 0, || format!("fixture cotangent {n}: exit {ca}/{cb}"))?;
    }
    Ok(format!("{runs} runs, byte-identical in pairs, exit codes as expected"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("hierarchy of conditions", criterion_1),
        ("δ extraction from certificates", criterion_2),
        ("Morse local certificate", criterion_3),
        ("embryonic local certificate", criterion_4),
        ("global certificate and blending", criterion_5),
        ("lift of a family of functions", criterion_6),
        ("Weinstein deformation", criterion_7),
        ("Stein to Weinstein", criterion_8),
        ("cotangent fixture", criterion_9),
        ("calculus", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} ({title}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({title}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
