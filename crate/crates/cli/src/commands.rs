use gradcert::critical::{classify, CriticalKind};
use gradcert::fields::{Chart, ScalarField, TensorField, VectorField};
use gradcert::gradlike::{
    certify, check_certificate, check_condition2, construct_certificate_morse, forced_tensor_1d,
    is_riemannian, GradError, Region, Status, Verdict, Witness,
};
use gradcert::numeric::positivity_margin;
use gradcert::tol::Tolerances;
use gradcert::weinstein::{
    check_weinstein, cotangent_fixture, deform, homotopy, stein_to_weinstein,
    DeformationDiagnostics, WeinsteinError, WeinsteinReport, WeinsteinStructure,
};

use crate::config::ProblemSpec;
use crate::report::{CertificateSummary, Report};
use crate::CliError;

fn classify_all(phi: &ScalarField, points: &[Vec<f64>], tol: &Tolerances, report: &mut Report) {
    for p in points {
        if let Ok(cp) = classify(phi, p, tol) {
            report.critical_points.push(cp);
        }
    }
}

/// Conditions (1) and (2); the one-dimensional obstruction to (3) when
/// `dim = 1`; (3) and (4) against `g` when one is given.
pub fn cmd_check(spec: &ProblemSpec, seed: u64) -> Result<Report, CliError> {
    let chart = spec.chart()?;
    let x = spec.require_x()?;
    let tol = &spec.tol;
    let mut report = Report::new("check");

    let c2 = check_condition2(&spec.phi, x, &chart, tol, seed);
    classify_all(
        &spec.phi,
        &c2.condition1.zero_sets.critical.isolated,
        tol,
        &mut report,
    );
    report.put("condition1", c2.condition1.verdict.clone());
    report.put("condition2", c2.verdict.clone());
    report.decay_profiles = c2.profiles;

    if spec.dim == 1 {
        report.put("condition3_1d", condition3_1d(&spec.phi, x, &chart, tol));
    }
    if let Some(g) = &spec.g {
        let region = Region::Chart {
            chart: chart.clone(),
        };
        let cert = check_certificate(&spec.phi, x, g, region, tol);
        let mut c4 = cert.verdict().clone();
        let riemannian = is_riemannian(g, &chart, tol);
        if riemannian.status != Status::Pass || c4.status != Status::Pass {
            c4 = if riemannian.status > c4.status { riemannian } else { c4 };
        } else if let (Some(a), Some(b)) = (c4.margin, riemannian.margin) {
            c4.margin = Some(a.min(b));
        }
        report.put("condition3", cert.verdict().clone());
        report.put("condition4", c4);
        report.certificate = Some(CertificateSummary::from(&cert));
    }
    Ok(report)
}

fn condition3_1d(phi: &ScalarField, x: &VectorField, chart: &Chart, tol: &Tolerances) -> Verdict {
    let forced = match forced_tensor_1d(phi, x, chart, tol) {
        Ok(f) => f,
        Err(e) => return Verdict::inconclusive(e.to_string()),
    };
    let limit = |v: Option<f64>| v.unwrap_or(f64::NAN);
    if let Some(l) = forced.limits.iter().find(|l| l.obstruction) {
        return Verdict::fail(Witness::new(
            &[l.zero],
            &[("left_limit", limit(l.left)), ("right_limit", limit(l.right))],
        ))
        .with_note("forced tensor φ'/X has no continuous positive extension across a zero of X");
    }
    let mut worst: Option<(f64, f64)> = None;
    for &(p, g) in &forced.samples {
        if worst.is_none_or(|(_, w)| g < w) {
            worst = Some((p, g));
        }
    }
    for l in &forced.limits {
        let g = limit(l.left).min(limit(l.right));
        if worst.is_none_or(|(_, w)| g < w) {
            worst = Some((l.zero, g));
        }
    }
    match worst {
        Some((_, g)) if g > 0.0 => Verdict::pass(g),
        Some((p, g)) => Verdict::fail(Witness::new(&[p], &[("forced_tensor", g)])),
        None => Verdict::inconclusive("no samples"),
    }
}

/// Assembles a global certificate. With `radius`, also reports the local
/// Morse certificate on that ball around each Morse critical point.
pub fn cmd_certify(spec: &ProblemSpec) -> Result<Report, CliError> {
    let chart = spec.chart()?;
    let x = spec.require_x()?;
    let tol = &spec.tol;
    let mut report = Report::new("certify");

    let result = match certify(&spec.phi, x, &chart, tol) {
        Ok(r) => r,
        Err(GradError::Condition1Fails(v)) => {
            let mut c = (*v).clone();
            c.notes.push("condition (1) fails; no certificate exists".into());
            report.put("condition1", *v);
            report.put("certify", c);
            return Ok(report);
        }
        Err(e) => return Err(CliError::Core(e.to_string())),
    };
    report.put("condition1", result.condition1.clone());
    report.critical_points = result.critical_points.clone();

    let verdict = match (&result.certificate, result.status) {
        (Some(c), Status::Pass) => c.verdict().clone(),
        (_, Status::Fail) => {
            let piece = result.local.iter().find(|l| l.status == Status::Fail);
            let mut v = Verdict::fail(Witness::new(
                piece.map_or(&[][..], |l| &l.location[..]),
                &[],
            ));
            v.notes.extend(piece.and_then(|l| l.note.clone()));
            v
        }
        _ => {
            let mut v = Verdict::inconclusive("no global certificate");
            v.notes.extend(
                result
                    .local
                    .iter()
                    .filter_map(|l| l.note.as_ref().map(|n| format!("at {:?}: {n}", l.location))),
            );
            v
        }
    };
    let mut verdict = verdict;
    verdict.notes.extend(result.notes.iter().cloned());
    report.put("certify", verdict);
    report.certificate = result.certificate.as_ref().map(CertificateSummary::from);

    if let Some(radius) = spec.radius {
        for (i, cp) in result.critical_points.iter().enumerate() {
            if !matches!(cp.kind, CriticalKind::Morse { .. }) {
                continue;
            }
            let v = match construct_certificate_morse(&spec.phi, x, &cp.location, radius, &chart, tol) {
                Ok(c) => {
                    let mut v = c.verdict().clone();
                    v.notes.push(format!(
                        "residual {:e}, positivity margin {:e}, radius {}",
                        c.residual(),
                        c.positivity_margin(),
                        match c.region() {
                            Region::Ball { radius, .. } => *radius,
                            Region::Chart { .. } => radius,
                        }
                    ));
                    v
                }
                Err(GradError::LinearizationNotLyapunov { .. }) => {
                    Verdict::fail(Witness::new(&cp.location, &[])).with_note("linearization is not Lyapunov")
                }
                Err(e) => Verdict::inconclusive(e.to_string()),
            };
            report.put(format!("morse_local_{i}"), v);
        }
    }
    Ok(report)
}

fn weinstein_verdicts(report: &mut Report, prefix: &str, w: &WeinsteinReport) {
    for (k, v) in &w.verdicts {
        report.put(format!("{prefix}{k}"), v.clone());
    }
    if report.certificate.is_none() {
        report.certificate = w.certificate.as_ref().map(CertificateSummary::from);
    }
}

fn diagnostics_witness(d: &DeformationDiagnostics) -> Witness {
    let mut values = vec![
        ("closedness", d.closedness),
        ("nondegeneracy", d.nondegeneracy),
        ("liouville", d.liouville),
        ("interior", d.interior),
        ("certificate_residual", d.certificate_residual),
        ("positivity_margin", d.positivity_margin),
        ("input_consistency", d.input_consistency),
    ];
    if let Some(t) = d.t {
        values.push(("t", t));
    }
    Witness::new(&[], &values)
}

fn deformation_failure(report: &mut Report, e: &WeinsteinError) -> Verdict {
    let v = match e {
        WeinsteinError::NotCloseEnough { diagnostics, .. } => {
            report.deformation.push((**diagnostics).clone());
            Verdict::fail(diagnostics_witness(diagnostics))
        }
        WeinsteinError::InconsistentInput { residual } => {
            Verdict::fail(Witness::new(&[], &[("input_consistency", *residual)]))
        }
        WeinsteinError::Degenerate { at, det } => Verdict::fail(Witness::new(at, &[("det", *det)])),
        _ => Verdict::fail(Witness::new(&[], &[])),
    };
    v.with_note(e.to_string())
}

/// Checks the input Weinstein structure, then deforms it to `phi_tilde`,
/// along a homotopy of `steps` values when `steps` is given.
pub fn cmd_deform(spec: &ProblemSpec) -> Result<Report, CliError> {
    let chart = spec.chart()?;
    let tol = &spec.tol;
    let g = spec.require_g()?;
    let phi_tilde = spec.require_phi_tilde()?;
    let w = WeinsteinStructure::new(
        spec.require_omega()?.clone(),
        spec.require_x()?.clone(),
        spec.phi.clone(),
        Some(g.clone()),
    )
    .map_err(|e| CliError::Core(e.to_string()))?;
    let mut report = Report::new("deform");
    weinstein_verdicts(&mut report, "input.", &check_weinstein(&w, &chart, tol));

    let verdict = match spec.steps {
        Some(steps) => {
            let h = homotopy(&w, g, phi_tilde, steps, &chart, tol);
            report
                .deformation
                .extend(h.results.iter().map(|r| r.diagnostics.clone()));
            match &h.failure {
                Some((_, e)) => deformation_failure(&mut report, e),
                None => min_margin_verdict(&report.deformation),
            }
        }
        None => match deform(&w, g, phi_tilde, &chart, tol) {
            Ok(r) => {
                report.deformation.push(r.diagnostics);
                min_margin_verdict(&report.deformation)
            }
            Err(e) => deformation_failure(&mut report, &e),
        },
    };
    report.put("deformation", verdict);
    Ok(report)
}

fn min_margin_verdict(diags: &[DeformationDiagnostics]) -> Verdict {
    let m = diags
        .iter()
        .map(|d| d.positivity_margin)
        .fold(f64::INFINITY, f64::min);
    if m.is_finite() && m > 0.0 {
        Verdict::pass(m)
    } else {
        Verdict::inconclusive("no deformation evaluated")
    }
}

/// Weinstein structure of a J-convex function.
pub fn cmd_stein(spec: &ProblemSpec) -> Result<Report, CliError> {
    let chart = spec.chart()?;
    let tol = &spec.tol;
    let j = spec.require_j()?;
    let mut report = Report::new("stein");
    match stein_to_weinstein(j, &spec.phi, &chart, tol) {
        Ok(w) => {
            report.put("j_convex", j_convex_verdict(w.certificate(), &chart));
            weinstein_verdicts(&mut report, "", &check_weinstein(&w, &chart, tol));
        }
        Err(WeinsteinError::NotJConvex {
            at,
            direction,
            margin,
        }) => {
            let mut values = vec![("margin", margin)];
            let names: Vec<String> = (0..direction.len()).map(|i| format!("direction_{i}")).collect();
            values.extend(names.iter().map(String::as_str).zip(direction.iter().copied()));
            report.put(
                "j_convex",
                Verdict::fail(Witness::new(&at, &values)).with_note("g_φ = ω_φ(·, J·) is not positive"),
            );
        }
        Err(WeinsteinError::NotAlmostComplex { at, residual }) => {
            report.put(
                "almost_complex",
                Verdict::fail(Witness::new(&at, &[("residual", residual)])).with_note("J² ≠ −I"),
            );
        }
        Err(e) => return Err(CliError::Core(e.to_string())),
    }
    Ok(report)
}

fn j_convex_verdict(g: Option<&TensorField>, chart: &Chart) -> Verdict {
    let Some(g) = g else {
        return Verdict::inconclusive("no metric");
    };
    let mut margin = f64::INFINITY;
    for p in chart.grid_points() {
        match g.matrix(&p) {
            Ok(m) => margin = margin.min(positivity_margin(&m)),
            Err(e) => return Verdict::inconclusive(e.to_string()),
        }
    }
    Verdict::pass(margin)
}

/// Built-in fixtures. `cotangent n` is `T*ℝⁿ` with its Liouville structure.
pub fn cmd_fixture(name: &str, n: usize, grid_n: Option<usize>) -> Result<Report, CliError> {
    if name != "cotangent" {
        return Err(CliError::Usage(format!("unknown fixture `{name}`")));
    }
    let w = cotangent_fixture(n).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut chart = Chart::centered(2 * n, 1.0).map_err(|e| CliError::Core(e.to_string()))?;
    if let Some(k) = grid_n {
        chart = chart
            .with_resolution(k)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut report = Report::new(&format!("fixture cotangent {n}"));
    weinstein_verdicts(&mut report, "", &check_weinstein(&w, &chart, &Tolerances::default()));
    Ok(report)
}
