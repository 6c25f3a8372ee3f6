//! The gradient-like conditions on a pair `(X, φ)` and tensor certificates.
//!
//! Four conditions of decreasing generality are checked on a chart lattice:
//!
//! 1. `dφ(X) > 0` away from `Zero(X) = Crit(φ)`;
//! 2. `dφ(X) ≥ δ (|X|² + |dφ|²)` for a positive function `δ`;
//! 3. `dφ = g(X, ·)` for a positive, not necessarily symmetric, tensor `g`;
//! 4. as (3) with `g` a Riemannian metric.
//!
//! Every verdict is tri-state. A pass only speaks for the samples that were
//! tested and always carries [`CAVEAT`].

mod certificate;
mod oned;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::critical::{lex_cmp, zero_sets_match, CriticalError, CriticalKind, ZeroSetComparison};
use crate::expr::{EvalError, Scalar, Wide};
use crate::fields::{Chart, Components, ScalarField, VectorField};
use crate::numeric::norm_sq;
use crate::tol::Tolerances;

pub use certificate::{
    blend_certificates, certify, check_certificate, construct_certificate_embryonic,
    construct_certificate_morse, construct_certificate_regular, delta_from_certificate,
    is_riemannian, regular_tensor, solve_vector_field, Certificate, CertifyReport, Cutoff,
    DeltaBound, EmbryonicNormalForm, LocalPiece, Region,
};
pub use oned::{forced_tensor_1d, ForcedTensor1d, OneSidedLimits};

/// Attached to every passing verdict.
pub const CAVEAT: &str = "grid-verified, not a proof";

/// Seed for the random annulus directions in dimension three and up.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Innermost radius `r₀` and number of halvings `K` of a decay profile.
pub const DECAY_R0: f64 = 0.5;
pub const DECAY_K: usize = 8;
const MIN_ANNULUS_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    /// `Fail` beats `Inconclusive` beats `Pass`.
    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub values: BTreeMap<String, f64>,
}

impl Witness {
    pub fn new(point: &[f64], values: &[(&str, f64)]) -> Self {
        Witness {
            point: point.to_vec(),
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub margin: Option<f64>,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
    pub caveat: Option<&'static str>,
}

impl Verdict {
    pub fn pass(margin: f64) -> Self {
        debug_assert!(margin > 0.0, "pass needs a positive margin, got {margin}");
        Verdict {
            status: Status::Pass,
            margin: Some(margin),
            witness: None,
            notes: Vec::new(),
            caveat: Some(CAVEAT),
        }
    }

    pub fn fail(witness: Witness) -> Self {
        Verdict {
            status: Status::Fail,
            margin: None,
            witness: Some(witness),
            notes: Vec::new(),
            caveat: None,
        }
    }

    pub fn inconclusive(note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Inconclusive,
            margin: None,
            witness: None,
            notes: vec![note.into()],
            caveat: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error("|X|² + |dφ|² vanishes at {at:?}")]
    ZeroDenominator { at: Vec<f64> },
    #[error("tensor is not positive at {at:?}: λ_min of the symmetric part is {a}")]
    NotPositive { at: Vec<f64>, a: f64 },
    #[error("the bound dφ(X) ≥ δ(|X|² + |dφ|²) fails at {at:?}: ratio {ratio} < δ {delta}")]
    BoundViolated { at: Vec<f64>, ratio: f64, delta: f64 },
    #[error("tensor is singular")]
    SingularTensor,
    #[error("critical point at {at:?} is not Morse ({kind:?})")]
    NotMorse { at: Vec<f64>, kind: CriticalKind },
    #[error("X does not vanish at the critical point {at:?} (|X| = {norm:e})")]
    NotAZeroOfX { at: Vec<f64>, norm: f64 },
    #[error("linearization at {at:?} is not Lyapunov: λ_min(sym(H·DX)) = {margin}")]
    LinearizationNotLyapunov { at: Vec<f64>, margin: f64 },
    #[error("no positive radius around {at:?}: margin {margin} at radius {radius}")]
    NoPositiveRadius { at: Vec<f64>, radius: f64, margin: f64 },
    #[error("not in normal form: {0}")]
    NormalFormViolation(String),
    #[error("dφ(X) = {value} ≤ 0 at {at:?}")]
    NotTransverse { at: Vec<f64>, value: f64 },
    #[error("cutoffs do not form a partition of unity at {at:?}: {reason}")]
    PartitionInvalid { at: Vec<f64>, reason: String },
    #[error("piece {index} is invalid on its support at {at:?}: {reason}")]
    PieceInvalidOnSupport { index: usize, at: Vec<f64>, reason: String },
    #[error("condition (1) fails")]
    Condition1Fails(Box<Verdict>),
    #[error("expected a one-dimensional chart, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("zeros of X are not isolated")]
    NonIsolatedZeros,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Critical(#[from] CriticalError),
}

pub(crate) fn check_dims(phi: &ScalarField, x: &VectorField, chart: &Chart) -> Result<(), GradError> {
    if phi.dim() != x.dim() || phi.dim() != chart.dim() {
        return Err(GradError::DimensionMismatch(format!(
            "φ on ℝ^{}, X on ℝ^{}, chart ℝ^{}",
            phi.dim(),
            x.dim(),
            chart.dim()
        )));
    }
    Ok(())
}

pub(crate) fn gradient_components(phi: &ScalarField) -> Components {
    Components::Symbolic(phi.gradient_exprs())
}

/// `(dφ(X), |X|² + |dφ|²)` in extended range, or `None` when both fields
/// vanish exactly.
fn pairing(grad: &Components, x: &VectorField, p: &[f64]) -> Result<Option<(Wide, Wide)>, EvalError> {
    let g = grad.eval_wide(p)?;
    let xv = x.components().eval_wide(p)?;
    let mut s = Wide::ZERO;
    let mut d = Wide::ZERO;
    for (a, b) in g.iter().zip(&xv) {
        s = s + *a * *b;
        d = d + *a * *a + *b * *b;
    }
    Ok((!d.is_zero()).then_some((s, d)))
}

/// `f64` value of a positive extended number, clamped to the smallest
/// subnormal so that positivity survives the conversion.
fn positive_f64(w: Wide) -> f64 {
    let v = w.to_f64();
    if w.sign() > 0 && v == 0.0 {
        f64::from_bits(1)
    } else {
        v
    }
}

/// Running minimum with lexicographic tie-break on the point.
struct MinTracker<T> {
    best: Option<(f64, Vec<f64>, T)>,
}

impl<T> MinTracker<T> {
    fn new() -> Self {
        MinTracker { best: None }
    }

    fn offer(&mut self, value: f64, point: &[f64], extra: T) {
        let better = match &self.best {
            None => true,
            Some((v, p, _)) => value < *v || (value == *v && lex_cmp(point, p).is_lt()),
        };
        if better {
            self.best = Some((value, point.to_vec(), extra));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition1Report {
    pub verdict: Verdict,
    pub zero_sets: ZeroSetComparison,
}

/// Condition (1): matching zero sets and `dφ(X) > 0` at every lattice point
/// outside the exclusion balls around them.
pub fn check_condition1(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
) -> Condition1Report {
    if let Err(e) = check_dims(phi, x, chart) {
        return Condition1Report {
            verdict: Verdict::inconclusive(e.to_string()),
            zero_sets: ZeroSetComparison {
                status: Status::Inconclusive,
                critical: Default::default(),
                zeros: Default::default(),
                unmatched_critical: Vec::new(),
                unmatched_zeros: Vec::new(),
            },
        };
    }
    let zero_sets = zero_sets_match(phi, x, chart, tol);
    let verdict = condition1_verdict(phi, x, chart, &zero_sets);
    Condition1Report { verdict, zero_sets }
}

fn exclusion_centers(cmp: &ZeroSetComparison) -> Vec<Vec<f64>> {
    let mut c = cmp.critical.all_points();
    c.extend(cmp.zeros.all_points());
    c
}

fn condition1_verdict(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    cmp: &ZeroSetComparison,
) -> Verdict {
    let grad = gradient_components(phi);
    if cmp.status == Status::Fail {
        let mut candidates: Vec<Vec<f64>> = cmp.unmatched_critical.clone();
        candidates.extend(cmp.unmatched_zeros.iter().cloned());
        candidates.sort_by(|a, b| lex_cmp(a, b));
        let p = &candidates[0];
        let xn = x.eval(p).map(|v| norm_sq(&v).sqrt()).unwrap_or(f64::NAN);
        let gn = grad.eval(p).map(|v| norm_sq(&v).sqrt()).unwrap_or(f64::NAN);
        return Verdict::fail(Witness::new(p, &[("|X|", xn), ("|dphi|", gn)]))
            .with_note("Zero(X) and Crit(phi) differ");
    }
    let points = chart.grid_points_excluding(&exclusion_centers(cmp));
    let values: Vec<Result<Option<(Wide, Wide)>, EvalError>> =
        points.par_iter().map(|p| pairing(&grad, x, p)).collect();

    let mut min = MinTracker::new();
    for (p, v) in points.iter().zip(values) {
        match v {
            Err(e) => {
                return Verdict::fail(Witness::new(p, &[])).with_note(format!("evaluation failed: {e}"))
            }
            Ok(None) => {}
            Ok(Some((s, _))) => {
                // compare in extended range, report in f64
                let key = if s.sign() > 0 { positive_f64(s) } else { s.to_f64() };
                min.offer(key, p, s);
            }
        }
    }
    let Some((value, point, wide)) = min.best else {
        return Verdict::inconclusive("no lattice samples outside the zero set");
    };
    if wide.sign() <= 0 {
        return Verdict::fail(Witness::new(&point, &[("dphi(X)", value)]));
    }
    let mut verdict = if cmp.status == Status::Inconclusive {
        let mut v = Verdict::inconclusive("zero set is not isolated");
        v.margin = Some(value);
        v
    } else {
        Verdict::pass(value)
    };
    if wide.to_f64() == 0.0 {
        verdict = verdict.with_note(format!(
            "minimum of dphi(X) is 2^{:.1}, below the f64 range",
            wide.log2_abs()
        ));
    }
    verdict
}

/// `dφ(X) / (|X|² + |dφ|²)` at `p`, evaluated in extended range.
pub fn lyapunov_ratio(phi: &ScalarField, x: &VectorField, p: &[f64]) -> Result<f64, GradError> {
    let grad = gradient_components(phi);
    ratio_at(&grad, x, p)?.ok_or_else(|| GradError::ZeroDenominator { at: p.to_vec() })
}

fn ratio_at(grad: &Components, x: &VectorField, p: &[f64]) -> Result<Option<f64>, EvalError> {
    Ok(pairing(grad, x, p)?.map(|(s, d)| (s / d).to_f64()))
}

/// Infima of the Lyapunov ratio on geometric annuli around a zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile {
    pub center: Vec<f64>,
    /// `r_k = r₀ 2^{-k}`, `k = 0..=K`.
    pub radii: Vec<f64>,
    /// Entry `k` is the infimum on `r_{k+1} ≤ |z − p| ≤ r_k`; `None` when the
    /// annulus has no sample inside the chart with a defined ratio.
    pub infima: Vec<Option<f64>>,
    pub samples: Vec<usize>,
    /// Where each infimum is attained.
    #[serde(skip)]
    pub argmin: Vec<Option<Vec<f64>>>,
}

impl DecayProfile {
    /// Infimum on the annulus whose inner radius is `r`, if `r` is one of the
    /// profile radii.
    pub fn infimum_at_inner_radius(&self, r: f64) -> Option<f64> {
        let k = self
            .radii
            .iter()
            .skip(1)
            .position(|&q| (q - r).abs() <= 1e-12 * r)?;
        self.infima[k]
    }

    /// The last four infima decrease strictly and the final one is below
    /// `1e-3` times the first.
    pub fn decays_to_zero(&self) -> bool {
        let vals: Option<Vec<f64>> = self.infima.iter().copied().collect();
        let Some(vals) = vals else { return false };
        if vals.len() < 4 {
            return false;
        }
        let tail = &vals[vals.len() - 4..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        let first = vals[0];
        let last = vals[vals.len() - 1];
        decreasing && first > 0.0 && last < 1e-3 * first
    }
}

fn annulus_directions(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..32)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 32.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => (0..32)
            .map(|_| loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let n = norm_sq(&v).sqrt();
                if (0.1..=1.0).contains(&n) {
                    break v.iter().map(|c| c / n).collect();
                }
            })
            .collect(),
    }
}

/// Samples of the annulus `inner ≤ |z − center| ≤ outer` that lie in the
/// chart. Both radii are included.
fn annulus_points(
    center: &[f64],
    inner: f64,
    outer: f64,
    dirs: &[Vec<f64>],
    chart: &Chart,
) -> Vec<Vec<f64>> {
    let nr = MIN_ANNULUS_SAMPLES.div_ceil(dirs.len()).max(4);
    let mut out = Vec::with_capacity(nr * dirs.len());
    for i in 0..nr {
        let r = inner + (outer - inner) * i as f64 / (nr - 1) as f64;
        for d in dirs {
            let p: Vec<f64> = center.iter().zip(d).map(|(c, u)| c + r * u).collect();
            if chart.contains(&p, 0.0) {
                out.push(p);
            }
        }
    }
    out
}

/// Lyapunov-ratio infima on the annuli around `center`.
pub fn decay_profile(
    phi: &ScalarField,
    x: &VectorField,
    center: &[f64],
    chart: &Chart,
    seed: u64,
) -> Result<DecayProfile, EvalError> {
    let grad = gradient_components(phi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = annulus_directions(center.len(), &mut rng);
    let radii: Vec<f64> = (0..=DECAY_K).map(|k| DECAY_R0 * 0.5f64.powi(k as i32)).collect();
    let mut infima = Vec::with_capacity(DECAY_K);
    let mut samples = Vec::with_capacity(DECAY_K);
    let mut argmin = Vec::with_capacity(DECAY_K);
    for k in 0..DECAY_K {
        let pts = annulus_points(center, radii[k + 1], radii[k], &dirs, chart);
        let vals: Vec<Result<Option<f64>, EvalError>> =
            pts.par_iter().map(|p| ratio_at(&grad, x, p)).collect();
        let mut min = MinTracker::new();
        let mut count = 0;
        for (p, v) in pts.iter().zip(vals) {
            if let Some(r) = v? {
                count += 1;
                min.offer(r, p, ());
            }
        }
        samples.push(count);
        match min.best {
            Some((v, p, ())) => {
                infima.push(Some(v));
                argmin.push(Some(p));
            }
            None => {
                infima.push(None);
                argmin.push(None);
            }
        }
    }
    Ok(DecayProfile {
        center: center.to_vec(),
        radii,
        infima,
        samples,
        argmin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition2Report {
    pub condition1: Condition1Report,
    pub verdict: Verdict,
    pub global_infimum: Option<f64>,
    pub profiles: Vec<DecayProfile>,
}

/// Condition (2). Checks condition (1) first; a failure there fails (2) with
/// the same witness.
pub fn check_condition2(
    phi: &ScalarField,
    x: &VectorField,
    chart: &Chart,
    tol: &Tolerances,
    seed: u64,
) -> Condition2Report {
    let condition1 = check_condition1(phi, x, chart, tol);
    if condition1.verdict.status == Status::Fail {
        let mut verdict = condition1.verdict.clone();
        verdict.notes.push("condition (1) fails".into());
        return Condition2Report {
            condition1,
            verdict,
            global_infimum: None,
            profiles: Vec::new(),
        };
    }
    let grad = gradient_components(phi);
    let cmp = &condition1.zero_sets;
    let points = chart.grid_points_excluding(&exclusion_centers(cmp));
    let vals: Vec<Result<Option<f64>, EvalError>> =
        points.par_iter().map(|p| ratio_at(&grad, x, p)).collect();
    let mut global = MinTracker::new();
    for (p, v) in points.iter().zip(vals) {
        match v {
            Ok(Some(r)) => global.offer(r, p, ()),
            Ok(None) => {}
            Err(e) => {
                let verdict = Verdict::fail(Witness::new(p, &[]))
                    .with_note(format!("evaluation failed: {e}"));
                return Condition2Report {
                    condition1,
                    verdict,
                    global_infimum: None,
                    profiles: Vec::new(),
                };
            }
        }
    }

    let mut centers = cmp.zeros.centers();
    centers.sort_by(|a, b| lex_cmp(a, b));
    let mut profiles = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        match decay_profile(phi, x, c, chart, seed.wrapping_add(i as u64)) {
            Ok(p) => profiles.push(p),
            Err(e) => {
                let verdict = Verdict::fail(Witness::new(&e.at, &[]))
                    .with_note(format!("evaluation failed: {e}"));
                return Condition2Report {
                    condition1,
                    verdict,
                    global_infimum: None,
                    profiles,
                };
            }
        }
    }

    let global_infimum = global.best.as_ref().map(|b| b.0);
    let verdict = condition2_verdict(&global, &profiles, tol, cmp.status);
    Condition2Report {
        condition1,
        verdict,
        global_infimum,
        profiles,
    }
}

fn condition2_verdict(
    global: &MinTracker<()>,
    profiles: &[DecayProfile],
    tol: &Tolerances,
    zero_status: Status,
) -> Verdict {
    let mut overall = MinTracker::new();
    if let Some((v, p, ())) = &global.best {
        overall.offer(*v, p, ());
    }
    for prof in profiles {
        for (v, p) in prof.infima.iter().zip(&prof.argmin) {
            if let (Some(v), Some(p)) = (v, p) {
                overall.offer(*v, p, ());
            }
        }
    }
    let Some((min, at, ())) = overall.best else {
        return Verdict::inconclusive("no samples with a defined ratio");
    };
    if min <= 0.0 {
        return Verdict::fail(Witness::new(&at, &[("ratio", min)]));
    }
    // decay evidence outranks a grid pass
    if let Some(prof) = profiles.iter().find(|p| p.decays_to_zero()) {
        let k = prof.infima.len() - 1;
        let point = prof.argmin[k].clone().unwrap_or_else(|| prof.center.clone());
        let first = prof.infima[0].unwrap_or(f64::NAN);
        let last = prof.infima[k].unwrap_or(f64::NAN);
        return Verdict::fail(Witness::new(
            &point,
            &[("ratio", last), ("first_annulus_infimum", first)],
        ))
        .with_note(format!(
            "Lyapunov ratio decays to zero near {:?}",
            prof.center
        ));
    }
    if min >= tol.delta_floor {
        let v = Verdict::pass(min);
        if zero_status == Status::Inconclusive {
            return v.with_note("zero set is not isolated; profiles use cluster centres");
        }
        return v;
    }
    let mut v = Verdict::inconclusive(format!(
        "infimum {min:e} is below the floor {:e} without a clear decay",
        tol.delta_floor
    ));
    v.margin = Some(min);
    v
}
