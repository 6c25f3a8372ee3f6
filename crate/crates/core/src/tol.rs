use serde::Serialize;

/// Numerical thresholds shared by the checks. Defaults are the documented
/// values; the CLI can override each one via `tol.<name>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Newton convergence `|F| <`.
    pub newton: f64,
    pub newton_max_iter: usize,
    /// Distance below which Newton end points are the same zero.
    pub dedup: f64,
    /// Hausdorff pairing tolerance between `Zero(X)` and `Crit(φ)`.
    pub zero_match: f64,
    /// Relative eigenvalue threshold for Hessian kernels.
    pub eig_zero: f64,
    /// Third derivative along the kernel must exceed this for an embryonic point.
    pub third: f64,
    /// Smallest Lyapunov ratio accepted as a pass.
    pub delta_floor: f64,
    /// Certificate residual `|MX − ∇φ|_∞`, relative to `max(1, |∇φ|_∞)`.
    pub certificate: f64,
    /// Largest `|M − Mᵀ|` still called symmetric.
    pub symmetry: f64,
    /// Partition of unity must sum to one within this.
    pub partition: f64,
    /// `|dω|` for a closed form.
    pub closed: f64,
    /// `|L_Xω − ω|` for a Liouville field.
    pub liouville: f64,
    /// `|J² + I|` for an almost complex structure.
    pub almost_complex: f64,
    /// Consistency of `λ` with `dφ∘A⁻¹` and of `ω(·,A·)` with `g`.
    pub consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton: 1e-10,
            newton_max_iter: 50,
            dedup: 1e-6,
            zero_match: 1e-5,
            eig_zero: 1e-6,
            third: 1e-8,
            delta_floor: 1e-4,
            certificate: 1e-8,
            symmetry: 1e-10,
            partition: 1e-10,
            closed: 1e-10,
            liouville: 1e-8,
            almost_complex: 1e-10,
            consistency: 1e-8,
        }
    }
}

impl Tolerances {
    /// Sets a threshold by its field name. Returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "newton" => &mut self.newton,
            "newton_max_iter" => {
                self.newton_max_iter = value.max(1.0) as usize;
                return true;
            }
            "dedup" => &mut self.dedup,
            "zero_match" => &mut self.zero_match,
            "eig_zero" => &mut self.eig_zero,
            "third" => &mut self.third,
            "delta_floor" => &mut self.delta_floor,
            "certificate" => &mut self.certificate,
            "symmetry" => &mut self.symmetry,
            "partition" => &mut self.partition,
            "closed" => &mut self.closed,
            "liouville" => &mut self.liouville,
            "almost_complex" => &mut self.almost_complex,
            "consistency" => &mut self.consistency,
            _ => return false,
        };
        *slot = value;
        true
    }
}
