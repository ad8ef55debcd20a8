//! Conserved quantities, the scaling map, and threshold classification.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::{format_rational, InlsParams};
use crate::ground_state::{solve_petviashvili, GroundStateError, GroundStateProfile};
use crate::radial::{ComplexRadialField, RadialGrid};

/// Outer-shell share of the variance below which it counts as finite.
pub const VARIANCE_TAIL_LIMIT: f64 = 1e-4;
/// Outer-shell share of the mass a rescaled field may carry.
pub const RESCALE_SUPPORT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("rescaled field leaks {fraction:e} of its mass into the outer shell")]
    SupportOverflow { fraction: f64 },
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("field lies above the thresholds (gradient ratio {grad_ratio}, mass-energy ratio {me_ratio})")]
    HypothesisViolated { grad_ratio: f64, me_ratio: f64 },
    #[error("profile solved at b = {profile_b}, field grid has b = {field_b}")]
    ParameterMismatch { profile_b: f64, field_b: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvariantReport {
    pub mass: f64,
    pub grad_sq: f64,
    pub potential: f64,
    pub energy: f64,
    /// sign(E)|E|^{s_c} M^{1−s_c}; only a genuine product when E ≥ 0.
    pub me_product: f64,
    pub negative_energy: bool,
    /// ‖∇u‖^{s_c} ‖u‖^{1−s_c}
    pub grad_product: f64,
    /// ∫|x|²|u|² dx
    pub variance: f64,
    pub finite_variance: bool,
}

pub fn report(field: &ComplexRadialField, params: &InlsParams) -> InvariantReport {
    let s_c = params.s_c_f64();
    let grid = field.grid();
    let mass = field.mass();
    let grad_sq = field.grad_sq();
    let potential = field.potential();
    let energy = 0.5 * grad_sq - 0.25 * potential;

    let density = field.density();
    let r2: Vec<f64> = density
        .iter()
        .zip(grid.nodes())
        .map(|(d, r)| d * r * r)
        .collect();
    let variance = grid.integrate(&r2);
    let outer = grid.integrate_beyond(&r2, 0.9 * grid.r_max());
    let finite_variance = variance == 0.0 || outer < VARIANCE_TAIL_LIMIT * variance;

    InvariantReport {
        mass,
        grad_sq,
        potential,
        energy,
        me_product: energy.signum() * energy.abs().powf(s_c) * mass.powf(1.0 - s_c),
        negative_energy: energy < 0.0,
        grad_product: grad_product(grad_sq, mass, s_c),
        variance,
        finite_variance,
    }
}

pub(crate) fn grad_product(grad_sq: f64, mass: f64, s_c: f64) -> f64 {
    grad_sq.powf(0.5 * s_c) * mass.powf(0.5 * (1.0 - s_c))
}

/// u_δ(x) = δ^{(2−b)/2} u(δx), sampled back on the same grid through
/// band-limited sine interpolation of v.
pub fn rescale(
    field: &ComplexRadialField,
    delta: f64,
) -> Result<ComplexRadialField, InvariantError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(InvariantError::InvalidScale(delta));
    }
    if delta == 1.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let all = field.sine_coefficients();
    let coeffs = grid.significant_modes(&all);
    // v_δ(r) = r·u_δ(r) = δ^{−b/2} v(δr)
    let amp = delta.powf(-0.5 * grid.b());
    let v: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&r| grid.evaluate_series(coeffs, delta * r) * amp)
        .collect();
    let scaled = ComplexRadialField::from_v(grid.clone(), v).expect("same grid");
    let fraction = scaled.boundary_mass_fraction();
    if fraction > RESCALE_SUPPORT_LIMIT {
        return Err(InvariantError::SupportOverflow { fraction });
    }
    Ok(scaled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictTag {
    GlobalScattering,
    BlowupCandidate,
    Indeterminate,
    NegativeEnergyBlowupCandidate,
}

impl VerdictTag {
    pub fn is_scattering(self) -> bool {
        self == VerdictTag::GlobalScattering
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdict {
    pub tag: VerdictTag,
    /// me_product / threshold_me (signed when the energy is negative)
    pub me_ratio: f64,
    pub grad_ratio: f64,
    pub finite_variance: bool,
    pub negative_energy: bool,
}

fn check_params(
    field: &ComplexRadialField,
    profile: &GroundStateProfile,
) -> Result<(), InvariantError> {
    let (field_b, profile_b) = (field.grid().b(), profile.params.b_f64());
    if (field_b - profile_b).abs() > 1e-15 {
        return Err(InvariantError::ParameterMismatch { profile_b, field_b });
    }
    Ok(())
}

/// Places the data relative to the ground-state thresholds.
///
/// Boundary cases (a ratio exactly 1) are reported as `Indeterminate`.
pub fn classify(
    field: &ComplexRadialField,
    profile: &GroundStateProfile,
) -> Result<Verdict, InvariantError> {
    check_params(field, profile)?;
    let rep = report(field, &profile.params);
    let me_ratio = rep.me_product / profile.threshold_me;
    let grad_ratio = rep.grad_product / profile.threshold_grad;
    let tag = if rep.negative_energy {
        if rep.finite_variance {
            VerdictTag::NegativeEnergyBlowupCandidate
        } else {
            VerdictTag::Indeterminate
        }
    } else if me_ratio >= 1.0 {
        VerdictTag::Indeterminate
    } else if grad_ratio < 1.0 {
        VerdictTag::GlobalScattering
    } else if grad_ratio > 1.0 && rep.finite_variance {
        VerdictTag::BlowupCandidate
    } else {
        VerdictTag::Indeterminate
    };
    Ok(Verdict {
        tag,
        me_ratio,
        grad_ratio,
        finite_variance: rep.finite_variance,
        negative_energy: rep.negative_energy,
    })
}

/// Slack of each coercivity inequality; nonnegative means satisfied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoercivityReport {
    /// E − s_c/(3+b)‖∇v‖²
    pub energy_lower: f64,
    /// ½‖∇v‖² − E
    pub energy_upper: f64,
    /// w^{1/2}·threshold_grad − ‖∇v‖^{s_c}‖v‖^{1−s_c}
    pub gradient: f64,
    /// 8(1−w)‖∇v‖² − 16(1−w)E
    pub virial_energy: f64,
    /// 8‖∇v‖² − 2(3+b)·potential − 8(1−w)‖∇v‖²
    pub virial_gradient: f64,
    pub w: f64,
    /// scale used to normalize slacks: max(‖∇v‖², potential)
    pub scale: f64,
}

impl CoercivityReport {
    /// Smallest slack divided by `scale` (0 for the zero field).
    pub fn min_relative_slack(&self) -> f64 {
        let min = self
            .energy_lower
            .min(self.energy_upper)
            .min(self.virial_energy)
            .min(self.virial_gradient);
        let min = if self.scale > 0.0 { min / self.scale } else { min };
        min.min(self.gradient)
    }
}

pub fn coercivity_check(
    field: &ComplexRadialField,
    profile: &GroundStateProfile,
) -> Result<CoercivityReport, InvariantError> {
    check_params(field, profile)?;
    let b = profile.params.b_f64();
    let s_c = profile.params.s_c_f64();
    let rep = report(field, &profile.params);
    let grad_ratio = rep.grad_product / profile.threshold_grad;
    let w = rep.me_product / profile.threshold_me;
    // (iii) compares multiples of 1 − w, so it needs w ≤ 1 on top of the
    // gradient bound
    if grad_ratio > 1.0 + 1e-12 || w > 1.0 + 1e-12 {
        return Err(InvariantError::HypothesisViolated {
            grad_ratio,
            me_ratio: w,
        });
    }
    let a = 1.0 - w;
    let g = rep.grad_sq;
    let e = rep.energy;
    Ok(CoercivityReport {
        energy_lower: e - s_c / (3.0 + b) * g,
        energy_upper: 0.5 * g - e,
        gradient: w.max(0.0).sqrt() * profile.threshold_grad - rep.grad_product,
        virial_energy: 8.0 * a * g - 16.0 * a * e,
        virial_gradient: 8.0 * g - 2.0 * (3.0 + b) * rep.potential - 8.0 * a * g,
        w,
        scale: g.max(rep.potential),
    })
}

/// Grid and solver settings for threshold ground states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateSettings {
    pub r_max: f64,
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GroundStateSettings {
    fn default() -> Self {
        Self {
            r_max: 24.0,
            n: 32767,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Ground states keyed by (b, grid), solved once and shared.
#[derive(Debug, Default)]
pub struct ThresholdCache {
    settings: GroundStateSettings,
    profiles: Mutex<HashMap<String, Arc<GroundStateProfile>>>,
}

impl ThresholdCache {
    pub fn new(settings: GroundStateSettings) -> Self {
        Self {
            settings,
            profiles: Mutex::new(HashMap::new()),
        }
    }

    pub fn settings(&self) -> GroundStateSettings {
        self.settings
    }

    pub fn profile(&self, params: &InlsParams) -> Result<Arc<GroundStateProfile>, GroundStateError> {
        let key = format_rational(params.b());
        if let Some(p) = self.profiles.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let s = self.settings;
        let grid = Arc::new(RadialGrid::for_params(s.r_max, s.n, params)?);
        let profile = Arc::new(solve_petviashvili(params, grid, s.tol, s.max_iter)?);
        self.profiles
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert(profile.clone());
        Ok(profile)
    }
}
