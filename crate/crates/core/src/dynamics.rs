//! Strang split-step evolution with monitors and termination rules.
//!
//! Sign convention: i∂ₜu = −Δu − |x|^{-b}|u|²u, so the free flow multiplies
//! sine mode m by e^{−i k_m² t} and the nonlinear flow multiplies u_j by
//! e^{+i r_j^{-b}|u_j|² t}.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::InlsParams;
use crate::invariants::grad_product;
use crate::radial::{
    boundary_fraction, grad_sq_from_coefficients, potential_of, ComplexRadialField, RadialGrid,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("time step must be finite and nonzero, got {0}")]
    InvalidStep(f64),
    #[error("final time must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid built for b = {grid_b} but the model has b = {model_b}")]
    GridMismatch { grid_b: f64, model_b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedT,
    BlowupDetected,
    BoundaryContaminated,
}

/// Which rule stopped a `BlowupDetected` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupCause {
    GradientGrowth,
    SpectralResolution,
    NonlinearPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub snap_stride: usize,
    pub blowup_factor: f64,
    pub boundary_limit: f64,
    /// ‖∇Q‖^{s_c}‖Q‖^{1−s_c}; without it the initial gradient is the reference scale.
    pub threshold_grad: Option<f64>,
    /// Largest nonlinear phase r^{-b}|u|²|dt| allowed in one step.
    pub phase_limit: f64,
    /// Largest share of ‖∇u‖² allowed above k = π/(2dr).
    pub spectral_limit: f64,
    pub nonlinear: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            snap_stride: 100,
            blowup_factor: 20.0,
            boundary_limit: 1e-4,
            threshold_grad: None,
            phase_limit: 0.1,
            spectral_limit: 1e-2,
            nonlinear: true,
        }
    }
}

impl EvolveConfig {
    fn validate(&self) -> Result<(), EvolveError> {
        let bad = |s: &str| Err(EvolveError::InvalidConfig(s.to_string()));
        if self.snap_stride == 0 {
            return bad("snapshot stride must be at least 1");
        }
        if !(self.blowup_factor.is_finite() && self.blowup_factor > 1.0) {
            return bad("blowup factor must exceed 1");
        }
        if !(self.boundary_limit > 0.0 && self.boundary_limit <= 1.0) {
            return bad("boundary limit must lie in (0, 1]");
        }
        if let Some(t) = self.threshold_grad {
            if !(t.is_finite() && t > 0.0) {
                return bad("gradient threshold must be positive");
            }
        }
        let phase_ok = self.phase_limit > 0.0;
        let spectral_ok = self.spectral_limit > 0.0 && self.spectral_limit <= 1.0;
        if !phase_ok || !spectral_ok {
            return bad("resolution guards must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub potential: f64,
    pub grad_product: f64,
    pub sup_u: f64,
    pub boundary_frac: f64,
}

impl MonitorRow {
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,grad_sq,potential,grad_product,sup_u,boundary_frac";

    pub fn to_csv(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.mass,
            self.energy,
            self.grad_sq,
            self.potential,
            self.grad_product,
            self.sup_u,
            self.boundary_frac
        )
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: ComplexRadialField,
}

/// Monitors every step, snapshots every `snap_stride` steps and at the end.
///
/// Times are k·dt, so a backward run (dt < 0) records decreasing times.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub params: InlsParams,
    pub grid: Arc<RadialGrid>,
    pub dt: f64,
    pub config: EvolveConfig,
    pub monitors: Vec<MonitorRow>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub blowup_cause: Option<BlowupCause>,
    /// grad_sq level that triggers `GradientGrowth` (infinite for the zero field).
    pub blowup_threshold: f64,
}

impl EvolutionTrace {
    pub fn times(&self) -> Vec<f64> {
        self.monitors.iter().map(|m| m.t).collect()
    }

    pub fn t_final(&self) -> f64 {
        self.monitors.last().map_or(0.0, |m| m.t)
    }

    pub fn initial(&self) -> &ComplexRadialField {
        &self.snapshots[0].field
    }

    pub fn final_field(&self) -> &ComplexRadialField {
        &self.snapshots.last().expect("trace has snapshots").field
    }

    /// Largest |M(t) − M(0)|/M(0).
    pub fn max_mass_drift(&self) -> f64 {
        max_drift(&self.monitors, |m| m.mass)
    }

    /// Largest |E(t) − E(0)|/|E(0)|.
    pub fn max_energy_drift(&self) -> f64 {
        max_drift(&self.monitors, |m| m.energy)
    }
}

fn max_drift(rows: &[MonitorRow], f: impl Fn(&MonitorRow) -> f64) -> f64 {
    let Some(first) = rows.first() else {
        return 0.0;
    };
    let x0 = f(first);
    let worst = rows.iter().map(|m| (f(m) - x0).abs()).fold(0.0, f64::max);
    if x0 == 0.0 {
        worst
    } else {
        worst / x0.abs()
    }
}

fn check_grid(grid: &RadialGrid, params: &InlsParams) -> Result<(), EvolveError> {
    let model_b = params.b_f64();
    if (grid.b() - model_b).abs() > 1e-15 {
        return Err(EvolveError::GridMismatch {
            grid_b: grid.b(),
            model_b,
        });
    }
    Ok(())
}

fn nonlinear_phase(grid: &RadialGrid, v: &mut [Complex64], dt: f64) {
    for ((vj, r), w) in v.iter_mut().zip(grid.nodes()).zip(grid.weights()) {
        let theta = w * vj.norm_sqr() / (r * r) * dt;
        *vj *= Complex64::from_polar(1.0, theta);
    }
}

fn half_step_phases(grid: &RadialGrid, dt: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -k * k * 0.5 * dt))
        .collect()
}

/// One Strang step: free half step, exact nonlinear phase, free half step.
pub fn step(field: &ComplexRadialField, dt: f64, params: &InlsParams) -> ComplexRadialField {
    let grid = field.grid();
    debug_assert!(check_grid(grid, params).is_ok());
    let half = half_step_phases(grid, dt);
    let mut c = field.sine_coefficients();
    apply(&mut c, &half);
    let mut v = grid.synthesize(&c);
    nonlinear_phase(grid, &mut v, dt);
    let mut c = grid.analyze(&v);
    apply(&mut c, &half);
    ComplexRadialField::from_parts(grid.clone(), grid.synthesize(&c))
}

fn apply(c: &mut [Complex64], phases: &[Complex64]) {
    for (cm, p) in c.iter_mut().zip(phases) {
        *cm *= p;
    }
}

struct Stepper {
    grid: Arc<RadialGrid>,
    c: Vec<Complex64>,
    v: Vec<Complex64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    dt: f64,
    nonlinear: bool,
    /// first mode index with k > π/(2dr)
    high_mode: usize,
}

impl Stepper {
    fn new(u0: &ComplexRadialField, dt: f64, nonlinear: bool) -> Self {
        let grid = u0.grid().clone();
        let half = half_step_phases(&grid, dt);
        let full = half.iter().map(|p| p * p).collect();
        let k_cut = PI / (2.0 * grid.dr());
        let high_mode = grid
            .wavenumbers()
            .iter()
            .position(|&k| k > k_cut)
            .unwrap_or(grid.n());
        Self {
            c: u0.sine_coefficients(),
            v: u0.v().to_vec(),
            grid,
            half,
            full,
            dt,
            nonlinear,
            high_mode,
        }
    }

    fn advance(&mut self) {
        if self.nonlinear {
            apply(&mut self.c, &self.half);
            let mut v = self.grid.synthesize(&self.c);
            nonlinear_phase(&self.grid, &mut v, self.dt);
            self.c = self.grid.analyze(&v);
            apply(&mut self.c, &self.half);
        } else {
            apply(&mut self.c, &self.full);
        }
        self.v = self.grid.synthesize(&self.c);
    }

    fn monitor(&self, t: f64, s_c: f64) -> MonitorRow {
        let grid = &self.grid;
        let mass = 4.0 * PI * grid.dr() * self.v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let grad_sq = grad_sq_from_coefficients(grid, &self.c);
        let potential = potential_of(grid, &self.v);
        let sup_u = self
            .v
            .iter()
            .zip(grid.nodes())
            .map(|(v, r)| v.norm() / r)
            .fold(0.0, f64::max);
        MonitorRow {
            t,
            mass,
            energy: 0.5 * grad_sq - 0.25 * potential,
            grad_sq,
            potential,
            grad_product: grad_product(grad_sq, mass, s_c),
            sup_u,
            boundary_frac: boundary_fraction(grid, &self.v),
        }
    }

    fn max_phase(&self) -> f64 {
        let grid = &self.grid;
        self.v
            .iter()
            .zip(grid.nodes())
            .zip(grid.weights())
            .map(|((v, r), w)| w * v.norm_sqr() / (r * r))
            .fold(0.0, f64::max)
            * self.dt.abs()
    }

    fn high_mode_share(&self, grad_sq: f64) -> f64 {
        if grad_sq == 0.0 {
            return 0.0;
        }
        let c = &self.c[self.high_mode..];
        let k = &self.grid.wavenumbers()[self.high_mode..];
        grad_sq_from_coefficients_slice(&self.grid, c, k) / grad_sq
    }

    fn field(&self) -> ComplexRadialField {
        ComplexRadialField::from_parts(self.grid.clone(), self.v.clone())
    }
}

fn grad_sq_from_coefficients_slice(grid: &RadialGrid, c: &[Complex64], k: &[f64]) -> f64 {
    let sum: f64 = c.iter().zip(k).map(|(cm, k)| k * k * cm.norm_sqr()).sum();
    2.0 * PI * grid.r_max() * sum
}

/// Evolves `u0` for |T| in steps of `dt` (negative dt runs backward).
pub fn evolve(
    u0: &ComplexRadialField,
    t_final: f64,
    dt: f64,
    params: &InlsParams,
    config: &EvolveConfig,
) -> Result<EvolutionTrace, EvolveError> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(EvolveError::InvalidStep(dt));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(EvolveError::InvalidHorizon(t_final));
    }
    config.validate()?;
    check_grid(u0.grid(), params)?;

    let s_c = params.s_c_f64();
    let steps = ((t_final / dt.abs()).round() as usize).max(1);
    let mut stepper = Stepper::new(u0, dt, config.nonlinear);

    let mut monitors = Vec::with_capacity(steps + 1);
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: 0.0,
        field: u0.clone(),
    }];
    let first = stepper.monitor(0.0, s_c);
    // gradient scale at which grad_product would reach the threshold
    let reference = match config.threshold_grad {
        Some(thr) if first.mass > 0.0 => (thr / first.mass.powf(0.5 * (1.0 - s_c))).powf(2.0 / s_c),
        _ => first.grad_sq,
    };
    let blowup_threshold = if reference > 0.0 {
        config.blowup_factor.powi(2) * reference
    } else {
        f64::INFINITY
    };

    let mut termination = Termination::ReachedT;
    let mut blowup_cause = None;
    let mut row = first;
    let mut k = 0;
    loop {
        monitors.push(row);
        if row.boundary_frac > config.boundary_limit {
            termination = Termination::BoundaryContaminated;
        } else if row.grad_sq > blowup_threshold {
            blowup_cause = Some(BlowupCause::GradientGrowth);
        } else if config.nonlinear && stepper.max_phase() > config.phase_limit {
            blowup_cause = Some(BlowupCause::NonlinearPhase);
        } else if stepper.high_mode_share(row.grad_sq) > config.spectral_limit {
            blowup_cause = Some(BlowupCause::SpectralResolution);
        }
        if blowup_cause.is_some() {
            termination = Termination::BlowupDetected;
        }
        let stop = termination != Termination::ReachedT || k == steps;
        if k > 0 && (k % config.snap_stride == 0 || stop) {
            snapshots.push(Snapshot {
                step: k,
                t: row.t,
                field: stepper.field(),
            });
        }
        if stop {
            break;
        }
        stepper.advance();
        k += 1;
        row = stepper.monitor(k as f64 * dt, s_c);
    }

    Ok(EvolutionTrace {
        params: params.clone(),
        grid: u0.grid().clone(),
        dt,
        config: *config,
        monitors,
        snapshots,
        termination,
        blowup_cause,
        blowup_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(amp: f64) -> (InlsParams, ComplexRadialField) {
        let params: InlsParams = "1/4".parse().unwrap();
        let grid = Arc::new(RadialGrid::for_params(32.0, 511, &params).unwrap());
        let u0 = ComplexRadialField::from_real_fn(grid, move |r| amp * (-r * r).exp());
        (params, u0)
    }

    #[test]
    fn zero_field_step_is_free_flow() {
        let (params, u0) = setup(0.0);
        let out = step(&u0, 0.01, &params);
        assert!(out.v().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn step_conserves_mass() {
        let (params, u0) = setup(1.5);
        let out = step(&u0, 0.01, &params);
        assert!(((out.mass() - u0.mass()) / u0.mass()).abs() < 1e-12);
    }

    #[test]
    fn trace_layout() {
        let (params, u0) = setup(0.5);
        let cfg = EvolveConfig {
            snap_stride: 7,
            ..EvolveConfig::default()
        };
        let trace = evolve(&u0, 0.5, 0.01, &params, &cfg).unwrap();
        assert_eq!(trace.termination, Termination::ReachedT);
        assert_eq!(trace.monitors.len(), 51);
        let steps: Vec<usize> = trace.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 7, 14, 21, 28, 35, 42, 49, 50]);
        assert!(trace.times().windows(2).all(|w| w[1] > w[0]));
        assert!((trace.t_final() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (params, u0) = setup(0.5);
        let cfg = EvolveConfig::default();
        assert!(matches!(
            evolve(&u0, 1.0, 0.0, &params, &cfg),
            Err(EvolveError::InvalidStep(_))
        ));
        assert!(matches!(
            evolve(&u0, -1.0, 0.1, &params, &cfg),
            Err(EvolveError::InvalidHorizon(_))
        ));
        let zero_stride = EvolveConfig {
            snap_stride: 0,
            ..cfg
        };
        assert!(evolve(&u0, 1.0, 0.1, &params, &zero_stride).is_err());
        let other: InlsParams = "1/3".parse().unwrap();
        assert!(matches!(
            evolve(&u0, 1.0, 0.1, &other, &cfg),
            Err(EvolveError::GridMismatch { .. })
        ));
    }

    #[test]
    fn contaminated_boundary_stops_the_run() {
        let (params, u0) = setup(0.5);
        let trace = evolve(&u0, 50.0, 0.01, &params, &EvolveConfig::default()).unwrap();
        assert_eq!(trace.termination, Termination::BoundaryContaminated);
        assert!(trace.monitors.last().unwrap().boundary_frac > 1e-4);
    }
}
