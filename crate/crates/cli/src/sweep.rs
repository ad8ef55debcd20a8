//! Concurrent (b, amplitude) sweeps over the Gaussian family.

use std::sync::Arc;

use inls_core::diagnostics::{scattering_state, Direction, ScatterConfig};
use inls_core::dynamics::{evolve, BlowupCause, EvolutionTrace, EvolveConfig, Termination};
use inls_core::exponents::{format_rational, InlsParams};
use inls_core::ground_state::GroundStateProfile;
use inls_core::invariants::{classify, GroundStateSettings, ThresholdCache, Verdict, VerdictTag};
use inls_core::radial::{ComplexRadialField, RadialGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

pub const SWEEP_HEADER: &str = "b,amplitude,me_ratio,grad_ratio,verdict,termination,t_final";

/// Grid and time stepping for one class of sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPlan {
    pub r_max: f64,
    pub n: usize,
    pub t_final: f64,
    pub dt: f64,
    pub snap_stride: usize,
}

impl SweepPlan {
    /// Wide domain for data expected to disperse.
    pub fn dispersive() -> Self {
        Self {
            r_max: 256.0,
            n: 4095,
            t_final: 20.0,
            dt: 1e-3,
            snap_stride: 100,
        }
    }

    /// Fine grid and short steps for data expected to concentrate.
    pub fn collapse() -> Self {
        Self {
            r_max: 8.0,
            n: 4095,
            t_final: 1.0,
            dt: 1e-5,
            snap_stride: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub bs: Vec<String>,
    pub amplitudes: Vec<f64>,
    pub width: f64,
    /// used below the gradient threshold, and to classify every point
    pub dispersive: SweepPlan,
    /// used at or above the gradient threshold
    pub collapse: SweepPlan,
    pub ground_state: GroundStateSettings,
    pub evolve: EvolveConfig,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bs: Vec::new(),
            amplitudes: Vec::new(),
            width: 1.0,
            dispersive: SweepPlan::dispersive(),
            collapse: SweepPlan::collapse(),
            ground_state: GroundStateSettings::default(),
            evolve: EvolveConfig::default(),
            jobs: 1,
        }
    }
}

/// Evidence gathered along each point's run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PointDetails {
    pub plan: String,
    pub blowup_cause: Option<BlowupCause>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// max over recorded t of grad_product / threshold_grad
    pub max_grad_ratio: f64,
    /// grad_sq strictly increasing over the last 50 recorded steps
    pub terminal_growth: bool,
    /// per panel pair, share of the accumulated norm gained over [0.9T, T]
    pub strichartz_last_decade: Vec<f64>,
    /// final ‖u(t) − U(t)φ⁺‖_{H¹} over ‖u₀‖_{H¹}
    pub h1_final_ratio: Option<f64>,
    /// ‖u(t) − U(t)φ⁺‖_{H¹} nonincreasing over the second half of the run, up
    /// to 1e-6·‖u₀‖_{H¹} per snapshot (the splitting-error floor)
    pub h1_decreasing: Option<bool>,
    pub scatter_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub b: String,
    pub amplitude: f64,
    pub me_ratio: f64,
    pub grad_ratio: f64,
    pub verdict: Result<VerdictTag, String>,
    pub termination: Result<Termination, String>,
    pub t_final: f64,
    pub details: PointDetails,
    #[serde(skip)]
    pub trace: Option<Arc<EvolutionTrace>>,
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let verdict = match &self.verdict {
            Ok(v) => format!("{v:?}"),
            Err(e) => format!("error: {}", e.replace(',', ";")),
        };
        let termination = match &self.termination {
            Ok(t) => format!("{t:?}"),
            Err(e) => format!("error: {}", e.replace(',', ";")),
        };
        format!(
            "{},{},{:.16e},{:.16e},{},{},{:.16e}",
            self.b, self.amplitude, self.me_ratio, self.grad_ratio, verdict, termination, self.t_final
        )
    }
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

/// Runs classify + evolve for every (b, amplitude) pair, amplitudes in
/// ascending order. Ground states are solved up front, one per b.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepPoint>, CliError> {
    let params: Vec<InlsParams> = config
        .bs
        .iter()
        .map(|b| b.parse().map_err(|e| CliError::Validation(format!("{e}"))))
        .collect::<Result<_, _>>()?;
    if !(config.width.is_finite() && config.width > 0.0) {
        return Err(CliError::Validation("width must be positive".into()));
    }
    if config.amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(CliError::Validation("amplitudes must be finite".into()));
    }
    let mut amplitudes = config.amplitudes.clone();
    amplitudes.sort_by(f64::total_cmp);

    let cache = ThresholdCache::new(config.ground_state);
    let jobs: Vec<(InlsParams, Result<Arc<GroundStateProfile>, String>, f64)> = params
        .iter()
        .flat_map(|p| {
            let profile = if amplitudes.is_empty() {
                Err(String::new())
            } else {
                cache.profile(p).map_err(|e| e.to_string())
            };
            amplitudes
                .iter()
                .map(move |&a| (p.clone(), profile.clone(), a))
                .collect::<Vec<_>>()
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(p, profile, a)| run_point(config, p, profile, *a))
            .collect()
    }))
}

fn gaussian(grid: Arc<RadialGrid>, amplitude: f64, width: f64) -> ComplexRadialField {
    ComplexRadialField::from_real_fn(grid, move |r| amplitude * (-(r / width) * (r / width)).exp())
}

fn run_point(
    config: &SweepConfig,
    params: &InlsParams,
    profile: &Result<Arc<GroundStateProfile>, String>,
    amplitude: f64,
) -> SweepPoint {
    let mut point = SweepPoint {
        b: format_rational(params.b()),
        amplitude,
        me_ratio: f64::NAN,
        grad_ratio: f64::NAN,
        verdict: Err("not classified".into()),
        termination: Err("not run".into()),
        t_final: 0.0,
        details: PointDetails::default(),
        trace: None,
    };
    let profile = match profile {
        Ok(p) => p,
        Err(e) => {
            point.verdict = Err(format!("ground state: {e}"));
            return point;
        }
    };
    let disp = config.dispersive;
    let grid = match RadialGrid::for_params(disp.r_max, disp.n, params) {
        Ok(g) => Arc::new(g),
        Err(e) => {
            point.verdict = Err(e.to_string());
            return point;
        }
    };
    let u0 = gaussian(grid, amplitude, config.width);
    let verdict: Verdict = match classify(&u0, profile) {
        Ok(v) => v,
        Err(e) => {
            point.verdict = Err(e.to_string());
            return point;
        }
    };
    point.me_ratio = verdict.me_ratio;
    point.grad_ratio = verdict.grad_ratio;
    point.verdict = Ok(verdict.tag);

    let (plan, name) = if verdict.grad_ratio < 1.0 {
        (config.dispersive, "dispersive")
    } else {
        (config.collapse, "collapse")
    };
    point.details.plan = name.into();
    let u0 = if name == "dispersive" {
        u0
    } else {
        match RadialGrid::for_params(plan.r_max, plan.n, params) {
            Ok(g) => gaussian(Arc::new(g), amplitude, config.width),
            Err(e) => {
                point.termination = Err(e.to_string());
                return point;
            }
        }
    };
    let evolve_cfg = EvolveConfig {
        snap_stride: plan.snap_stride,
        threshold_grad: Some(profile.threshold_grad),
        ..config.evolve
    };
    let trace = match evolve(&u0, plan.t_final, plan.dt, params, &evolve_cfg) {
        Ok(t) => t,
        Err(e) => {
            point.termination = Err(e.to_string());
            return point;
        }
    };
    point.termination = Ok(trace.termination);
    point.t_final = trace.t_final();
    fill_details(&mut point.details, &trace, &u0, profile);
    point.trace = Some(Arc::new(trace));
    point
}

fn fill_details(
    details: &mut PointDetails,
    trace: &EvolutionTrace,
    u0: &ComplexRadialField,
    profile: &GroundStateProfile,
) {
    details.blowup_cause = trace.blowup_cause;
    details.mass_drift = trace.max_mass_drift();
    details.energy_drift = trace.max_energy_drift();
    details.max_grad_ratio = trace
        .monitors
        .iter()
        .map(|m| m.grad_product / profile.threshold_grad)
        .fold(0.0, f64::max);
    let rows = &trace.monitors;
    details.terminal_growth = rows.len() > 50
        && rows[rows.len() - 51..]
            .windows(2)
            .all(|w| w[1].grad_sq > w[0].grad_sq);
    if trace.termination != Termination::ReachedT {
        return;
    }
    match scattering_state(trace, Direction::Forward, &ScatterConfig::default()) {
        Ok(report) => {
            let t_end = trace.t_final();
            let cut = trace
                .snapshots
                .iter()
                .position(|s| s.t >= 0.9 * t_end)
                .unwrap_or(0);
            details.strichartz_last_decade = report
                .strichartz
                .iter()
                .map(|s| {
                    let total = *s.partials.last().unwrap_or(&0.0);
                    if total > 0.0 {
                        (total - s.partials[cut]) / total
                    } else {
                        0.0
                    }
                })
                .collect();
            let h1 = u0.h1_norm();
            let d = &report.h1_distance;
            details.h1_final_ratio = d.last().map(|x| if h1 > 0.0 { x / h1 } else { *x });
            let half = d.len() / 2;
            details.h1_decreasing = Some(d[half..].windows(2).all(|w| w[1] <= w[0] + 1e-6 * h1));
        }
        Err(e) => details.scatter_error = Some(e.to_string()),
    }
}
