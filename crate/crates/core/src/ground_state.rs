//! Ground state Q of −Q + ΔQ + |x|^{-b}Q³ = 0.
//!
//! The production solver is a Petviashvili iteration in sine modes. An
//! independent shooting solver for the radial ODE serves as its oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::InlsParams;
use crate::radial::{ComplexRadialField, GridError, RadialGrid};

/// Petviashvili stabilizing exponent p/(p−1) for the cubic nonlinearity.
const STABILIZER_EXPONENT: f64 = 1.5;

/// Nodes with Q below this fraction of max Q are treated as roundoff floor.
const RESOLVED_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundStateError {
    #[error("no convergence after {iterations} iterations (|S-1| = {stabilizer_gap:e}, residual = {residual:e})")]
    NoConvergence {
        iterations: usize,
        stabilizer_gap: f64,
        residual: f64,
    },
    #[error("iterate lost positivity at r = {radius} (Q = {value:e})")]
    NegativeValues { radius: f64, value: f64 },
    #[error("shooting bracket [{alpha_lo}, {alpha_hi}] does not separate the two behaviours")]
    BracketFailure { alpha_lo: f64, alpha_hi: f64 },
    #[error("grid parameter b = {grid_b} differs from model b = {model_b}")]
    GridMismatch { grid_b: f64, model_b: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub params: InlsParams,
    pub grid: Arc<RadialGrid>,
    pub q: Vec<f64>,
    pub mass_q: f64,
    pub grad_q_sq: f64,
    pub pot_q: f64,
    pub energy_q: f64,
    pub c_gn: f64,
    /// E[Q]^{s_c} M[Q]^{1−s_c}
    pub threshold_me: f64,
    /// ‖∇Q‖^{s_c} ‖Q‖^{1−s_c}
    pub threshold_grad: f64,
    /// max-norm of −Q + ΔQ + r^{-b}Q³
    pub residual: f64,
    pub iterations: usize,
}

/// Relative residuals of the three integral identities satisfied by Q.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PohozaevResiduals {
    /// ‖∇Q‖² = (3+b)/(1−b)·‖Q‖², relative to ‖∇Q‖².
    pub gradient_mass: f64,
    /// potential = 4/(3+b)·‖∇Q‖², relative to the potential.
    pub potential_gradient: f64,
    /// E[Q] = s_c/(3+b)·‖∇Q‖², relative to ‖∇Q‖²/2.
    pub energy_gradient: f64,
}

impl PohozaevResiduals {
    pub fn max(&self) -> f64 {
        self.gradient_mass
            .max(self.potential_gradient)
            .max(self.energy_gradient)
    }
}

/// JSON shape of a solved profile.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub b: String,
    pub mass: f64,
    pub grad_sq: f64,
    pub potential: f64,
    pub energy: f64,
    pub c_gn: f64,
    pub threshold_me: f64,
    pub threshold_grad: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl GroundStateProfile {
    fn from_samples(
        params: InlsParams,
        grid: Arc<RadialGrid>,
        q: Vec<f64>,
        residual: f64,
        iterations: usize,
    ) -> Self {
        let field = ComplexRadialField::from_u(
            grid.clone(),
            &q.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(),
        )
        .expect("length matches grid");
        let mass_q = field.mass();
        let grad_q_sq = field.grad_sq();
        let pot_q = field.potential();
        let energy_q = 0.5 * grad_q_sq - 0.25 * pot_q;
        let b = params.b_f64();
        let s_c = params.s_c_f64();
        let c_gn = 4.0 / ((3.0 + b) * grad_q_sq.powf(s_c) * mass_q.powf(1.0 - s_c));
        Self {
            threshold_me: energy_q.powf(s_c) * mass_q.powf(1.0 - s_c),
            threshold_grad: grad_q_sq.powf(0.5 * s_c) * mass_q.powf(0.5 * (1.0 - s_c)),
            params,
            grid,
            q,
            mass_q,
            grad_q_sq,
            pot_q,
            energy_q,
            c_gn,
            residual,
            iterations,
        }
    }

    pub fn field(&self) -> ComplexRadialField {
        ComplexRadialField::from_real_fn_samples(self.grid.clone(), &self.q)
    }

    pub fn pohozaev_residuals(&self) -> PohozaevResiduals {
        let b = self.params.b_f64();
        let s_c = self.params.s_c_f64();
        let g = self.grad_q_sq;
        PohozaevResiduals {
            gradient_mass: (g - (3.0 + b) / (1.0 - b) * self.mass_q).abs() / g,
            potential_gradient: (self.pot_q - 4.0 / (3.0 + b) * g).abs() / self.pot_q,
            energy_gradient: (self.energy_q - s_c / (3.0 + b) * g).abs() / (0.5 * g),
        }
    }

    pub fn report(&self) -> GroundStateReport {
        GroundStateReport {
            b: crate::exponents::format_rational(self.params.b()),
            mass: self.mass_q,
            grad_sq: self.grad_q_sq,
            potential: self.pot_q,
            energy: self.energy_q,
            c_gn: self.c_gn,
            threshold_me: self.threshold_me,
            threshold_grad: self.threshold_grad,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    /// Extent of the region where Q is above the roundoff floor.
    pub fn resolved_len(&self) -> usize {
        resolved_len(&self.q)
    }
}

impl ComplexRadialField {
    /// Real u-samples lifted to a complex field.
    pub fn from_real_fn_samples(grid: Arc<RadialGrid>, u: &[f64]) -> Self {
        let u: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_u(grid, &u).expect("length matches grid")
    }
}

fn resolved_len(q: &[f64]) -> usize {
    let peak = q.iter().cloned().fold(0.0, f64::max);
    q.iter()
        .position(|&x| x <= RESOLVED_FLOOR * peak)
        .unwrap_or(q.len())
}

fn check_grid(params: &InlsParams, grid: &RadialGrid) -> Result<(), GroundStateError> {
    let model_b = params.b_f64();
    if (grid.b() - model_b).abs() > 1e-15 {
        return Err(GroundStateError::GridMismatch {
            grid_b: grid.b(),
            model_b,
        });
    }
    Ok(())
}

/// Petviashvili iteration Q ← S^{3/2}(1−Δ)^{-1}[r^{-b}Q³] with
/// S = ⟨Q,(1−Δ)Q⟩/⟨Q, r^{-b}Q³⟩, run in sine modes of v = rQ.
pub fn solve_petviashvili(
    params: &InlsParams,
    grid: Arc<RadialGrid>,
    tol: f64,
    max_iter: usize,
) -> Result<GroundStateProfile, GroundStateError> {
    check_grid(params, &grid)?;
    let nodes = grid.nodes();
    let weights = grid.weights();
    let ks = grid.wavenumbers();
    let to_c = |x: &[f64]| -> Vec<Complex64> { x.iter().map(|&a| Complex64::new(a, 0.0)).collect() };

    let mut v: Vec<f64> = nodes.iter().map(|&r| 3.0 * r * (-r * r).exp()).collect();
    let floor = residual_floor(&grid, 5.0);
    let mut last_gap = f64::INFINITY;
    let mut last_residual = f64::INFINITY;

    for iter in 0..max_iter {
        let c = grid.analyze(&to_c(&v));
        // N(v) = r^{-b} v³ / r², the v-representation of r^{-b}Q³
        let nv: Vec<f64> = v
            .iter()
            .zip(nodes)
            .zip(weights)
            .map(|((vj, r), w)| w * vj * vj * vj / (r * r))
            .collect();
        let cn = grid.analyze(&to_c(&nv));

        // ⟨v,(1−D²)v⟩ through Parseval, ⟨v, N(v)⟩ on the nodes; common factors cancel
        let linear: f64 = c
            .iter()
            .zip(ks)
            .map(|(cm, k)| (1.0 + k * k) * cm.norm_sqr())
            .sum::<f64>()
            * (grid.n() + 1) as f64
            / 2.0;
        let nonlinear: f64 = v.iter().zip(&nv).map(|(a, b)| a * b).sum();
        let s = linear / nonlinear;

        // residual of the current iterate, in the u-representation
        let lhs: Vec<Complex64> = c
            .iter()
            .zip(ks)
            .map(|(cm, k)| cm * (-(1.0 + k * k)))
            .collect();
        let lin_part = grid.synthesize(&lhs);
        let residual = lin_part
            .iter()
            .zip(&nv)
            .zip(nodes)
            .map(|((l, n), r)| ((l.re + n) / r).abs())
            .fold(0.0, f64::max);
        last_gap = (s - 1.0).abs();
        last_residual = residual;

        if last_gap < tol && residual < tol.max(floor) {
            let q: Vec<f64> = v.iter().zip(nodes).map(|(vj, r)| vj / r).collect();
            check_positive(&q, nodes)?;
            return Ok(GroundStateProfile::from_samples(
                params.clone(),
                grid,
                q,
                residual,
                iter,
            ));
        }

        let gain = s.powf(STABILIZER_EXPONENT);
        let next: Vec<Complex64> = cn
            .iter()
            .zip(ks)
            .map(|(cm, k)| cm * (gain / (1.0 + k * k)))
            .collect();
        v = grid.synthesize(&next).iter().map(|z| z.re).collect();
        if !v.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(GroundStateError::NoConvergence {
        iterations: max_iter,
        stabilizer_gap: last_gap,
        residual: last_residual,
    })
}

/// Roundoff level of the discrete residual for a profile of height `peak`:
/// the spectral Laplacian amplifies relative noise by k_max², and the
/// u-representation divides by r ≥ dr.
pub fn residual_floor(grid: &RadialGrid, peak: f64) -> f64 {
    let k_max = grid.wavenumbers().last().copied().unwrap_or(0.0);
    256.0 * f64::EPSILON * (1.0 + k_max * k_max) * peak
}

fn check_positive(q: &[f64], nodes: &[f64]) -> Result<(), GroundStateError> {
    let peak = q.iter().cloned().fold(0.0, f64::max);
    let resolved = resolved_len(q);
    for (j, (&x, &r)) in q.iter().zip(nodes).enumerate() {
        let bad = if j < resolved { x <= 0.0 } else { x < -RESOLVED_FLOOR * peak };
        if bad {
            return Err(GroundStateError::NegativeValues { radius: r, value: x });
        }
    }
    Ok(())
}

/// GN quotient ‖|x|^{-b}|f|⁴‖₁ / (‖∇f‖^{3+b} ‖f‖^{1−b}) on the grid.
pub fn gn_quotient(field: &ComplexRadialField) -> f64 {
    let b = field.grid().b();
    let p = field.potential();
    let g = field.grad_sq();
    let m = field.mass();
    p / (g.powf(0.5 * (3.0 + b)) * m.powf(0.5 * (1.0 - b)))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GnConstants {
    /// The quotient evaluated at Q itself.
    pub direct: f64,
    /// 4/((3+b)‖∇Q‖^{2s_c}‖Q‖^{2(1−s_c)}).
    pub closed: f64,
}

impl GnConstants {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.closed).abs() / self.closed
    }
}

pub fn gn_constant(profile: &GroundStateProfile) -> GnConstants {
    GnConstants {
        direct: gn_quotient(&profile.field()),
        closed: profile.c_gn,
    }
}

/// The same constant written through the mass alone:
/// 4/(3+b)·((1−b)/(3+b))^{s_c}/‖Q‖².
pub fn gn_constant_mass_form(profile: &GroundStateProfile) -> f64 {
    let b = profile.params.b_f64();
    let s_c = profile.params.s_c_f64();
    4.0 / (3.0 + b) * ((1.0 - b) / (3.0 + b)).powf(s_c) / profile.mass_q
}

// ---------------------------------------------------------------------------
// Shooting oracle

/// Profile returned by the shooting solver, sampled on grid nodes up to the
/// radius where the bracketing trajectories separate.
#[derive(Debug, Clone)]
pub struct ShootingProfile {
    pub alpha: f64,
    pub r: Vec<f64>,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    /// Integrals accumulated along the trajectory up to the cutoff.
    pub mass: f64,
    pub grad_sq: f64,
    pub potential: f64,
}

impl ShootingProfile {
    pub fn cutoff(&self) -> f64 {
        self.r.last().copied().unwrap_or(0.0)
    }

    pub fn pohozaev_ratio(&self) -> f64 {
        self.grad_sq / self.mass
    }
}

pub const SHOOTING_START: f64 = 1e-6;
pub const DEFAULT_BRACKET: (f64, f64) = (0.1, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    CrossesZero,
    DivergesUp,
}

const DIM: usize = 5;
type State = [f64; DIM];

struct RadialOde {
    b: f64,
}

impl RadialOde {
    /// y = (Q, Q', mass, grad², potential) accumulated from r₀.
    fn rhs(&self, r: f64, y: &State) -> State {
        let (q, p) = (y[0], y[1]);
        let w = r.powf(-self.b);
        let shell = 4.0 * PI * r * r;
        [
            p,
            -2.0 * p / r + q - w * q * q * q,
            shell * q * q,
            shell * p * p,
            shell * w * q * q * q * q,
        ]
    }
}

struct Trajectory {
    fate: Fate,
    samples: Vec<State>,
}

/// Dormand–Prince 5(4) integration from r₀ with Q(r₀) = α, Q'(r₀) = 0,
/// landing on every node and stopping at the first decisive event.
fn shoot(ode: &RadialOde, alpha: f64, nodes: &[f64], r_end: f64) -> Trajectory {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    const RTOL: f64 = 1e-12;
    const ATOL: f64 = 1e-15;

    let mut r = SHOOTING_START;
    let mut y: State = [alpha, 0.0, 0.0, 0.0, 0.0];
    let mut h = SHOOTING_START;
    let mut samples = Vec::with_capacity(nodes.len());
    let mut next_node = nodes.iter().position(|&x| x > r).unwrap_or(nodes.len());
    let mut k = [[0.0; DIM]; 7];
    k[0] = ode.rhs(r, &y);

    while r < r_end {
        let target = nodes.get(next_node).copied().unwrap_or(r_end).min(r_end);
        let step = h.min(target - r);
        let mut stage = [0.0; DIM];
        for s in 0..6 {
            for i in 0..DIM {
                stage[i] = y[i] + step * (0..=s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s + 1] = ode.rhs(r + C[s] * step, &stage);
        }
        // stage now holds the 5th-order solution (FSAL row)
        let mut err = 0.0;
        for i in 0..DIM {
            let e: f64 = step * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let scale = ATOL + RTOL * y[i].abs().max(stage[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / DIM as f64).sqrt();
        if err <= 1.0 {
            r += step;
            y = stage;
            k[0] = k[6];
            if (r - target).abs() <= 1e-12 * target.max(1.0) && next_node < nodes.len() {
                r = target;
                samples.push(y);
                next_node += 1;
            }
            if y[0] < 0.0 {
                return Trajectory { fate: Fate::CrossesZero, samples };
            }
            // below the separatrix the trajectory turns back up before reaching
            // zero and then oscillates about r^{b/2}; it never runs off to 10α
            if y[1] > 0.0 || y[0] > 10.0 * alpha {
                return Trajectory { fate: Fate::DivergesUp, samples };
            }
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
        h = step * factor.clamp(0.2, 5.0);
    }
    let fate = if y[1] > 0.0 { Fate::DivergesUp } else { Fate::CrossesZero };
    Trajectory { fate, samples }
}

/// Separatrix shooting for Q'' + (2/r)Q' − Q + r^{-b}Q³ = 0.
///
/// Bisects on α = Q(r₀) between trajectories that cross zero (α too large)
/// and ones that turn upward (α too small) until the bracket is narrower
/// than `tol·α`. The profile is sampled on the grid nodes up to where the
/// two bracketing trajectories drift apart.
pub fn shooting_oracle(
    params: &InlsParams,
    grid: &RadialGrid,
    tol: f64,
) -> Result<ShootingProfile, GroundStateError> {
    shooting_oracle_with_bracket(params, grid, tol, DEFAULT_BRACKET)
}

pub fn shooting_oracle_with_bracket(
    params: &InlsParams,
    grid: &RadialGrid,
    tol: f64,
    bracket: (f64, f64),
) -> Result<ShootingProfile, GroundStateError> {
    let ode = RadialOde { b: params.b_f64() };
    let nodes = grid.nodes();
    let r_end = grid.r_max().max(60.0);
    let (mut lo, mut hi) = bracket;
    let failure = GroundStateError::BracketFailure {
        alpha_lo: lo,
        alpha_hi: hi,
    };
    if shoot(&ode, lo, nodes, r_end).fate != Fate::DivergesUp
        || shoot(&ode, hi, nodes, r_end).fate != Fate::CrossesZero
    {
        return Err(failure);
    }
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(&ode, mid, nodes, r_end).fate {
            Fate::DivergesUp => lo = mid,
            Fate::CrossesZero => hi = mid,
        }
    }
    let alpha = 0.5 * (lo + hi);
    let below = shoot(&ode, lo, nodes, r_end).samples;
    let above = shoot(&ode, hi, nodes, r_end).samples;
    let mid = shoot(&ode, alpha, nodes, r_end).samples;

    let mut profile = ShootingProfile {
        alpha,
        r: Vec::new(),
        q: Vec::new(),
        dq: Vec::new(),
        mass: 0.0,
        grad_sq: 0.0,
        potential: 0.0,
    };
    for (j, y) in mid.iter().enumerate() {
        let (Some(a), Some(c)) = (below.get(j), above.get(j)) else {
            break;
        };
        if (a[0] - c[0]).abs() > 1e-10 * alpha || y[0] <= 0.0 || y[1] >= 0.0 {
            break;
        }
        profile.r.push(nodes[j]);
        profile.q.push(y[0]);
        profile.dq.push(y[1]);
        profile.mass = y[2];
        profile.grad_sq = y[3];
        profile.potential = y[4];
    }
    Ok(profile)
}
