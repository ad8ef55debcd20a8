//! Localized virial functionals, tail quantities, and scattering evidence.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{EvolutionTrace, Termination};
use crate::exponents::{
    theta_range, to_f64, working_exponents, Exponent, ExponentError, ExponentPair, InlsParams,
};
use crate::radial::{ComplexRadialField, RadialGrid};

/// Sup over ρ ≥ 1 and b < 1/2 of the pointwise coefficients multiplying
/// |∇u|², R^{-2}|u|² and R^{-b}|u|⁴ in the virial remainder; the bilaplacian
/// of the blend dominates.
pub const REMAINDER_CONSTANT: f64 = 2040.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("weight support 2R = {support} does not fit inside r_max = {r_max}")]
    WeightOverflowsGrid { support: f64, r_max: f64 },
    #[error("truncation radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("snapshots too sparse for fourth-order differences: {0}")]
    StrideTooCoarse(String),
    #[error("Duhamel tail {tail:e} exceeds {limit:e}")]
    NotConverged { tail: f64, limit: f64 },
    #[error("trace ended with {0:?}, a complete run is required")]
    IncompleteTrace(Termination),
    #[error("trace runs {found} but {requested} was requested")]
    DirectionMismatch {
        requested: &'static str,
        found: &'static str,
    },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

// φ(1 + s) = 1 + 2s + s² − 85s⁴ + 194s⁵ − 157s⁶ + 44s⁷ on s ∈ [0, 1]:
// matches ρ² to third order at ρ = 1 and vanishes to third order at ρ = 2.
const BLEND: [f64; 8] = [1.0, 2.0, 1.0, 0.0, -85.0, 194.0, -157.0, 44.0];

fn blend_derivative(k: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for p in (k..BLEND.len()).rev() {
        let falling: f64 = (0..k).map(|j| (p - j) as f64).product();
        acc = acc * s + BLEND[p] * falling;
    }
    acc
}

/// Values of φ and derivatives at ρ: [φ, φ′, φ″, φ‴, φ⁗].
fn jet(rho: f64) -> [f64; 5] {
    if rho <= 1.0 {
        [rho * rho, 2.0 * rho, 2.0, 0.0, 0.0]
    } else if rho >= 2.0 {
        [0.0; 5]
    } else {
        let s = rho - 1.0;
        std::array::from_fn(|k| blend_derivative(k, s))
    }
}

/// Radial localizing weight: φ(ρ) = ρ² on [0, 1], a C³ polynomial blend on
/// [1, 2], and zero beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialWeight {
    radius: f64,
}

impl VirialWeight {
    pub fn new(radius: f64) -> Result<Self, DiagnosticsError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(DiagnosticsError::InvalidRadius(radius));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn phi(rho: f64) -> f64 {
        jet(rho)[0]
    }

    pub fn dphi(rho: f64) -> f64 {
        jet(rho)[1]
    }

    pub fn d2phi(rho: f64) -> f64 {
        jet(rho)[2]
    }

    /// Δφ = φ″ + 2φ′/ρ.
    pub fn laplacian(rho: f64) -> f64 {
        if rho <= 1.0 {
            return 6.0;
        }
        let j = jet(rho);
        j[2] + 2.0 * j[1] / rho
    }

    /// Δ²φ = L″ + 2L′/ρ with L = Δφ.
    pub fn bilaplacian(rho: f64) -> f64 {
        if rho <= 1.0 {
            return 0.0;
        }
        let [_, p1, p2, p3, p4] = jet(rho);
        let r2 = rho * rho;
        let l1 = p3 + 2.0 * p2 / rho - 2.0 * p1 / r2;
        let l2 = p4 + 2.0 * p3 / rho - 4.0 * p2 / r2 + 4.0 * p1 / (r2 * rho);
        l2 + 2.0 * l1 / rho
    }

    fn check(&self, grid: &RadialGrid) -> Result<(), DiagnosticsError> {
        let support = 2.0 * self.radius;
        if support >= grid.r_max() {
            return Err(DiagnosticsError::WeightOverflowsGrid {
                support,
                r_max: grid.r_max(),
            });
        }
        Ok(())
    }
}

/// z_R = ∫R²φ(r/R)|u|² dx.
pub fn virial_z(field: &ComplexRadialField, weight: &VirialWeight) -> Result<f64, DiagnosticsError> {
    let grid = field.grid();
    weight.check(grid)?;
    let big_r = weight.radius;
    let f: Vec<f64> = field
        .density()
        .iter()
        .zip(grid.nodes())
        .map(|(d, r)| big_r * big_r * VirialWeight::phi(r / big_r) * d)
        .collect();
    Ok(grid.integrate(&f))
}

/// z′_R = 2R·Im∫φ′(r/R) ∂_r u ū dx.
pub fn virial_z_prime(
    field: &ComplexRadialField,
    weight: &VirialWeight,
) -> Result<f64, DiagnosticsError> {
    let grid = field.grid();
    weight.check(grid)?;
    let big_r = weight.radius;
    let du = field.radial_derivative();
    let f: Vec<f64> = du
        .iter()
        .zip(field.v())
        .zip(grid.nodes())
        .map(|((d, v), r)| VirialWeight::dphi(r / big_r) * (d * (v / r).conj()).im)
        .collect();
    Ok(2.0 * big_r * grid.integrate(&f))
}

/// The part of z″_R not captured by 8‖∇u‖² − 2(3+b)‖|x|^{-b}|u|⁴‖_{L¹}.
///
/// Every integrand vanishes identically for r ≤ R, so only the outer shell
/// is summed.
pub fn virial_remainder(
    field: &ComplexRadialField,
    weight: &VirialWeight,
) -> Result<f64, DiagnosticsError> {
    let grid = field.grid();
    weight.check(grid)?;
    let big_r = weight.radius;
    let b = grid.b();
    let du = field.radial_derivative();
    let f: Vec<f64> = du
        .iter()
        .zip(field.v())
        .zip(grid.nodes().iter().zip(grid.weights()))
        .map(|((d, v), (&r, &w))| {
            if r <= big_r {
                return 0.0;
            }
            let rho = r / big_r;
            let dens = v.norm_sqr() / (r * r);
            let quartic = w * dens * dens;
            4.0 * (VirialWeight::d2phi(rho) - 2.0) * d.norm_sqr()
                - VirialWeight::bilaplacian(rho) * dens / (big_r * big_r)
                - (VirialWeight::laplacian(rho) - 6.0) * quartic
                + b * (2.0 - VirialWeight::dphi(rho) / rho) * quartic
        })
        .collect();
    Ok(grid.integrate_beyond(&f, big_r))
}

/// z″_R = 8‖∇u‖² − 2(3+b)‖|x|^{-b}|u|⁴‖_{L¹} + remainder.
pub fn virial_z_doubleprime(
    field: &ComplexRadialField,
    weight: &VirialWeight,
    params: &InlsParams,
) -> Result<f64, DiagnosticsError> {
    let rem = virial_remainder(field, weight)?;
    let b = params.b_f64();
    Ok(8.0 * field.grad_sq() - 2.0 * (3.0 + b) * field.potential() + rem)
}

/// ∫_{|x|>R}(|∇u|² + R^{-2}|u|² + R^{-b}|u|⁴) dx.
pub fn remainder_tail_sum(field: &ComplexRadialField, radius: f64) -> f64 {
    let grid = field.grid();
    let b = grid.b();
    let du = field.radial_derivative();
    let f: Vec<f64> = du
        .iter()
        .zip(field.density())
        .map(|(d, dens)| {
            d.norm_sqr() + dens / (radius * radius) + radius.powf(-b) * dens * dens
        })
        .collect();
    grid.integrate_beyond(&f, radius)
}

/// ∫_{|x|>R}|∇u|² dx.
pub fn gradient_tail(field: &ComplexRadialField, radius: f64) -> f64 {
    let grid = field.grid();
    let f: Vec<f64> = field
        .radial_derivative()
        .iter()
        .map(|d| d.norm_sqr())
        .collect();
    grid.integrate_beyond(&f, radius)
}

#[derive(Debug, Clone, Serialize)]
pub struct VirialConsistency {
    pub radius: f64,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub fd_second: Vec<f64>,
    pub identity: Vec<f64>,
    pub remainder: Vec<f64>,
    /// max |fd − identity| / max |identity|
    pub max_residual: f64,
}

/// Compares fourth-order centered differences of z_R along the snapshots
/// with the virial identity evaluated at the same snapshots.
pub fn virial_consistency(
    trace: &EvolutionTrace,
    radius: f64,
) -> Result<VirialConsistency, DiagnosticsError> {
    let weight = VirialWeight::new(radius)?;
    weight.check(&trace.grid)?;
    let stride = trace.config.snap_stride;
    let snaps: Vec<_> = trace
        .snapshots
        .iter()
        .filter(|s| s.step % stride == 0)
        .collect();
    if snaps.len() < 5 {
        return Err(DiagnosticsError::StrideTooCoarse(format!(
            "{} equally spaced snapshots, need at least 5",
            snaps.len()
        )));
    }
    let h = trace.dt * stride as f64;
    let z: Vec<f64> = snaps
        .iter()
        .map(|s| virial_z(&s.field, &weight))
        .collect::<Result<_, _>>()?;

    let mut times = Vec::new();
    let mut fd = Vec::new();
    let mut coarse = Vec::new();
    let mut identity = Vec::new();
    let mut remainder = Vec::new();
    for i in 2..snaps.len() - 2 {
        let d4 = (-z[i - 2] + 16.0 * z[i - 1] - 30.0 * z[i] + 16.0 * z[i + 1] - z[i + 2])
            / (12.0 * h * h);
        let d2 = (z[i - 1] - 2.0 * z[i] + z[i + 1]) / (h * h);
        let field = &snaps[i].field;
        times.push(snaps[i].t);
        fd.push(d4);
        coarse.push(d2);
        identity.push(virial_z_doubleprime(field, &weight, &trace.params)?);
        remainder.push(virial_remainder(field, &weight)?);
    }
    let scale = identity.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / if scale > 0.0 { scale } else { 1.0 }
    };
    // second- and fourth-order stencils disagreeing means z is not resolved
    let unresolved = gap(&fd, &coarse);
    if unresolved > 0.1 {
        return Err(DiagnosticsError::StrideTooCoarse(format!(
            "difference stencils disagree by {unresolved:.3e} of max|z''|"
        )));
    }
    let max_residual = gap(&fd, &identity);
    Ok(VirialConsistency {
        radius,
        times,
        z: z[2..z.len() - 2].to_vec(),
        fd_second: fd,
        identity,
        remainder,
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrichartzSeries {
    pub q: f64,
    pub r: f64,
    pub pair: String,
    /// cumulative ∫‖u(s)‖^q_{L^r} ds at the snapshot times
    pub partials: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub direction: Direction,
    #[serde(skip)]
    pub phi: ComplexRadialField,
    pub phi_h1: f64,
    pub times: Vec<f64>,
    pub h1_distance: Vec<f64>,
    pub strichartz: Vec<StrichartzSeries>,
    pub duhamel_tail: f64,
}

/// Tolerance for `scattering_state`: the last Duhamel increment must stay
/// below `tail_tol`·‖φ‖_{H¹}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterConfig {
    pub tail_tol: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { tail_tol: 1e-4 }
    }
}

fn h1_of_coefficients(grid: &RadialGrid, c: &[Complex64]) -> f64 {
    let sum: f64 = c
        .iter()
        .zip(grid.wavenumbers())
        .map(|(cm, k)| (1.0 + k * k) * cm.norm_sqr())
        .sum();
    (2.0 * PI * grid.r_max() * sum).sqrt()
}

/// Sine coefficients of |x|^{-b}|u|²u.
fn nonlinearity(field: &ComplexRadialField) -> Vec<Complex64> {
    let grid = field.grid();
    let nl: Vec<Complex64> = field
        .v()
        .iter()
        .zip(grid.nodes())
        .zip(grid.weights())
        .map(|((v, r), w)| v * (w * v.norm_sqr() / (r * r)))
        .collect();
    grid.analyze(&nl)
}

/// Weights (w₀, w₁) with ∫₀¹((1−τ)a + τb)e^{iθτ}dτ = w₀a + w₁b.
fn filon_weights(theta: f64) -> (Complex64, Complex64) {
    let it = Complex64::new(0.0, theta);
    if theta.abs() < 1e-2 {
        // Σ (iθ)ⁿ/n! · (1/((n+1)(n+2)), 1/(n+2))
        let (mut w0, mut w1, mut term) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        for n in 0..6 {
            let m = n as f64;
            w0 += term / ((m + 1.0) * (m + 2.0));
            w1 += term / (m + 2.0);
            term *= it / (m + 1.0);
        }
        return (w0, w1);
    }
    let e = it.exp();
    let w1 = e / it + (e - 1.0) / (theta * theta);
    let w0 = (e - 1.0) / it - w1;
    (w0, w1)
}

/// φ = u₀ + i∫₀^T U(−s)(|x|^{-b}|u|²u)(s) ds over the snapshots, with T the
/// signed end time of the trace.
///
/// Exponential trapezoid rule: the nonlinearity is interpolated linearly
/// between snapshots and the free phase e^{ik²s} is integrated exactly, which
/// reduces to the plain trapezoid rule when k²Δs is small.
pub fn scattering_state(
    trace: &EvolutionTrace,
    direction: Direction,
    config: &ScatterConfig,
) -> Result<ScatteringReport, DiagnosticsError> {
    if trace.termination != Termination::ReachedT {
        return Err(DiagnosticsError::IncompleteTrace(trace.termination));
    }
    let found = if trace.dt > 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    };
    if found != direction {
        return Err(DiagnosticsError::DirectionMismatch {
            requested: direction.name(),
            found: found.name(),
        });
    }
    let grid = trace.grid.clone();
    let snaps = &trace.snapshots;
    let mut acc = snaps[0].field.sine_coefficients();
    let mut prev = nonlinearity(&snaps[0].field);
    let mut tail = 0.0;
    // without the nonlinearity the Duhamel term vanishes and φ = u₀
    let pairs = if trace.config.nonlinear { snaps.windows(2) } else { snaps[..1].windows(2) };
    for pair in pairs {
        let (s0, ds) = (pair[0].t, pair[1].t - pair[0].t);
        let next = nonlinearity(&pair[1].field);
        let inc: Vec<Complex64> = prev
            .iter()
            .zip(&next)
            .zip(grid.wavenumbers())
            .map(|((a, b), k)| {
                let (w0, w1) = filon_weights(k * k * ds);
                Complex64::i() * Complex64::from_polar(ds, k * k * s0) * (w0 * a + w1 * b)
            })
            .collect();
        for (a, d) in acc.iter_mut().zip(&inc) {
            *a += d;
        }
        tail = h1_of_coefficients(&grid, &inc);
        prev = next;
    }
    let phi_h1 = h1_of_coefficients(&grid, &acc);
    let limit = config.tail_tol * phi_h1;
    if tail > limit {
        return Err(DiagnosticsError::NotConverged { tail, limit });
    }

    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let h1_distance = snaps
        .iter()
        .map(|s| {
            let cu = s.field.sine_coefficients();
            let diff: Vec<Complex64> = cu
                .iter()
                .zip(&acc)
                .zip(grid.wavenumbers())
                .map(|((u, p), k)| u - p * Complex64::from_polar(1.0, -k * k * s.t))
                .collect();
            h1_of_coefficients(&grid, &diff)
        })
        .collect();
    let panel = default_panel(&trace.params)?;
    let strichartz = strichartz_accumulator(trace, &panel);
    let phi = ComplexRadialField::from_v(grid.clone(), grid.synthesize(&acc))
        .expect("coefficients live on the trace grid");
    Ok(ScatteringReport {
        direction,
        phi,
        phi_h1,
        times,
        h1_distance,
        strichartz,
        duhamel_tail: tail,
    })
}

/// ∫|u|^r dx raised to 1/r.
pub fn lebesgue_norm(field: &ComplexRadialField, r: f64) -> f64 {
    let f: Vec<f64> = field.density().iter().map(|d| d.powf(0.5 * r)).collect();
    field.grid().integrate(&f).powf(1.0 / r)
}

/// Cumulative ∫₀^t ‖u(s)‖^q_{L^r} ds per pair, trapezoid in |t|.
pub fn strichartz_accumulator(
    trace: &EvolutionTrace,
    pairs: &[ExponentPair],
) -> Vec<StrichartzSeries> {
    pairs
        .iter()
        .map(|pair| {
            let (q, r) = pair.as_f64();
            let values: Vec<f64> = trace
                .snapshots
                .iter()
                .map(|s| lebesgue_norm(&s.field, r).powf(q))
                .collect();
            let mut partials = vec![0.0];
            for (w, s) in values.windows(2).zip(trace.snapshots.windows(2)) {
                let ds = (s[1].t - s[0].t).abs();
                let last = *partials.last().expect("nonempty");
                partials.push(last + 0.5 * ds * (w[0] + w[1]));
            }
            StrichartzSeries {
                q,
                r,
                pair: pair_label(pair),
                partials,
            }
        })
        .collect()
}

fn pair_label(pair: &ExponentPair) -> String {
    let q = match &pair.q {
        Exponent::Finite(q) => crate::exponents::format_rational(q),
        Exponent::Infinity => "inf".to_string(),
    };
    format!("({}, {})", q, crate::exponents::format_rational(&pair.r))
}

/// (â, r̂) at the midpoint of the θ range and at one tenth of the width in
/// from either end.
pub fn default_panel(params: &InlsParams) -> Result<Vec<ExponentPair>, DiagnosticsError> {
    let range = theta_range(params.b())?;
    let width = &range.upper - &range.lower;
    let tenth = width / BigRational::from_integer(BigInt::from(10));
    let thetas = [
        &range.lower + &tenth,
        range.midpoint(),
        &range.upper - &tenth,
    ];
    thetas
        .iter()
        .map(|theta| Ok(working_exponents(params, theta)?.hs_pair()))
        .collect()
}

/// θ values behind [`default_panel`], as floats.
pub fn default_panel_thetas(params: &InlsParams) -> Result<Vec<f64>, DiagnosticsError> {
    let range = theta_range(params.b())?;
    let lo = to_f64(&range.lower);
    let hi = to_f64(&range.upper);
    Ok(vec![lo + 0.1 * (hi - lo), 0.5 * (lo + hi), hi - 0.1 * (hi - lo)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn weight_profile() {
        for i in 0..=400 {
            let rho = i as f64 * 0.01;
            assert!(VirialWeight::phi(rho) >= -1e-15);
            if rho <= 1.0 {
                assert_eq!(VirialWeight::phi(rho), rho * rho);
                assert_eq!(VirialWeight::laplacian(rho), 6.0);
            }
            if rho >= 2.0 {
                assert_eq!(VirialWeight::phi(rho), 0.0);
            }
        }
        let eps = 1e-7;
        for k in 0..4 {
            assert!((blend_derivative(k, 0.0) - jet(1.0)[k]).abs() < 1e-12);
            assert!(blend_derivative(k, 1.0).abs() < 1e-9);
            assert!((jet(1.0 + eps)[k] - jet(1.0 - eps)[k]).abs() < 1e-3);
        }
    }

    #[test]
    fn remainder_constant_covers_weight() {
        let mut worst: f64 = 0.0;
        for i in 0..=20000 {
            let rho = 1.0 + i as f64 * 1e-4;
            let hess = 4.0 * (VirialWeight::d2phi(rho) - 2.0).abs();
            let bilap = VirialWeight::bilaplacian(rho).abs();
            let quartic = (VirialWeight::laplacian(rho) - 6.0).abs()
                + 0.5 * (2.0 - VirialWeight::dphi(rho) / rho).abs();
            worst = worst.max(hess).max(bilap).max(quartic);
        }
        assert!(worst <= REMAINDER_CONSTANT);
        assert!(worst > 0.99 * REMAINDER_CONSTANT);
    }

    #[test]
    fn overflow_is_rejected() {
        let grid = Arc::new(RadialGrid::new(10.0, 255, 0.25).unwrap());
        let f = ComplexRadialField::from_real_fn(grid, |r| (-r * r).exp());
        let w = VirialWeight::new(5.0).unwrap();
        assert!(matches!(
            virial_z(&f, &w),
            Err(DiagnosticsError::WeightOverflowsGrid { .. })
        ));
        assert!(VirialWeight::new(0.0).is_err());
    }

    #[test]
    fn panel_is_admissible() {
        for b in ["0", "1/4", "2/5"] {
            let params: InlsParams = b.parse().unwrap();
            let panel = default_panel(&params).unwrap();
            assert_eq!(panel.len(), 3);
            for p in &panel {
                assert!(crate::exponents::check_admissible(p, &params));
            }
        }
    }
}
