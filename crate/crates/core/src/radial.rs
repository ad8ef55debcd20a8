//! Half-line radial discretization in the v = r·u representation.
//!
//! For radial u on ℝ³, Δu = (1/r)∂²_r(r u), so v = r·u turns the radial
//! Laplacian into a plain second derivative with v(0) = 0. Imposing
//! v(r_max) = 0 as well makes the type-I discrete sine transform the natural
//! spectral basis: nodes r_j = j·dr, j = 1..n, with dr = r_max/(n+1), and
//! modes sin(k_m r) with k_m = mπ/r_max.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::exponents::InlsParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs r_max > 0 and n >= 2 (got r_max = {r_max}, n = {n})")]
    InvalidGrid { r_max: f64, n: usize },
    #[error("weight exponent b = {0} must be finite and nonnegative")]
    InvalidWeight(f64),
    #[error("field has {got} samples but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

/// Uniform radial grid with cached transform plan and weight samples.
///
/// Immutable after construction; share it through `Arc`.
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    dr: f64,
    b: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("r_max", &self.r_max)
            .field("n", &self.n)
            .field("dr", &self.dr)
            .field("b", &self.b)
            .finish()
    }
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize, b: f64) -> Result<Self, GridError> {
        if !(r_max.is_finite() && r_max > 0.0) || n < 2 {
            return Err(GridError::InvalidGrid { r_max, n });
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(GridError::InvalidWeight(b));
        }
        let dr = r_max / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|j| j as f64 * dr).collect();
        let wavenumbers = (1..=n).map(|m| m as f64 * PI / r_max).collect();
        let weights = nodes.iter().map(|r| r.powf(-b)).collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Ok(Self {
            r_max,
            n,
            dr,
            b,
            nodes,
            wavenumbers,
            weights,
            fft,
        })
    }

    pub fn for_params(r_max: f64, n: usize, params: &InlsParams) -> Result<Self, GridError> {
        Self::new(r_max, n, params.b_f64())
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// k_m = mπ/r_max, m = 1..n.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// r_j^{-b}.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// S_m = Σ_j x_j sin(π j m/(n+1)), via an FFT of the odd extension.
    fn sine_sum(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let len = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (j, &xj) in x.iter().enumerate() {
            buf[j + 1] = xj;
            buf[len - j - 1] = -xj;
        }
        self.fft.process(&mut buf);
        // X_m = -2i S_m
        buf[1..=n].iter().map(|z| Complex64::new(-z.im, z.re) * 0.5).collect()
    }

    /// C_j = Σ_m y_m cos(π j m/(n+1)), via an FFT of the even extension.
    fn cosine_sum(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let len = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (m, &ym) in y.iter().enumerate() {
            buf[m + 1] = ym;
            buf[len - m - 1] = ym;
        }
        self.fft.process(&mut buf);
        buf[1..=n].iter().map(|z| z * 0.5).collect()
    }

    /// Sine coefficients c_m with v_j = Σ_m c_m sin(k_m r_j).
    pub fn analyze(&self, v: &[Complex64]) -> Vec<Complex64> {
        let scale = 2.0 / (self.n + 1) as f64;
        let mut c = self.sine_sum(v);
        c.iter_mut().for_each(|z| *z *= scale);
        c
    }

    /// Node values of the sine series with coefficients `c`.
    pub fn synthesize(&self, c: &[Complex64]) -> Vec<Complex64> {
        self.sine_sum(c)
    }

    /// Node values of Σ_m c_m k_m cos(k_m r), the derivative of the sine series.
    pub fn synthesize_derivative(&self, c: &[Complex64]) -> Vec<Complex64> {
        let y: Vec<Complex64> = c
            .iter()
            .zip(&self.wavenumbers)
            .map(|(cm, k)| cm * k)
            .collect();
        self.cosine_sum(&y)
    }

    /// Band-limited evaluation of the sine series at an arbitrary radius.
    ///
    /// Returns zero outside (0, r_max): the series' periodic extension is not
    /// part of the field.
    pub fn evaluate_series(&self, c: &[Complex64], r: f64) -> Complex64 {
        if r <= 0.0 || r >= self.r_max {
            return Complex64::new(0.0, 0.0);
        }
        let theta = PI * r / self.r_max;
        let two_cos = 2.0 * theta.cos();
        // sin((m+1)θ) = 2cosθ sin(mθ) - sin((m-1)θ)
        let (mut prev, mut cur) = (0.0, theta.sin());
        let mut acc = Complex64::new(0.0, 0.0);
        for cm in c {
            acc += cm * cur;
            let next = two_cos * cur - prev;
            prev = cur;
            cur = next;
        }
        acc
    }

    /// `c` without the trailing modes that sit at the transform's roundoff
    /// floor.
    pub fn significant_modes<'a>(&self, c: &'a [Complex64]) -> &'a [Complex64] {
        let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = 4.0 * f64::EPSILON * peak;
        let len = c.iter().rposition(|z| z.norm() > cut).map_or(0, |i| i + 1);
        &c[..len]
    }

    /// ∫_{ℝ³} f dx = 4π Σ_j f_j r_j² dr for radial samples f.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let sum: f64 = f.iter().zip(&self.nodes).map(|(fj, r)| fj * r * r).sum();
        4.0 * PI * self.dr * sum
    }

    /// Same rule restricted to nodes with r_j > radius.
    pub fn integrate_beyond(&self, f: &[f64], radius: f64) -> f64 {
        let sum: f64 = f
            .iter()
            .zip(&self.nodes)
            .filter(|(_, &r)| r > radius)
            .map(|(fj, r)| fj * r * r)
            .sum();
        4.0 * PI * self.dr * sum
    }

    /// Index of the first node in the outermost 10% of the domain.
    pub fn outer_start(&self) -> usize {
        let cut = 0.9 * self.r_max;
        self.nodes.partition_point(|&r| r < cut)
    }
}

/// Complex samples v_j = r_j·u(r_j) on a shared grid.
#[derive(Debug, Clone)]
pub struct ComplexRadialField {
    grid: Arc<RadialGrid>,
    v: Vec<Complex64>,
}

impl ComplexRadialField {
    pub fn from_v(grid: Arc<RadialGrid>, v: Vec<Complex64>) -> Result<Self, GridError> {
        if v.len() != grid.n() {
            return Err(GridError::LengthMismatch {
                expected: grid.n(),
                got: v.len(),
            });
        }
        Ok(Self { grid, v })
    }

    pub fn from_u(grid: Arc<RadialGrid>, u: &[Complex64]) -> Result<Self, GridError> {
        if u.len() != grid.n() {
            return Err(GridError::LengthMismatch {
                expected: grid.n(),
                got: u.len(),
            });
        }
        let v = u.iter().zip(grid.nodes()).map(|(uj, r)| uj * r).collect();
        Ok(Self { grid, v })
    }

    /// Samples u(r) at the nodes.
    pub fn from_fn(grid: Arc<RadialGrid>, u: impl Fn(f64) -> Complex64) -> Self {
        let v = grid.nodes().iter().map(|&r| u(r) * r).collect();
        Self { grid, v }
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, u: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(u(r), 0.0))
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let v = vec![Complex64::new(0.0, 0.0); grid.n()];
        Self { grid, v }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    pub fn v_mut(&mut self) -> &mut [Complex64] {
        &mut self.v
    }

    pub fn into_v(self) -> Vec<Complex64> {
        self.v
    }

    /// u_j = v_j/r_j.
    pub fn u(&self) -> Vec<Complex64> {
        self.v.iter().zip(self.grid.nodes()).map(|(v, r)| v / r).collect()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let v = self.v.iter().map(|z| z * factor).collect();
        Self::from_parts(self.grid.clone(), v)
    }

    pub(crate) fn from_parts(grid: Arc<RadialGrid>, v: Vec<Complex64>) -> Self {
        debug_assert_eq!(v.len(), grid.n());
        Self { grid, v }
    }

    pub fn sine_coefficients(&self) -> Vec<Complex64> {
        self.grid.analyze(&self.v)
    }

    fn map_modes(&self, symbol: impl Fn(f64) -> Complex64) -> Self {
        let mut c = self.sine_coefficients();
        for (cm, &k) in c.iter_mut().zip(self.grid.wavenumbers()) {
            *cm *= symbol(k);
        }
        Self::from_parts(self.grid.clone(), self.grid.synthesize(&c))
    }

    /// Δu in the v-representation: each sine mode is multiplied by −k_m².
    pub fn laplacian(&self) -> Self {
        self.map_modes(|k| Complex64::new(-k * k, 0.0))
    }

    /// Free Schrödinger group U(t) = e^{itΔ}: mode m picks up e^{−i k_m² t}.
    pub fn free_propagate(&self, t: f64) -> Self {
        if t == 0.0 {
            return self.clone();
        }
        self.map_modes(|k| Complex64::from_polar(1.0, -k * k * t))
    }

    /// ∂_r u at the nodes, from the spectral derivative of v:
    /// ∂_r u = (v' − v/r)/r.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        let dv = self.grid.synthesize_derivative(&self.sine_coefficients());
        dv.iter()
            .zip(&self.v)
            .zip(self.grid.nodes())
            .map(|((dvj, vj), r)| (dvj - vj / r) / r)
            .collect()
    }

    /// |u_j|².
    pub fn density(&self) -> Vec<f64> {
        self.v
            .iter()
            .zip(self.grid.nodes())
            .map(|(v, r)| v.norm_sqr() / (r * r))
            .collect()
    }

    /// ⟨self, other⟩ = ∫ ū w dx.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let sum: Complex64 = self.v.iter().zip(&other.v).map(|(a, b)| a.conj() * b).sum();
        sum * (4.0 * PI * self.grid.dr())
    }

    /// M[u] = ∫|u|² dx.
    pub fn mass(&self) -> f64 {
        let sum: f64 = self.v.iter().map(|z| z.norm_sqr()).sum();
        4.0 * PI * self.grid.dr() * sum
    }

    /// ‖∇u‖²_{L²} = −Re⟨u, Δu⟩, evaluated in sine modes.
    pub fn grad_sq(&self) -> f64 {
        grad_sq_from_coefficients(&self.grid, &self.sine_coefficients())
    }

    /// ‖|x|^{-b}|u|⁴‖_{L¹}.
    pub fn potential(&self) -> f64 {
        potential_of(&self.grid, &self.v)
    }

    /// max_j |u_j|.
    pub fn sup_norm(&self) -> f64 {
        self.v
            .iter()
            .zip(self.grid.nodes())
            .map(|(v, r)| v.norm() / r)
            .fold(0.0, f64::max)
    }

    /// Share of the mass sitting in the outermost 10% of the grid.
    pub fn boundary_mass_fraction(&self) -> f64 {
        boundary_fraction(&self.grid, &self.v)
    }

    /// (M + ‖∇u‖²)^{1/2}.
    pub fn h1_norm(&self) -> f64 {
        (self.mass() + self.grad_sq()).sqrt()
    }

    /// Pointwise difference; both fields must share a grid.
    pub fn sub(&self, other: &Self) -> Self {
        let v = self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect();
        Self::from_parts(self.grid.clone(), v)
    }

    /// Largest |v_j − w_j| relative to the largest |v_j|.
    pub fn relative_max_distance(&self, other: &Self) -> f64 {
        let num = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let den = self.v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

pub(crate) fn grad_sq_from_coefficients(grid: &RadialGrid, c: &[Complex64]) -> f64 {
    // Parseval for the sine basis: Σ_j |v_j|² = (n+1)/2 Σ_m |c_m|²
    let sum: f64 = c
        .iter()
        .zip(grid.wavenumbers())
        .map(|(cm, k)| k * k * cm.norm_sqr())
        .sum();
    2.0 * PI * grid.r_max() * sum
}

pub(crate) fn potential_of(grid: &RadialGrid, v: &[Complex64]) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(grid.nodes())
        .zip(grid.weights())
        .map(|((vj, r), w)| {
            let a = vj.norm_sqr();
            w * a * a / (r * r)
        })
        .sum();
    4.0 * PI * grid.dr() * sum
}

pub(crate) fn boundary_fraction(grid: &RadialGrid, v: &[Complex64]) -> f64 {
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = v[grid.outer_start()..].iter().map(|z| z.norm_sqr()).sum();
    outer / total
}
