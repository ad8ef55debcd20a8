//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the transform or quadrature code under test.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use inls_core::exponents::InlsParams;
use inls_core::radial::{ComplexRadialField, RadialGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod quadrature of f on [a, b].
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 60)
}

/// 4π∫₀^R f(r) r² dr.
pub fn radial_quad(f: impl Fn(f64) -> f64, r_end: f64) -> f64 {
    4.0 * PI * quad(|r| f(r) * r * r, 0.0, r_end, 1e-15)
}

pub fn params(b: &str) -> InlsParams {
    b.parse().unwrap()
}

pub fn grid(r_max: f64, n: usize, b: &str) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::for_params(r_max, n, &params(b)).unwrap())
}

pub fn gaussian(grid: &Arc<RadialGrid>, amplitude: f64) -> ComplexRadialField {
    ComplexRadialField::from_real_fn(grid.clone(), move |r| amplitude * (-r * r).exp())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// A few complex chirped Gaussian bumps centred in [0, 3].
#[derive(Debug, Clone)]
pub struct Bumps(pub Vec<(Complex64, f64, f64, f64)>);

impl Bumps {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=3);
        Bumps(
            (0..k)
                .map(|_| {
                    let amp = Complex64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..2.0 * PI));
                    (amp, rng.gen_range(0.0..3.0), rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0))
                })
                .collect(),
        )
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.0
            .iter()
            .map(|&(a, c, w, chirp)| {
                let x = (r - c) / w;
                a * (-x * x).exp() * Complex64::from_polar(1.0, chirp * r * r)
            })
            .sum()
    }

    pub fn field(&self, grid: &Arc<RadialGrid>) -> ComplexRadialField {
        let me = self.clone();
        ComplexRadialField::from_fn(grid.clone(), move |r| me.eval(r))
    }
}

/// Dense O(n²) sine transform pair on n interior nodes, independent of the
/// FFT-based transform in the crate.
pub struct NaiveSine {
    n: usize,
    table: Vec<f64>,
    k2: Vec<f64>,
}

impl NaiveSine {
    pub fn new(r_max: f64, n: usize) -> Self {
        let mut table = vec![0.0; n * n];
        for m in 0..n {
            for j in 0..n {
                table[m * n + j] = (PI * ((m + 1) * (j + 1)) as f64 / (n + 1) as f64).sin();
            }
        }
        let k2 = (1..=n).map(|m| (m as f64 * PI / r_max).powi(2)).collect();
        Self { n, table, k2 }
    }

    pub fn second_derivative(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let scale = 2.0 / (n + 1) as f64;
        let c: Vec<Complex64> = (0..n)
            .map(|m| {
                let s: Complex64 = (0..n).map(|j| v[j] * self.table[m * n + j]).sum();
                s * scale * -self.k2[m]
            })
            .collect();
        (0..n)
            .map(|j| (0..n).map(|m| c[m] * self.table[m * n + j]).sum())
            .collect()
    }
}

/// Method-of-lines right-hand side v_t = i(v_rr + r^{-b}|v|²v/r²).
pub fn mol_rhs(op: &NaiveSine, nodes: &[f64], b: f64, v: &[Complex64]) -> Vec<Complex64> {
    let lap = op.second_derivative(v);
    lap.iter()
        .zip(v)
        .zip(nodes)
        .map(|((l, vj), r)| Complex64::i() * (l + r.powf(-b) * vj.norm_sqr() / (r * r) * vj))
        .collect()
}

/// Classical RK4 over [0, t] with `substeps` equal steps.
pub fn rk4(op: &NaiveSine, nodes: &[f64], b: f64, v0: &[Complex64], t: f64, substeps: usize) -> Vec<Complex64> {
    let h = t / substeps as f64;
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> {
        x.iter().zip(y).map(|(xi, yi)| xi + yi * a).collect()
    };
    let mut v = v0.to_vec();
    for _ in 0..substeps {
        let k1 = mol_rhs(op, nodes, b, &v);
        let k2 = mol_rhs(op, nodes, b, &axpy(&v, 0.5 * h, &k1));
        let k3 = mol_rhs(op, nodes, b, &axpy(&v, 0.5 * h, &k2));
        let k4 = mol_rhs(op, nodes, b, &axpy(&v, h, &k3));
        for j in 0..v.len() {
            v[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    v
}

/// The C³ septic blend used by the virial weight, written out independently.
pub fn weight_oracle(rho: f64) -> f64 {
    if rho <= 1.0 {
        rho * rho
    } else if rho >= 2.0 {
        0.0
    } else {
        let s = rho - 1.0;
        1.0 + 2.0 * s + s.powi(2) - 85.0 * s.powi(4) + 194.0 * s.powi(5) - 157.0 * s.powi(6)
            + 44.0 * s.powi(7)
    }
}
