use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use inls_core::ground_state::GroundStateProfile;
use inls_core::io::read_field;
use inls_core::radial::{ComplexRadialField, RadialGrid};
use num_complex::Complex64;

use crate::CliError;

/// Builtin initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// A·e^{−(r/w)²}
    Gaussian { amplitude: f64, width: f64 },
    /// c·Q
    GroundState { scale: f64 },
    File(PathBuf),
}

impl InitSpec {
    pub fn needs_profile(&self) -> bool {
        matches!(self, InitSpec::GroundState { .. })
    }

    pub fn build(
        &self,
        grid: Arc<RadialGrid>,
        profile: Option<&GroundStateProfile>,
    ) -> Result<ComplexRadialField, CliError> {
        match self {
            InitSpec::Gaussian { amplitude, width } => {
                let (a, w) = (*amplitude, *width);
                Ok(ComplexRadialField::from_real_fn(grid, move |r| {
                    a * (-(r / w) * (r / w)).exp()
                }))
            }
            InitSpec::GroundState { scale } => {
                let profile = profile.ok_or_else(|| {
                    CliError::Internal("ground state requested but not solved".into())
                })?;
                Ok(transfer_profile(profile, grid, *scale))
            }
            InitSpec::File(path) => read_field(path, grid)
                .map_err(|e| CliError::Validation(format!("init file: {e}"))),
        }
    }
}

/// c·Q resampled onto `grid` by sine interpolation on the profile grid.
fn transfer_profile(profile: &GroundStateProfile, grid: Arc<RadialGrid>, scale: f64) -> ComplexRadialField {
    let q = profile.field();
    let same = grid.n() == profile.grid.n() && grid.r_max() == profile.grid.r_max();
    if same {
        return ComplexRadialField::from_v(grid, q.v().iter().map(|z| z * scale).collect())
            .expect("matching length");
    }
    let all = q.sine_coefficients();
    let coeffs = profile.grid.significant_modes(&all);
    let v: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&r| profile.grid.evaluate_series(coeffs, r) * scale)
        .collect();
    ComplexRadialField::from_v(grid, v).expect("matching length")
}

fn parse_number(s: &str, what: &str) -> Result<f64, String> {
    let x: f64 = s
        .parse()
        .map_err(|_| format!("{what} `{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("{what} must be finite"));
    }
    Ok(x)
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: needs a path".into());
            }
            return Ok(InitSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["gaussian", a] => Ok(InitSpec::Gaussian {
                amplitude: parse_number(a, "amplitude")?,
                width: 1.0,
            }),
            ["gaussian", a, w] => {
                let width = parse_number(w, "width")?;
                if width <= 0.0 {
                    return Err("width must be positive".into());
                }
                Ok(InitSpec::Gaussian {
                    amplitude: parse_number(a, "amplitude")?,
                    width,
                })
            }
            ["groundstate"] => Ok(InitSpec::GroundState { scale: 1.0 }),
            ["groundstate", c] => Ok(InitSpec::GroundState {
                scale: parse_number(c, "scale")?,
            }),
            _ => Err(format!(
                "unknown initial data `{s}` (expected gaussian:A, gaussian:A:w, groundstate, groundstate:c or file:<path>)"
            )),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Gaussian { amplitude, width } if *width == 1.0 => {
                write!(f, "gaussian:{amplitude}")
            }
            InitSpec::Gaussian { amplitude, width } => write!(f, "gaussian:{amplitude}:{width}"),
            InitSpec::GroundState { scale } if *scale == 1.0 => write!(f, "groundstate"),
            InitSpec::GroundState { scale } => write!(f, "groundstate:{scale}"),
            InitSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
