//! Absorption profiles σx, σy and the complex coefficient fields entering the
//! stretched derivative operators
//! `∂x^PML = 1/(1+e^{iρ}σx) (∂x − e^{iρ} β/(2αx) σx ∂y)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::analysis::{system_threshold, StabilityThreshold};
use crate::error::{Error, Result};
use crate::model::{CnlsCoefficients, DomainLayout, GridSpec};

/// Layer parameters: complex-stretching angle ρ and profile magnitudes
/// `hx, hy ≈ max σ`. The profile steepness `a(δ) = 12/δ` and the smoothing
/// factor 6 are fixed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PmlParameters {
    pub rho: f64,
    pub hx: f64,
    pub hy: f64,
}

impl PmlParameters {
    pub fn new(rho: f64, hx: f64, hy: f64) -> Result<Self> {
        let p = Self { rho, hx, hy };
        p.validate()?;
        Ok(p)
    }

    pub fn with_magnitudes(hx: f64, hy: f64) -> Result<Self> {
        Self::new(FRAC_PI_4, hx, hy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("rho must lie in (0, pi/2)"));
        }
        if self.hx < 0.0 || self.hy < 0.0 {
            return Err(Error::config("profile magnitudes must be non-negative"));
        }
        Ok(())
    }
}

/// Two-bracket tanh profile: zero on `[0, L]`, rising to ≈ `h` inside the
/// layers of width `delta`. Arguments outside `[-delta, L+delta]` are clamped
/// into the nearest layer.
pub fn sigma_eval(h: f64, l: f64, delta: f64, x: f64) -> f64 {
    if delta <= 0.0 || h == 0.0 {
        return 0.0;
    }
    let x = x.clamp(-delta, l + delta);
    let a = 12.0 / delta;
    if x > l {
        h / 4.0
            * (1.0 + (a * (x - l - delta / 2.0)).tanh())
            * (1.0 + (6.0 * a * (x - l - delta / 8.0)).tanh())
    } else if x < 0.0 {
        h / 4.0
            * (1.0 - (a * (x + delta / 2.0)).tanh())
            * (1.0 - (6.0 * a * (x + delta / 8.0)).tanh())
    } else {
        0.0
    }
}

/// Analytic derivative `dσ/dx` of the two-bracket tanh profile; zero on
/// `[0, L]` and outside the clamping range.
pub fn sigma_eval_deriv(h: f64, l: f64, delta: f64, x: f64) -> f64 {
    if delta <= 0.0 || h == 0.0 || !(-delta..=l + delta).contains(&x) {
        return 0.0;
    }
    let a = 12.0 / delta;
    let sech2 = |z: f64| {
        let c = z.cosh();
        1.0 / (c * c)
    };
    if x > l {
        let t1 = a * (x - l - delta / 2.0);
        let t2 = 6.0 * a * (x - l - delta / 8.0);
        h / 4.0
            * (a * sech2(t1) * (1.0 + t2.tanh()) + (1.0 + t1.tanh()) * 6.0 * a * sech2(t2))
    } else if x < 0.0 {
        let t1 = a * (x + delta / 2.0);
        let t2 = 6.0 * a * (x + delta / 8.0);
        -h / 4.0
            * (a * sech2(t1) * (1.0 - t2.tanh()) + (1.0 - t1.tanh()) * 6.0 * a * sech2(t2))
    } else {
        0.0
    }
}

/// Numerical maximum of the profile over a fine sampling of the right layer.
pub fn max_sigma(h: f64, l: f64, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let n = 2000;
    (0..=n)
        .map(|i| sigma_eval(h, l, delta, l + delta * i as f64 / n as f64))
        .fold(0.0f64, f64::max)
}

/// Sampled absorption profiles on the grid lines, with analytic evaluators.
#[derive(Debug, Clone)]
pub struct AbsorptionProfile {
    pub layout: DomainLayout,
    pub params: PmlParameters,
    /// σx at every grid x-coordinate.
    pub sigma_x: Vec<f64>,
    /// σy at every grid y-coordinate.
    pub sigma_y: Vec<f64>,
    /// Analytic dσx/dx at every grid x-coordinate.
    pub sigma_x_d: Vec<f64>,
    /// Analytic dσy/dy at every grid y-coordinate.
    pub sigma_y_d: Vec<f64>,
}

impl AbsorptionProfile {
    pub fn eval_x(&self, x: f64) -> f64 {
        sigma_eval(self.params.hx, self.layout.lx, self.layout.delta_x, x)
    }

    pub fn eval_y(&self, y: f64) -> f64 {
        sigma_eval(self.params.hy, self.layout.ly, self.layout.delta_y, y)
    }

    pub fn max_sigma_x(&self) -> f64 {
        max_sigma(self.params.hx, self.layout.lx, self.layout.delta_x)
    }

    pub fn max_sigma_y(&self) -> f64 {
        max_sigma(self.params.hy, self.layout.ly, self.layout.delta_y)
    }

    /// Compares the profile maxima against the corner-layer stability
    /// threshold of the system. Exceeding it is reported, not rejected:
    /// unstable runs are a supported scenario.
    pub fn stability_report(&self, coeffs: &CnlsCoefficients) -> StabilityReport {
        let threshold = system_threshold(coeffs);
        let max_sigma = self.max_sigma_x().max(self.max_sigma_y());
        StabilityReport {
            max_sigma,
            threshold,
            exceeded: threshold.is_exceeded_by(max_sigma),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    pub max_sigma: f64,
    pub threshold: StabilityThreshold,
    pub exceeded: bool,
}

impl std::fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.threshold {
            StabilityThreshold::Unconditional => {
                write!(f, "max sigma = {:.4}, unconditionally stable", self.max_sigma)
            }
            StabilityThreshold::Finite(t) => write!(
                f,
                "max sigma = {:.4}, stability threshold sigma1 = {:.4}{}",
                self.max_sigma,
                t,
                if self.exceeded {
                    " (EXCEEDED: expect growth in the layers)"
                } else {
                    ""
                }
            ),
        }
    }
}

/// Samples the profiles at every grid coordinate.
pub fn build_profiles(
    layout: &DomainLayout,
    grid: &GridSpec,
    params: &PmlParameters,
) -> Result<AbsorptionProfile> {
    params.validate()?;
    let sigma_x = grid
        .xs()
        .iter()
        .map(|&x| sigma_eval(params.hx, layout.lx, layout.delta_x, x))
        .collect();
    let sigma_y = grid
        .ys()
        .iter()
        .map(|&y| sigma_eval(params.hy, layout.ly, layout.delta_y, y))
        .collect();
    let sigma_x_d = grid
        .xs()
        .iter()
        .map(|&x| sigma_eval_deriv(params.hx, layout.lx, layout.delta_x, x))
        .collect();
    let sigma_y_d = grid
        .ys()
        .iter()
        .map(|&y| sigma_eval_deriv(params.hy, layout.ly, layout.delta_y, y))
        .collect();
    Ok(AbsorptionProfile {
        layout: *layout,
        params: *params,
        sigma_x,
        sigma_y,
        sigma_x_d,
        sigma_y_d,
    })
}

/// Per-grid-line complex scalings `cx = 1/(1+e^{iρ}σx)`, `cy = 1/(1+e^{iρ}σy)`
/// and the per-component real cross-coupling factors
/// `gx = σx β_j/(2αx_j)`, `gy = σy β_j/(2αy_j)`.
#[derive(Debug, Clone)]
pub struct PmlCoefficientFields {
    pub rho: f64,
    pub cx: Vec<Complex64>,
    pub cy: Vec<Complex64>,
    /// `dcx/dx = −e^{iρ} σx' cx²` per grid x-index.
    pub cx_d: Vec<Complex64>,
    pub cy_d: Vec<Complex64>,
    /// `gx[j][i]` for component j at grid x-index i.
    pub gx: Vec<Vec<f64>>,
    pub gy: Vec<Vec<f64>>,
    /// `dgx/dx = σx' β_j/(2αx_j)` per component and grid x-index.
    pub gx_d: Vec<Vec<f64>>,
    pub gy_d: Vec<Vec<f64>>,
}

pub fn build_coefficient_fields(
    profile: &AbsorptionProfile,
    coeffs: &CnlsCoefficients,
    rho: f64,
) -> PmlCoefficientFields {
    let e = Complex64::from_polar(1.0, rho);
    let cx = profile
        .sigma_x
        .iter()
        .map(|&s| (Complex64::new(1.0, 0.0) + e * s).inv())
        .collect();
    let cy: Vec<Complex64> = profile
        .sigma_y
        .iter()
        .map(|&s| (Complex64::new(1.0, 0.0) + e * s).inv())
        .collect();
    let cx_d = profile
        .sigma_x_d
        .iter()
        .zip(&cx)
        .map(|(&sd, c)| -e * sd * c * c)
        .collect();
    let cy_d = profile
        .sigma_y_d
        .iter()
        .zip(&cy)
        .map(|(&sd, c)| -e * sd * c * c)
        .collect();
    let mut gx = Vec::new();
    let mut gy = Vec::new();
    let mut gx_d = Vec::new();
    let mut gy_d = Vec::new();
    for j in 0..coeffs.n_components() {
        let fx = coeffs.beta[j] / (2.0 * coeffs.alpha_x[j]);
        let fy = coeffs.beta[j] / (2.0 * coeffs.alpha_y[j]);
        gx.push(profile.sigma_x.iter().map(|&s| s * fx).collect());
        gy.push(profile.sigma_y.iter().map(|&s| s * fy).collect());
        gx_d.push(profile.sigma_x_d.iter().map(|&s| s * fx).collect());
        gy_d.push(profile.sigma_y_d.iter().map(|&s| s * fy).collect());
    }
    PmlCoefficientFields {
        rho,
        cx,
        cy,
        cx_d,
        cy_d,
        gx,
        gy,
        gx_d,
        gy_d,
    }
}
