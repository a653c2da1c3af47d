//! Closed-form Laplace–Fourier analysis of the layered problem: dispersion,
//! modal exponents, damping of the stretched modes, constant-σ stability
//! symbols for corner and side layers, stability thresholds and the
//! mixed-derivative-removing change of variables.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::model::CnlsCoefficients;

/// Laplace–Fourier point with the two modal exponents of `e^{λx}` solutions.
#[derive(Debug, Clone, Copy)]
pub struct ModalPoint {
    pub s: Complex64,
    pub ky: f64,
    /// Root with the larger real part (left-going branch, `Re ≥ 0`).
    pub lambda1: Complex64,
    /// Root with the smaller real part (right-going branch, `Re ≤ 0`).
    pub lambda2: Complex64,
}

/// Plane-wave dispersion data for one component.
#[derive(Debug, Clone, Copy)]
pub struct DispersionPoint {
    pub kx: f64,
    pub ky: f64,
    /// `ω = αx kx² + αy ky² + β kx ky`
    pub omega: f64,
    /// x-group velocity `vg = 2αx kx + β ky`
    pub vg: f64,
    /// x-phase velocity `ω/kx`; undefined for `kx = 0`.
    pub vp: Option<f64>,
}

/// Fourier symbol `∂t û = ν û` of a constant-σ layer equation.
#[derive(Debug, Clone, Copy)]
pub struct StabilitySymbol {
    pub kx: f64,
    pub ky: f64,
    pub nu: Complex64,
}

pub fn dispersion(alpha_x: f64, alpha_y: f64, beta: f64, kx: f64, ky: f64) -> DispersionPoint {
    let omega = alpha_x * kx * kx + alpha_y * ky * ky + beta * kx * ky;
    let vg = 2.0 * alpha_x * kx + beta * ky;
    let vp = if kx != 0.0 { Some(omega / kx) } else { None };
    DispersionPoint {
        kx,
        ky,
        omega,
        vg,
        vp,
    }
}

/// The two roots of `αx λ² + iβ ky λ + (i s − αy ky²) = 0`, labeled so that
/// `Re(λ1) ≥ Re(λ2)` (ties broken by imaginary part). Principal branch of the
/// complex square root.
pub fn modal_lambdas(
    alpha_x: f64,
    alpha_y: f64,
    beta: f64,
    s: Complex64,
    ky: f64,
) -> Result<(Complex64, Complex64)> {
    if alpha_x == 0.0 {
        return Err(Error::domain("modal_lambdas: alpha_x must be nonzero"));
    }
    let disc = Complex64::new(-beta * beta * ky * ky, 0.0)
        - 4.0 * alpha_x * (Complex64::i() * s - alpha_y * ky * ky);
    let root = disc.sqrt();
    let base = Complex64::new(0.0, -beta * ky);
    let la = (base + root) / (2.0 * alpha_x);
    let lb = (base - root) / (2.0 * alpha_x);
    let (l1, l2) = if la.re > lb.re || (la.re == lb.re && la.im >= lb.im) {
        (la, lb)
    } else {
        (lb, la)
    };
    Ok((l1, l2))
}

pub fn modal_point(
    alpha_x: f64,
    alpha_y: f64,
    beta: f64,
    s: Complex64,
    ky: f64,
) -> Result<ModalPoint> {
    let (lambda1, lambda2) = modal_lambdas(alpha_x, alpha_y, beta, s, ky)?;
    Ok(ModalPoint {
        s,
        ky,
        lambda1,
        lambda2,
    })
}

/// `λ̃ = λ + (λ + iβky/(2αx)) e^{iρ} σ` — the stretched modal exponent in a
/// layer with local absorption value `σ`.
pub fn pml_shifted_lambda(
    lambda: Complex64,
    alpha_x: f64,
    beta: f64,
    ky: f64,
    rho: f64,
    sigma: f64,
) -> Complex64 {
    let center = Complex64::new(0.0, beta * ky / (2.0 * alpha_x));
    lambda + (lambda + center) * Complex64::from_polar(sigma, rho)
}

/// Fourier symbol of the constant-σ corner layer equation in scaled variables
/// (`αx = αy = 1`, mixed coefficient `β̃`), with `μx = 1+e^{iρ}σx` and
/// `μy = 1+e^{iρ}σy`.
pub fn corner_symbol(
    tilde_beta: f64,
    sigma_x: f64,
    sigma_y: f64,
    rho: f64,
    kx: f64,
    ky: f64,
) -> StabilitySymbol {
    let e = Complex64::from_polar(1.0, rho);
    let e2 = e * e;
    let mx = 1.0 + e * sigma_x;
    let my = 1.0 + e * sigma_y;
    let b2 = tilde_beta * tilde_beta;
    let t1 = kx * kx
        * (1.0 / (mx * mx) + b2 * e2 * sigma_y * sigma_y / (4.0 * my * my)
            - b2 * e * sigma_y / (2.0 * mx * my));
    let t2 = ky * ky
        * (1.0 / (my * my) + b2 * e2 * sigma_x * sigma_x / (4.0 * mx * mx)
            - b2 * e * sigma_x / (2.0 * mx * my));
    let t3 = tilde_beta
        * kx
        * ky
        * (e * sigma_x / (mx * mx) + e * sigma_y / (my * my)
            - (4.0 + e2 * b2 * sigma_x * sigma_y) / (4.0 * mx * my));
    StabilitySymbol {
        kx,
        ky,
        nu: -Complex64::i() * (t1 + t2 - t3),
    }
}

/// Closed form of `Re(ν)` for the corner symbol specialized to
/// `σx = σy = σ`, `ρ = π/4`.
pub fn corner_re_nu_equal_sigma(tilde_beta: f64, sigma: f64, kx: f64, ky: f64) -> f64 {
    let b2 = tilde_beta * tilde_beta;
    let den = 4.0 * (sigma * sigma + SQRT_2 * sigma + 1.0).powi(2);
    sigma / den
        * ((kx * kx + ky * ky)
            * (2.0 * SQRT_2 * b2 * sigma * sigma + sigma * (b2 - 4.0) - SQRT_2 * (b2 + 4.0))
            + kx * ky
                * tilde_beta
                * (SQRT_2 * sigma * sigma * (b2 + 4.0) + sigma * (b2 - 4.0) - 8.0 * SQRT_2))
}

/// Fourier symbol of the constant-σ side layer (x-layer) equation.
/// `Re(ν) = −σ(√2+σ)/(σ²+√2σ+1)² (2kx + β̃ky)²` at `ρ = π/4`.
pub fn side_symbol(tilde_beta: f64, sigma: f64, rho: f64, kx: f64, ky: f64) -> StabilitySymbol {
    let e = Complex64::from_polar(1.0, rho);
    let mx = 1.0 + e * sigma;
    // (i kx')-symbol of the stretched x-derivative acting on e^{i(kx x + ky y)}
    let kxp = (kx - e * tilde_beta * sigma * ky / 2.0) / mx;
    let derived = -Complex64::i() * (kxp * (kxp + tilde_beta * ky) + ky * ky);
    StabilitySymbol {
        kx,
        ky,
        nu: Complex64::new(4.0 * derived.re, derived.im),
    }
}

/// Stability threshold for the corner layer at `ρ = π/4`, `σx = σy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityThreshold {
    /// `β̃ = 0`: stable for every σ.
    Unconditional,
    /// Stable exactly for `0 < σ < value`.
    Finite(f64),
}

impl StabilityThreshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            StabilityThreshold::Unconditional => None,
            StabilityThreshold::Finite(v) => Some(*v),
        }
    }

    pub fn is_exceeded_by(&self, sigma: f64) -> bool {
        match self {
            StabilityThreshold::Unconditional => false,
            StabilityThreshold::Finite(v) => sigma > *v,
        }
    }
}

/// Raw closed form `σ1(β̃) = √2/(4β̃)·(2 − β̃ + sqrt(β̃² + 12β̃ + 4))`, `β̃ > 0`.
pub fn sigma1_formula(tilde_beta: f64) -> f64 {
    SQRT_2 / (4.0 * tilde_beta)
        * (2.0 - tilde_beta + (tilde_beta * tilde_beta + 12.0 * tilde_beta + 4.0).sqrt())
}

/// Discriminant polynomial whose negativity characterizes stability:
/// `D(σ) = β̃²σ⁴ + √2σ(β̃²σ² − 4) + (β̃²/2 − 2)σ² − 4`.
pub fn stability_discriminant(tilde_beta: f64, sigma: f64) -> f64 {
    let b2 = tilde_beta * tilde_beta;
    b2 * sigma.powi(4)
        + SQRT_2 * sigma * (b2 * sigma * sigma - 4.0)
        + (b2 / 2.0 - 2.0) * sigma * sigma
        - 4.0
}

/// Corner-layer stability threshold for a single scaled mixed coefficient.
/// Uses `σ1(|β̃|)` (the `β̃ < 0` branch satisfies `σ3(β̃) = σ1(−β̃)`).
pub fn threshold_sigma1(tilde_beta: f64) -> Result<StabilityThreshold> {
    let b = tilde_beta.abs();
    if b == 0.0 {
        return Ok(StabilityThreshold::Unconditional);
    }
    if b > 1.0 {
        return Err(Error::domain(format!(
            "threshold_sigma1: |tilde_beta| = {b} exceeds 1"
        )));
    }
    Ok(StabilityThreshold::Finite(sigma1_formula(b)))
}

/// System threshold `σ1(max_j |β̃_j|)`.
pub fn system_threshold(coeffs: &CnlsCoefficients) -> StabilityThreshold {
    // |β̃_j| < 1 holds by the coefficient invariants, so this cannot fail.
    threshold_sigma1(coeffs.max_abs_tilde_beta()).expect("valid coefficients")
}

/// Rotation of the coordinate frame that removes the mixed derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    /// Transformed `αx` per component.
    pub alpha_x_t: Vec<f64>,
    /// Transformed `αy` per component.
    pub alpha_y_t: Vec<f64>,
    /// Residual mixed coefficients (all below the requested tolerance).
    pub mixed_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RemovalOutcome {
    Removable(TransformParams),
    NotRemovable,
}

fn transformed_coefficients(
    coeffs: &CnlsCoefficients,
    a: f64,
    b: f64,
    theta: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let mut axt = Vec::new();
    let mut ayt = Vec::new();
    let mut mixed = Vec::new();
    for j in 0..coeffs.n_components() {
        let (ax, ay, be) = (coeffs.alpha_x[j], coeffs.alpha_y[j], coeffs.beta[j]);
        axt.push(ax * a * a * c * c + ay * b * b * s * s - be * a * b / 2.0 * s2);
        ayt.push(ax * a * a * s * s + ay * b * b * c * c + be * a * b / 2.0 * s2);
        mixed.push((ax * a * a - ay * b * b) * s2 + be * a * b * c2);
    }
    (axt, ayt, mixed)
}

/// Attempts to remove every mixed derivative by one rotation/stretch of the
/// coordinates. `b` is normalized to 1 (only `a²/b²` is determined). The
/// returned parameters are verified: every transformed mixed coefficient is
/// below `tol` times the coefficient scale.
pub fn find_removal_transform(coeffs: &CnlsCoefficients, tol: f64) -> RemovalOutcome {
    let n = coeffs.n_components();
    let scale = coeffs
        .alpha_x
        .iter()
        .chain(coeffs.alpha_y.iter())
        .chain(coeffs.beta.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let small = tol * scale;

    let verify = |a: f64, b: f64, theta: f64| -> Option<TransformParams> {
        let (axt, ayt, mixed) = transformed_coefficients(coeffs, a, b, theta);
        if mixed.iter().all(|m| m.abs() < small * a.max(b).powi(2).max(1.0)) {
            Some(TransformParams {
                a,
                b,
                theta,
                alpha_x_t: axt,
                alpha_y_t: ayt,
                mixed_residual: mixed,
            })
        } else {
            None
        }
    };

    // No mixed derivatives at all: identity.
    if coeffs.beta.iter().all(|b| b.abs() < small) {
        if let Some(p) = verify(1.0, 1.0, 0.0) {
            return RemovalOutcome::Removable(p);
        }
    }

    // Equal ratios αx_j/αy_j: pick a so that αx a² = αy b², rotate by π/4.
    let ratios_equal = (1..n).all(|j| {
        let r0 = coeffs.alpha_x[0] / coeffs.alpha_y[0];
        let rj = coeffs.alpha_x[j] / coeffs.alpha_y[j];
        (r0 - rj).abs() < tol * r0.abs().max(rj.abs())
    });
    if ratios_equal {
        let a = (coeffs.alpha_y[0] / coeffs.alpha_x[0]).sqrt();
        if let Some(p) = verify(a, 1.0, FRAC_PI_4) {
            return RemovalOutcome::Removable(p);
        }
    }

    // General case: a²/b² from the first two components, θ from the zero
    // condition of the mixed coefficient, then verification on all j.
    let theta_for = |a: f64, b: f64| -> f64 {
        // choose a component with nonzero β for the branch
        let j = (0..n)
            .max_by(|&p, &q| {
                coeffs.beta[p]
                    .abs()
                    .partial_cmp(&coeffs.beta[q].abs())
                    .unwrap()
            })
            .unwrap();
        let num = -coeffs.beta[j] * a * b;
        let den = coeffs.alpha_x[j] * a * a - coeffs.alpha_y[j] * b * b;
        0.5 * num.atan2(den)
    };
    if n == 1 {
        let theta = theta_for(1.0, 1.0);
        if let Some(p) = verify(1.0, 1.0, theta) {
            return RemovalOutcome::Removable(p);
        }
        return RemovalOutcome::NotRemovable;
    }
    // a² (αx1/β1 − αx2/β2) = b² (αy1/β1 − αy2/β2) with b = 1
    let dx = coeffs.alpha_x[0] / coeffs.beta[0] - coeffs.alpha_x[1] / coeffs.beta[1];
    let dy = coeffs.alpha_y[0] / coeffs.beta[0] - coeffs.alpha_y[1] / coeffs.beta[1];
    let a2 = if dx.abs() < small && dy.abs() < small {
        1.0
    } else if dx.abs() < small || dy.abs() < small || dx.signum() != dy.signum() {
        return RemovalOutcome::NotRemovable;
    } else {
        dy / dx
    };
    let a = a2.sqrt();
    let theta = theta_for(a, 1.0);
    match verify(a, 1.0, theta) {
        Some(p) => RemovalOutcome::Removable(p),
        None => RemovalOutcome::NotRemovable,
    }
}
