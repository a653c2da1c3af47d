//! PDE system definition, domain geometry, grid and state containers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pml::PmlParameters;

/// Coefficients of the coupled system
/// `i ∂t u_j + (αx_j ∂x² + αy_j ∂y² + β_j ∂x∂y) u_j + Γ N_j(u) = 0`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CnlsCoefficients {
    pub alpha_x: Vec<f64>,
    pub alpha_y: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub eps_q: f64,
}

impl CnlsCoefficients {
    /// Validated constructor. Enforces ellipticity `αx_j αy_j > β_j²`,
    /// equal signs of `αx_j` and `αy_j`, and `|β̃_j| < 1`.
    // negated comparisons reject NaN along with the out-of-range values
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(
        alpha_x: Vec<f64>,
        alpha_y: Vec<f64>,
        beta: Vec<f64>,
        gamma: f64,
        eps_q: f64,
    ) -> Result<Self> {
        if alpha_x.is_empty() || alpha_x.len() != alpha_y.len() || alpha_x.len() != beta.len() {
            return Err(Error::config(
                "coefficient vectors must be non-empty and of equal length",
            ));
        }
        for j in 0..alpha_x.len() {
            let (ax, ay, b) = (alpha_x[j], alpha_y[j], beta[j]);
            if !(ax * ay > b * b) {
                return Err(Error::config(format!(
                    "component {j}: ellipticity alpha_x*alpha_y > beta^2 violated \
                     ({ax}*{ay} <= {b}^2)"
                )));
            }
            if ax.signum() != ay.signum() {
                return Err(Error::config(format!(
                    "component {j}: alpha_x and alpha_y must have the same sign"
                )));
            }
        }
        let c = Self {
            alpha_x,
            alpha_y,
            beta,
            gamma,
            eps_q,
        };
        debug_assert!(c.tilde_betas().iter().all(|tb| tb.abs() < 1.0));
        Ok(c)
    }

    /// Single linear component, `Γ = 0`.
    pub fn scalar_linear(alpha_x: f64, alpha_y: f64, beta: f64) -> Result<Self> {
        Self::new(vec![alpha_x], vec![alpha_y], vec![beta], 0.0, 0.0)
    }

    pub fn n_components(&self) -> usize {
        self.alpha_x.len()
    }

    /// Scaled mixed-derivative coefficient `β̃_j = β_j / sqrt(|αx_j||αy_j|)`.
    pub fn tilde_beta(&self, j: usize) -> f64 {
        self.beta[j] / (self.alpha_x[j].abs() * self.alpha_y[j].abs()).sqrt()
    }

    pub fn tilde_betas(&self) -> Vec<f64> {
        (0..self.n_components()).map(|j| self.tilde_beta(j)).collect()
    }

    pub fn max_abs_tilde_beta(&self) -> f64 {
        self.tilde_betas()
            .iter()
            .fold(0.0f64, |m, tb| m.max(tb.abs()))
    }
}

/// Physical domain `Ω = [0,Lx]×[0,Ly]` with layer widths `δx, δy`;
/// the computational box is `[-δx, Lx+δx] × [-δy, Ly+δy]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DomainLayout {
    pub lx: f64,
    pub ly: f64,
    pub delta_x: f64,
    pub delta_y: f64,
}

impl DomainLayout {
    pub fn new(lx: f64, ly: f64, delta_x: f64, delta_y: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::config("Lx and Ly must be positive"));
        }
        if delta_x < 0.0 || delta_y < 0.0 {
            return Err(Error::config("layer widths must be non-negative"));
        }
        Ok(Self {
            lx,
            ly,
            delta_x,
            delta_y,
        })
    }

    /// Domain without layers (used for restricted states).
    pub fn physical_only(&self) -> Self {
        Self {
            lx: self.lx,
            ly: self.ly,
            delta_x: 0.0,
            delta_y: 0.0,
        }
    }
}

/// Uniform grid on the full computational box, aligned so that `x=0`, `x=Lx`,
/// `y=0` and `y=Ly` fall on grid points exactly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Index of x=0 (number of layer points on the left).
    pub ix0: usize,
    /// Index of x=Lx.
    pub ix1: usize,
    pub iy0: usize,
    pub iy1: usize,
}

impl GridSpec {
    /// Builds a grid from a requested mesh width. `dx` is snapped so that an
    /// integer number of cells spans `[0,Lx]`; the layer width is rounded up
    /// to the nearest multiple of the snapped `dx`. Returns the (possibly
    /// adjusted) layout together with the grid.
    pub fn build(layout: &DomainLayout, dx_req: f64, dy_req: f64) -> Result<(DomainLayout, Self)> {
        if !(dx_req > 0.0 && dy_req > 0.0) {
            return Err(Error::config("mesh widths must be positive"));
        }
        let cells_x = (layout.lx / dx_req).round().max(1.0) as usize;
        let cells_y = (layout.ly / dy_req).round().max(1.0) as usize;
        let dx = layout.lx / cells_x as f64;
        let dy = layout.ly / cells_y as f64;
        let nlx = (layout.delta_x / dx - 1e-9).ceil().max(0.0) as usize;
        let nly = (layout.delta_y / dy - 1e-9).ceil().max(0.0) as usize;
        let adjusted = DomainLayout {
            lx: layout.lx,
            ly: layout.ly,
            delta_x: nlx as f64 * dx,
            delta_y: nly as f64 * dy,
        };
        let nx = cells_x + 2 * nlx + 1;
        let ny = cells_y + 2 * nly + 1;
        if nx < 9 || ny < 9 {
            return Err(Error::config(format!(
                "grid too coarse: nx={nx}, ny={ny} (need at least 9 points per direction)"
            )));
        }
        let grid = GridSpec {
            nx,
            ny,
            dx,
            dy,
            ix0: nlx,
            ix1: nlx + cells_x,
            iy0: nly,
            iy1: nly + cells_y,
        };
        Ok((adjusted, grid))
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.ix0 as f64) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - self.iy0 as f64) * self.dy
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    pub fn n_points(&self) -> usize {
        self.nx * self.ny
    }
}

/// N-component complex field on the full computational grid.
/// Storage is per component, then row-major in y (index `iy*nx + ix`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexState {
    pub layout: DomainLayout,
    pub grid: GridSpec,
    pub n_components: usize,
    pub data: Vec<Complex64>,
}

impl ComplexState {
    pub fn zeros(layout: DomainLayout, grid: GridSpec, n_components: usize) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); n_components * grid.n_points()];
        Self {
            layout,
            grid,
            n_components,
            data,
        }
    }

    pub fn from_fn(
        layout: DomainLayout,
        grid: GridSpec,
        n_components: usize,
        mut f: impl FnMut(usize, f64, f64) -> Complex64,
    ) -> Self {
        let mut s = Self::zeros(layout, grid, n_components);
        for c in 0..n_components {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let v = f(c, grid.x(i), grid.y(j));
                    s.data[c * grid.n_points() + j * grid.nx + i] = v;
                }
            }
        }
        s
    }

    #[inline]
    pub fn idx(&self, c: usize, i: usize, j: usize) -> usize {
        c * self.grid.n_points() + j * self.grid.nx + i
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> Complex64 {
        self.data[self.idx(c, i, j)]
    }

    /// Per-component view of the flat storage.
    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.n_points();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.n_points();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// Restriction of a state to the physical domain `Ω = [0,Lx]×[0,Ly]`.
/// Values are copied bit-identically; relies on the grid alignment invariant.
pub fn restrict_to_physical(state: &ComplexState) -> Result<ComplexState> {
    let g = &state.grid;
    if g.ix1 >= g.nx || g.iy1 >= g.ny {
        return Err(Error::config("grid not aligned with physical domain"));
    }
    let nx_o = g.ix1 - g.ix0 + 1;
    let ny_o = g.iy1 - g.iy0 + 1;
    let layout = state.layout.physical_only();
    let grid = GridSpec {
        nx: nx_o,
        ny: ny_o,
        dx: g.dx,
        dy: g.dy,
        ix0: 0,
        ix1: nx_o - 1,
        iy0: 0,
        iy1: ny_o - 1,
    };
    let mut out = ComplexState::zeros(layout, grid, state.n_components);
    for c in 0..state.n_components {
        for j in 0..ny_o {
            for i in 0..nx_o {
                let v = state.get(c, g.ix0 + i, g.iy0 + j);
                let k = out.idx(c, i, j);
                out.data[k] = v;
            }
        }
    }
    Ok(out)
}

/// Discrete L² norm `sqrt(Σ |u|² dx dy)` over all components (rectangle rule).
pub fn l2_norm(state: &ComplexState) -> f64 {
    let w = state.grid.dx * state.grid.dy;
    let s: f64 = state.data.iter().map(|z| z.norm_sqr()).sum();
    (s * w).sqrt()
}

/// Initial data selection for a scenario run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `amplitude · e^{-((x-cx)²/wx² + (y-cy)²/wy²)}` in every component.
    Gaussian {
        center: (f64, f64),
        amplitude: f64,
        widths: (f64, f64),
    },
    /// Ground state at the domain center plus four perturbing Gaussians.
    SolitonPlusGaussians { groundstate: String },
    /// Ground state multiplied by a plane wave `e^{i(kx(x-Lx/2)+ky(y-Ly/2))}`.
    KickedSoliton {
        groundstate: String,
        wavevector: (f64, f64),
    },
    /// Initial field loaded from a snapshot file.
    File { path: String },
}

/// Full description of one simulation run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub coefficients: CnlsCoefficients,
    pub layout: DomainLayout,
    /// Requested mesh widths; snapped by [`GridSpec::build`].
    pub dx: f64,
    pub dy: f64,
    pub pml: PmlParameters,
    pub dt: f64,
    pub t_end: f64,
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub error_times: Vec<f64>,
}

impl ScenarioConfig {
    // negated comparisons reject NaN along with the out-of-range values
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if self.t_end < self.dt {
            return Err(Error::config("t_end must be at least dt"));
        }
        for &t in self.snapshot_times.iter().chain(self.error_times.iter()) {
            if t < 0.0 || t > self.t_end + 1e-12 {
                return Err(Error::config(format!(
                    "snapshot/error time {t} outside [0, t_end]"
                )));
            }
        }
        self.pml.validate()?;
        Ok(())
    }
}
