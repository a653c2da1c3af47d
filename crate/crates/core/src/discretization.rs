//! 4th-order finite-difference discretization of the layered system:
//! 5-point stencils, sparse assembly of the stretched operators, zero
//! Dirichlet closure at the outer boundary and pointwise nonlinearity
//! evaluation.
//!
//! The squared and mixed stretched operators are assembled by composing the
//! first-order factors analytically — the product rule is applied to the
//! coefficient functions `cx(x)`, `gx(x)` (whose exact derivatives the
//! profile provides) so that second derivatives are discretized by the
//! 5-point second-derivative stencil. This keeps the stencil bandwidth at
//! two grid lines per direction and reduces the operator *exactly* to the
//! plain constant-coefficient discretization wherever σ ≡ 0; a discrete
//! matrix-product composition would do neither.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CnlsCoefficients, ComplexState, GridSpec};
use crate::pml::PmlCoefficientFields;
use crate::sparse::CsrMatrix;

type C = Complex64;

/// Centered 4th-order stencil weights (excluding the 1/(12d) factors).
pub const D1_WEIGHTS: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
pub const D2_WEIGHTS: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// First derivative of a grid line, zero ghost values outside.
pub fn apply_d1(line: &[C], d: f64) -> Result<Vec<C>> {
    stencil_line(line, d.recip() / 12.0, &D1_WEIGHTS)
}

/// Second derivative of a grid line, zero ghost values outside.
pub fn apply_d2(line: &[C], d: f64) -> Result<Vec<C>> {
    stencil_line(line, (d * d).recip() / 12.0, &D2_WEIGHTS)
}

fn stencil_line(line: &[C], scale: f64, w: &[f64; 5]) -> Result<Vec<C>> {
    let n = line.len();
    if n < 5 {
        return Err(Error::config("grid line shorter than the stencil width"));
    }
    let mut out = vec![C::default(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::default();
        for (k, &wk) in w.iter().enumerate() {
            let off = i as isize + k as isize - 2;
            if off >= 0 && (off as usize) < n {
                acc += wk * line[off as usize];
            }
        }
        *o = acc * scale;
    }
    Ok(out)
}

/// Sparse first-derivative operator along x over the flattened grid
/// (row-major in y, index `iy*nx + ix`), zero beyond the boundary.
pub fn d1x_operator(grid: &GridSpec) -> CsrMatrix {
    directional_operator(grid, true, grid.dx.recip() / 12.0, &D1_WEIGHTS)
}

pub fn d1y_operator(grid: &GridSpec) -> CsrMatrix {
    directional_operator(grid, false, grid.dy.recip() / 12.0, &D1_WEIGHTS)
}

pub fn d2x_operator(grid: &GridSpec) -> CsrMatrix {
    directional_operator(grid, true, (grid.dx * grid.dx).recip() / 12.0, &D2_WEIGHTS)
}

pub fn d2y_operator(grid: &GridSpec) -> CsrMatrix {
    directional_operator(grid, false, (grid.dy * grid.dy).recip() / 12.0, &D2_WEIGHTS)
}

fn directional_operator(grid: &GridSpec, along_x: bool, scale: f64, w: &[f64; 5]) -> CsrMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let n = nx * ny;
    let mut triplets = Vec::with_capacity(5 * n);
    for j in 0..ny {
        for i in 0..nx {
            let row = j * nx + i;
            for (k, &wk) in w.iter().enumerate() {
                if wk == 0.0 {
                    continue;
                }
                let off = k as isize - 2;
                let (ci, cj) = if along_x {
                    (i as isize + off, j as isize)
                } else {
                    (i as isize, j as isize + off)
                };
                if ci >= 0 && ci < nx as isize && cj >= 0 && cj < ny as isize {
                    let col = cj as usize * nx + ci as usize;
                    triplets.push((row, col, C::new(wk * scale, 0.0)));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Stretched first-order operator `∂x^PML = cx (D1x − e^{iρ} gx D1y)` for
/// component `j`.
pub fn dx_pml_operator(grid: &GridSpec, fields: &PmlCoefficientFields, j: usize) -> CsrMatrix {
    let e = C::from_polar(1.0, fields.rho);
    let mut coupled = d1y_operator(grid);
    let gx_grid = outer_diag(grid, &fields.gx[j].iter().map(|&g| C::new(g, 0.0)).collect::<Vec<_>>(), None);
    coupled.scale_rows(&gx_grid.iter().map(|&g| -e * g).collect::<Vec<_>>());
    let mut op = d1x_operator(grid).add_scaled(C::new(1.0, 0.0), &coupled);
    op.scale_rows(&outer_diag(grid, &fields.cx, None));
    op
}

pub fn dy_pml_operator(grid: &GridSpec, fields: &PmlCoefficientFields, j: usize) -> CsrMatrix {
    let e = C::from_polar(1.0, fields.rho);
    let mut coupled = d1x_operator(grid);
    let gy_grid = outer_diag(grid, &[], Some(&fields.gy[j].iter().map(|&g| C::new(g, 0.0)).collect::<Vec<_>>()));
    coupled.scale_rows(&gy_grid.iter().map(|&g| -e * g).collect::<Vec<_>>());
    let mut op = d1y_operator(grid).add_scaled(C::new(1.0, 0.0), &coupled);
    op.scale_rows(&outer_diag(grid, &[], Some(&fields.cy)));
    op
}

/// Grid diagonal from an x-line factor and/or a y-line factor
/// (`diag[j*nx+i] = fx[i]·fy[j]`, missing factors count as 1).
fn outer_diag(grid: &GridSpec, fx: &[C], fy: Option<&[C]>) -> Vec<C> {
    let one = C::new(1.0, 0.0);
    let mut v = Vec::with_capacity(grid.n_points());
    for j in 0..grid.ny {
        let fyj = fy.map_or(one, |f| f[j]);
        for i in 0..grid.nx {
            let fxi = if fx.is_empty() { one } else { fx[i] };
            v.push(fxi * fyj);
        }
    }
    v
}

/// Mask of outer-boundary grid points (zero Dirichlet rows).
pub fn boundary_mask(grid: &GridSpec) -> Vec<bool> {
    let mut mask = vec![false; grid.n_points()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if i == 0 || i == grid.nx - 1 || j == 0 || j == grid.ny - 1 {
                mask[j * grid.nx + i] = true;
            }
        }
    }
    mask
}

/// The four second-order stretched operators of one component.
pub struct PmlOperatorSet {
    /// `(∂x^PML)²`
    pub dxx: CsrMatrix,
    /// `(∂y^PML)²`
    pub dyy: CsrMatrix,
    /// `∂x^PML ∂y^PML`
    pub dxy: CsrMatrix,
    /// `∂y^PML ∂x^PML`
    pub dyx: CsrMatrix,
}

/// Assembles the squared and mixed stretched operators by analytic
/// composition (see module docs). With `e = e^{iρ}`:
///
/// `(∂x^PML)² = cx cx' ∂x − e cx (cx' gx + cx gx') ∂y + cx² ∂xx`
/// `            − 2 e cx² gx ∂x∂y + e² cx² gx² ∂yy`
///
/// `∂x^PML ∂y^PML = cx cy (1 + e² gx gy) ∂x∂y − e cx cy gy ∂xx`
/// `               − e cx gx cy ∂yy − e cx gx cy' ∂y`
/// `               + e² cx gx (cy' gy + cy gy') ∂x`
///
/// and mirrored forms for the y-first orderings.
pub fn pml_operator_set(
    grid: &GridSpec,
    fields: &PmlCoefficientFields,
    j: usize,
) -> Result<PmlOperatorSet> {
    if fields.cx.len() != grid.nx || fields.cy.len() != grid.ny {
        return Err(Error::config(
            "coefficient fields not built on the operator grid",
        ));
    }
    let e = C::from_polar(1.0, fields.rho);
    let e2 = e * e;
    let one = C::new(1.0, 0.0);
    let nx = grid.nx;
    let ny = grid.ny;

    let cplx = |v: &[f64]| -> Vec<C> { v.iter().map(|&x| C::new(x, 0.0)).collect() };
    let cx = fields.cx.clone();
    let cy = fields.cy.clone();
    let cxd = fields.cx_d.clone();
    let cyd = fields.cy_d.clone();
    let gx = cplx(&fields.gx[j]);
    let gy = cplx(&fields.gy[j]);
    let gxd = cplx(&fields.gx_d[j]);
    let gyd = cplx(&fields.gy_d[j]);

    let d1x = d1x_operator(grid);
    let d1y = d1y_operator(grid);
    let d2x = d2x_operator(grid);
    let d2y = d2y_operator(grid);
    // exact Kronecker product: D1x and D1y commute even with the zero-ghost
    // truncation, so one mixed base matrix serves both orderings
    let dxy_m = d1x.matmul(&d1y);

    let term = |base: &CsrMatrix, diag: &[C]| -> CsrMatrix {
        let mut m = base.clone();
        m.scale_rows(diag);
        m
    };
    let sum = |terms: Vec<CsrMatrix>| -> CsrMatrix {
        let mut it = terms.into_iter();
        let mut acc = it.next().expect("at least one term");
        for t in it {
            acc = acc.add_scaled(one, &t);
        }
        acc
    };

    // (∂x^PML)²: all weights are x-line functions
    let map_x = |f: &dyn Fn(usize) -> C| -> Vec<C> {
        outer_diag(grid, &(0..nx).map(f).collect::<Vec<_>>(), None)
    };
    let dxx = sum(vec![
        term(&d1x, &map_x(&|i| cx[i] * cxd[i])),
        term(&d1y, &map_x(&|i| -e * cx[i] * (cxd[i] * gx[i] + cx[i] * gxd[i]))),
        term(&d2x, &map_x(&|i| cx[i] * cx[i])),
        term(&dxy_m, &map_x(&|i| -2.0 * e * cx[i] * cx[i] * gx[i])),
        term(&d2y, &map_x(&|i| e2 * cx[i] * cx[i] * gx[i] * gx[i])),
    ]);

    let map_y = |f: &dyn Fn(usize) -> C| -> Vec<C> {
        outer_diag(grid, &[], Some(&(0..ny).map(f).collect::<Vec<_>>()))
    };
    let dyy = sum(vec![
        term(&d1y, &map_y(&|j2| cy[j2] * cyd[j2])),
        term(&d1x, &map_y(&|j2| -e * cy[j2] * (cyd[j2] * gy[j2] + cy[j2] * gyd[j2]))),
        term(&d2y, &map_y(&|j2| cy[j2] * cy[j2])),
        term(&dxy_m, &map_y(&|j2| -2.0 * e * cy[j2] * cy[j2] * gy[j2])),
        term(&d2x, &map_y(&|j2| e2 * cy[j2] * cy[j2] * gy[j2] * gy[j2])),
    ]);

    // mixed orderings: weights are separable products of x- and y-line
    // functions
    let map_xy = |fx: &dyn Fn(usize) -> C, fy: &dyn Fn(usize) -> C| -> Vec<C> {
        outer_diag(
            grid,
            &(0..nx).map(fx).collect::<Vec<_>>(),
            Some(&(0..ny).map(fy).collect::<Vec<_>>()),
        )
    };
    let dxy = sum(vec![
        term(&dxy_m, &map_xy(&|i| cx[i], &|j2| cy[j2])),
        term(&dxy_m, &map_xy(&|i| e2 * cx[i] * gx[i], &|j2| cy[j2] * gy[j2])),
        term(&d2x, &map_xy(&|i| -e * cx[i], &|j2| cy[j2] * gy[j2])),
        term(&d2y, &map_xy(&|i| -e * cx[i] * gx[i], &|j2| cy[j2])),
        term(&d1y, &map_xy(&|i| -e * cx[i] * gx[i], &|j2| cyd[j2])),
        term(&d1x, &map_xy(&|i| e2 * cx[i] * gx[i], &|j2| cyd[j2] * gy[j2] + cy[j2] * gyd[j2])),
    ]);
    let dyx = sum(vec![
        term(&dxy_m, &map_xy(&|i| cx[i], &|j2| cy[j2])),
        term(&dxy_m, &map_xy(&|i| cx[i] * gx[i] * e2, &|j2| cy[j2] * gy[j2])),
        term(&d2y, &map_xy(&|i| cx[i] * gx[i], &|j2| -e * cy[j2])),
        term(&d2x, &map_xy(&|i| cx[i], &|j2| -e * cy[j2] * gy[j2])),
        term(&d1x, &map_xy(&|i| cxd[i], &|j2| -e * cy[j2] * gy[j2])),
        term(&d1y, &map_xy(&|i| cxd[i] * gx[i] + cx[i] * gxd[i], &|j2| e2 * cy[j2] * gy[j2])),
    ]);

    Ok(PmlOperatorSet { dxx, dyy, dxy, dyx })
}

/// Spatial generator `L_j` of one component: the linear part evolves as
/// `∂t u_j = i L_j u_j` with
/// `L_j = αx (∂x^PML)² + αy (∂y^PML)² + β ½(∂x^PML ∂y^PML + ∂y^PML ∂x^PML)`
/// and zero Dirichlet rows at the outer boundary.
pub struct SparseOperator {
    pub component: usize,
    pub matrix: CsrMatrix,
}

pub fn assemble_linear_operator(
    coeffs: &CnlsCoefficients,
    j: usize,
    fields: &PmlCoefficientFields,
    grid: &GridSpec,
) -> Result<SparseOperator> {
    let set = pml_operator_set(grid, fields, j)?;
    let one = C::new(1.0, 0.0);
    let half_beta = C::new(0.5 * coeffs.beta[j], 0.0);
    let mut ax = set.dxx;
    ax.scale(C::new(coeffs.alpha_x[j], 0.0));
    let mut ay = set.dyy;
    ay.scale(C::new(coeffs.alpha_y[j], 0.0));
    let mut l = ax
        .add_scaled(one, &ay)
        .add_scaled(half_beta, &set.dxy)
        .add_scaled(half_beta, &set.dyx);
    l.zero_rows(&boundary_mask(grid));
    Ok(SparseOperator {
        component: j,
        matrix: l,
    })
}

/// Pointwise nonlinearity `Γ N_j(u)`. Two coupled components use the
/// cubic–quintic coupled form
/// `N_j = |u_j|²u_j + 2|u_k|²u_j + u_k² ū_j + ε_q |u_j|⁴ u_j` (k = 3−j);
/// a single component reduces to the scalar cubic–quintic law.
pub fn evaluate_nonlinearity(state: &ComplexState, coeffs: &CnlsCoefficients) -> Result<ComplexState> {
    let mut out = ComplexState::zeros(state.layout, state.grid, state.n_components);
    if coeffs.gamma == 0.0 {
        return Ok(out);
    }
    let gamma = coeffs.gamma;
    let eps_q = coeffs.eps_q;
    let n = state.grid.n_points();
    match state.n_components {
        1 => {
            let u = state.component(0);
            let o = out.component_mut(0);
            for i in 0..n {
                let a2 = u[i].norm_sqr();
                o[i] = gamma * (a2 + eps_q * a2 * a2) * u[i];
            }
        }
        2 => {
            for j in 0..2 {
                let k = 1 - j;
                for i in 0..n {
                    let uj = state.component(j)[i];
                    let uk = state.component(k)[i];
                    let aj2 = uj.norm_sqr();
                    let ak2 = uk.norm_sqr();
                    let v = (aj2 + 2.0 * ak2 + eps_q * aj2 * aj2) * uj + uk * uk * uj.conj();
                    out.component_mut(j)[i] = gamma * v;
                }
            }
        }
        m => {
            return Err(Error::config(format!(
                "cubic-quintic coupled nonlinearity defined for 1 or 2 components, got {m}"
            )))
        }
    }
    Ok(out)
}
