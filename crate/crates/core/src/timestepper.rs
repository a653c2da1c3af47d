//! IMEX additive Runge–Kutta time integration: the stiff linear part is
//! treated by the singly diagonally implicit half of ARK4(3)6L[2]SA and the
//! nonlinearity by its explicit companion. Stage systems share a single
//! factorization per component.

use num_complex::Complex64;

use crate::discretization::{evaluate_nonlinearity, SparseOperator};
use crate::error::{Error, Result};
use crate::model::{l2_norm, restrict_to_physical, CnlsCoefficients, ComplexState};
use crate::sparse::{bicgstab, CsrMatrix, DenseLu, Ilu0, DENSE_DIRECT_MAX};

type C = Complex64;

/// Additive Runge–Kutta pair: an ESDIRK implicit half and an ERK explicit
/// half sharing the abscissae and weights, with an embedded 3rd-order row.
#[derive(Debug, Clone)]
pub struct ArkTableau {
    pub stages: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub b_hat: Vec<f64>,
    /// Lower-triangular including the diagonal (γ on stages 1..s−1).
    pub a_implicit: Vec<Vec<f64>>,
    /// Strictly lower-triangular.
    pub a_explicit: Vec<Vec<f64>>,
}

impl ArkTableau {
    /// Kennedy–Carpenter ARK4(3)6L[2]SA, 4th order with a 3rd-order
    /// embedding, stiffly accurate, γ = 1/4.
    pub fn ark436l2sa() -> Self {
        let c = vec![0.0, 0.5, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0];
        let b = vec![
            82889.0 / 524892.0,
            0.0,
            15625.0 / 83664.0,
            69875.0 / 102672.0,
            -2260.0 / 8211.0,
            0.25,
        ];
        let b_hat = vec![
            4586570599.0 / 29645900160.0,
            0.0,
            178811875.0 / 945068544.0,
            814220225.0 / 1159782912.0,
            -3700637.0 / 11593932.0,
            61727.0 / 225920.0,
        ];
        let a_implicit = vec![
            vec![],
            vec![0.25, 0.25],
            vec![8611.0 / 62500.0, -1743.0 / 31250.0, 0.25],
            vec![
                5012029.0 / 34652500.0,
                -654441.0 / 2922500.0,
                174375.0 / 388108.0,
                0.25,
            ],
            vec![
                15267082809.0 / 155376265600.0,
                -71443401.0 / 120774400.0,
                730878875.0 / 902184768.0,
                2285395.0 / 8070912.0,
                0.25,
            ],
            b.clone(),
        ];
        let a_explicit = vec![
            vec![],
            vec![0.5],
            vec![13861.0 / 62500.0, 6889.0 / 62500.0],
            vec![
                -116923316275.0 / 2393684061468.0,
                -2731218467317.0 / 15368042101831.0,
                9408046702089.0 / 11113171139209.0,
            ],
            vec![
                -451086348788.0 / 2902428689909.0,
                -2682348792572.0 / 7519795681897.0,
                12662868775082.0 / 11960479115383.0,
                3355817975965.0 / 11060851509271.0,
            ],
            vec![
                647845179188.0 / 3216320057751.0,
                73281519250.0 / 8382639484533.0,
                552539513391.0 / 3454668386233.0,
                3354512671639.0 / 8306763924573.0,
                4040.0 / 17871.0,
            ],
        ];
        let t = Self {
            stages: 6,
            c,
            b,
            b_hat,
            a_implicit,
            a_explicit,
        };
        t.check_consistency()
            .expect("built-in tableau satisfies its order conditions");
        t
    }

    /// Basic consistency and order conditions, checked to 1e-12.
    pub fn check_consistency(&self) -> Result<()> {
        let tol = 1e-12;
        let close = |a: f64, b: f64| (a - b).abs() < tol;
        let s = self.stages;
        if self.c.len() != s || self.b.len() != s || self.b_hat.len() != s {
            return Err(Error::config("tableau arrays must have one entry per stage"));
        }
        for i in 0..s {
            let si: f64 = self.a_implicit[i].iter().sum();
            let se: f64 = self.a_explicit[i].iter().sum();
            if !close(si, self.c[i]) || !close(se, self.c[i]) {
                return Err(Error::numerical(format!(
                    "tableau row {i} does not sum to its abscissa"
                )));
            }
        }
        let weight = |w: &[f64], p: i32| -> f64 {
            w.iter().zip(&self.c).map(|(wi, ci)| wi * ci.powi(p)).sum()
        };
        for (w, name, orders) in [
            (&self.b, "b", [1.0, 0.5, 1.0 / 3.0, 0.25].as_slice()),
            (&self.b_hat, "b_hat", [1.0, 0.5, 1.0 / 3.0].as_slice()),
        ] {
            for (p, want) in orders.iter().enumerate() {
                if !close(weight(w, p as i32), *want) {
                    return Err(Error::numerical(format!(
                        "tableau weights {name} fail the order-{} condition",
                        p + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.a_implicit[1][1]
    }
}

/// Factorized solver for the per-component stage systems
/// `(I − i dt γ L_j) v = r`.
pub enum StageSolver {
    Direct(Vec<DenseLu>),
    Iterative {
        matrices: Vec<CsrMatrix>,
        preconditioners: Vec<Ilu0>,
        rel_tol: f64,
        max_iter: usize,
    },
}

/// Preferred stage-solver backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Dense direct for small grids, preconditioned Krylov otherwise.
    #[default]
    Auto,
    Direct,
    Iterative,
}

impl StageSolver {
    pub fn build(
        ops: &[SparseOperator],
        dt: f64,
        gamma: f64,
        kind: SolverKind,
    ) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::config("no component operators supplied"));
        }
        let n = ops[0].matrix.n_rows;
        let use_direct = match kind {
            SolverKind::Direct => true,
            SolverKind::Iterative => false,
            SolverKind::Auto => n <= DENSE_DIRECT_MAX,
        };
        let stage_matrix = |op: &SparseOperator| -> CsrMatrix {
            // I − i dt γ L
            CsrMatrix::identity(n).add_scaled(C::new(0.0, -dt * gamma), &op.matrix)
        };
        if use_direct {
            let mut lus = Vec::with_capacity(ops.len());
            for op in ops {
                lus.push(DenseLu::new(&stage_matrix(op))?);
            }
            Ok(StageSolver::Direct(lus))
        } else {
            let mut matrices = Vec::with_capacity(ops.len());
            let mut preconditioners = Vec::with_capacity(ops.len());
            for op in ops {
                let m = stage_matrix(op);
                preconditioners.push(Ilu0::new(&m)?);
                matrices.push(m);
            }
            Ok(StageSolver::Iterative {
                matrices,
                preconditioners,
                rel_tol: 1e-10,
                max_iter: 500,
            })
        }
    }

    /// Solves the stage system for one component, with `x` as the initial
    /// guess on the iterative path.
    pub fn solve(&self, component: usize, rhs: &[C], x: &mut [C]) -> Result<()> {
        match self {
            StageSolver::Direct(lus) => {
                lus[component].solve(rhs, x);
                Ok(())
            }
            StageSolver::Iterative {
                matrices,
                preconditioners,
                rel_tol,
                max_iter,
            } => {
                bicgstab(
                    &matrices[component],
                    &preconditioners[component],
                    rhs,
                    x,
                    *rel_tol,
                    *max_iter,
                )?;
                Ok(())
            }
        }
    }
}

/// One ARK step of `∂t u_j = i L_j u_j + i Γ N_j(u)`. Returns the advanced
/// state and the embedded local error estimate (max-abs over the grid).
pub fn ark_step(
    u: &ComplexState,
    dt: f64,
    ops: &[SparseOperator],
    coeffs: &CnlsCoefficients,
    tableau: &ArkTableau,
    solver: &StageSolver,
) -> Result<(ComplexState, f64)> {
    let nc = u.n_components;
    if ops.len() != nc {
        return Err(Error::config("one linear operator required per component"));
    }
    let np = u.grid.n_points();
    let s = tableau.stages;
    let i_unit = C::new(0.0, 1.0);

    // f_impl[stage][component*np + k] = i L u ; f_expl likewise for i Γ N(u)
    let mut f_impl: Vec<Vec<C>> = Vec::with_capacity(s);
    let mut f_expl: Vec<Vec<C>> = Vec::with_capacity(s);
    let mut stage = u.clone();

    for i in 0..s {
        if i > 0 {
            // assemble the known part of the stage right-hand side
            for c in 0..nc {
                let rhs_c = {
                    let mut r = u.component(c).to_vec();
                    for l in 0..i {
                        let ai = tableau.a_implicit[i][l];
                        let ae = tableau.a_explicit[i][l];
                        let fi = &f_impl[l][c * np..(c + 1) * np];
                        let fe = &f_expl[l][c * np..(c + 1) * np];
                        for k in 0..np {
                            r[k] += dt * (ai * fi[k] + ae * fe[k]);
                        }
                    }
                    r
                };
                // previous stage value as the Krylov initial guess
                let guess = stage.component_mut(c);
                solver.solve(c, &rhs_c, guess)?;
            }
        }
        if !stage.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite values in stage {i}; the step is unstable"
            )));
        }
        let mut fi = vec![C::default(); nc * np];
        for c in 0..nc {
            let lv = ops[c].matrix.apply(stage.component(c));
            for k in 0..np {
                fi[c * np + k] = i_unit * lv[k];
            }
        }
        let nl = evaluate_nonlinearity(&stage, coeffs)?;
        let fe: Vec<C> = nl.data.iter().map(|z| i_unit * z).collect();
        f_impl.push(fi);
        f_expl.push(fe);
    }

    let mut next = u.clone();
    let mut err = 0.0f64;
    for c in 0..nc {
        for k in 0..np {
            let mut acc = C::default();
            let mut diff = C::default();
            for i in 0..s {
                let f = f_impl[i][c * np + k] + f_expl[i][c * np + k];
                acc += tableau.b[i] * f;
                diff += (tableau.b[i] - tableau.b_hat[i]) * f;
            }
            next.component_mut(c)[k] = u.component(c)[k] + dt * acc;
            err = err.max((dt * diff).norm());
        }
    }
    Ok((next, err))
}

/// Diagnostics sampled during integration.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// L² norm restricted to the physical domain Ω.
    pub l2_omega: f64,
    pub max_abs: f64,
}

#[derive(Debug)]
pub struct IntegrationOutput {
    pub final_state: ComplexState,
    pub final_time: f64,
    pub steps: usize,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub snapshots: Vec<(f64, ComplexState)>,
}

/// Fixed-step integration to `t_end` with diagnostics every
/// `diag_every` steps and states captured at the requested snapshot times
/// (matched to the nearest step boundary).
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    u0: &ComplexState,
    ops: &[SparseOperator],
    coeffs: &CnlsCoefficients,
    dt: f64,
    t_end: f64,
    tableau: &ArkTableau,
    solver: &StageSolver,
    snapshot_times: &[f64],
    diag_every: usize,
) -> Result<IntegrationOutput> {
    if dt <= 0.0 || t_end < 0.0 {
        return Err(Error::config("time step and horizon must be positive"));
    }
    let n_steps = (t_end / dt).round().max(0.0) as usize;
    let snap_steps: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| (t / dt).round() as usize)
        .collect();

    let diag_of = |t: f64, u: &ComplexState| -> Result<DiagnosticsRow> {
        let omega = restrict_to_physical(u)?;
        Ok(DiagnosticsRow {
            t,
            l2_omega: l2_norm(&omega),
            max_abs: u.max_abs(),
        })
    };

    let mut u = u0.clone();
    let mut diagnostics = vec![diag_of(0.0, &u)?];
    let mut snapshots = Vec::new();
    for (pos, &sn) in snap_steps.iter().enumerate() {
        if sn == 0 {
            snapshots.push((snapshot_times[pos], u.clone()));
        }
    }

    for step in 1..=n_steps {
        let (next, _err) = ark_step(&u, dt, ops, coeffs, tableau, solver)?;
        u = next;
        let t = step as f64 * dt;
        if !u.is_finite() {
            return Err(Error::numerical(format!(
                "solution lost finiteness at t = {t:.6}"
            )));
        }
        if step % diag_every.max(1) == 0 || step == n_steps {
            diagnostics.push(diag_of(t, &u)?);
        }
        for (pos, &sn) in snap_steps.iter().enumerate() {
            if sn == step {
                snapshots.push((snapshot_times[pos], u.clone()));
            }
        }
    }

    Ok(IntegrationOutput {
        final_state: u,
        final_time: n_steps as f64 * dt,
        steps: n_steps,
        diagnostics,
        snapshots,
    })
}
