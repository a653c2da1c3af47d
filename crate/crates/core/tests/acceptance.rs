//! Acceptance gate: one test per criterion, each emitting a single
//! `[PASS]`/`[FAIL]` line. The desk-scale tiers run by default; the
//! published-resolution tiers are `#[ignore]`d because they take hours on a
//! laptop (`cargo test --test acceptance -- --ignored` runs them).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use cnls_pml::analysis::{
    corner_re_nu_equal_sigma, modal_lambdas, pml_shifted_lambda, side_symbol,
    stability_discriminant, threshold_sigma1,
};
use cnls_pml::discretization::{
    apply_d2, assemble_linear_operator, boundary_mask, d2x_operator, d2y_operator,
    evaluate_nonlinearity, pml_operator_set,
};
use cnls_pml::experiments::{
    apply_scale, layer_width_sweep, relative_error, run_simulation, scenario, snapshot_at,
    sweep_width_fractions, ReferencePolicy,
};
use cnls_pml::model::{
    restrict_to_physical, CnlsCoefficients, ComplexState, DomainLayout, GridSpec,
    InitialCondition, ScenarioConfig,
};
use cnls_pml::pml::{
    build_coefficient_fields, build_profiles, AbsorptionProfile, PmlParameters,
};
use cnls_pml::reference::{continue_ground_state, shoot_radial_ground_state, spectral_evolve};
use cnls_pml::timestepper::{integrate, ArkTableau, SolverKind, StageSolver};

type C = Complex64;

/// Grid coarsening factors for the desk tiers (≈180² linear, ≈150²
/// nonlinear runs).
const LIN_DESK: f64 = 180.0 / 350.0;
const NL_DESK: f64 = 150.0 / 250.0;
const PULSE_DESK: f64 = 150.0 / 180.0;

fn report(criterion: u32, what: &str, ok: bool) {
    println!(
        "[{}] criterion {criterion}: {what}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {what}");
}

fn desk_scenario(name: &str, scale: f64) -> ScenarioConfig {
    let mut c = scenario(name).expect("catalog scenario");
    apply_scale(&mut c, scale).expect("valid scale");
    c
}

fn monotone_decreasing(rows: &[(f64, f64)]) -> bool {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).all(|w| w[1].1 < w[0].1)
}

/// Largest field magnitude over the outer half of the absorbing layers.
/// Near the interface σ is still small and the (perfectly matched) layer
/// solution coincides with the physical one, so instability growth is only
/// visible at depth.
fn layer_max(state: &ComplexState) -> f64 {
    let g = state.grid;
    let x_deep = |i: usize| i < g.ix0 / 2 || i > g.ix1 + (g.nx - 1 - g.ix1) / 2;
    let y_deep = |j: usize| j < g.iy0 / 2 || j > g.iy1 + (g.ny - 1 - g.iy1) / 2;
    let mut m = 0.0f64;
    for c in 0..state.n_components {
        let f = state.component(c);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if x_deep(i) || y_deep(j) {
                    m = m.max(f[j * g.nx + i].norm());
                }
            }
        }
    }
    m
}

// ---------------------------------------------------------------------------
// 1. Stability thresholds
// ---------------------------------------------------------------------------

#[test]
fn c01_stability_thresholds() {
    let s05 = threshold_sigma1(0.5).unwrap().value().unwrap();
    let s02 = threshold_sigma1(0.2).unwrap().value().unwrap();
    let mut ok = (3.315..=3.335).contains(&s05) && (7.66..=7.68).contains(&s02);

    // the closed form is a root of the discriminant
    for tb in [0.1, 0.2, 0.5, 0.8, 1.0] {
        let s = threshold_sigma1(tb).unwrap().value().unwrap();
        let b2 = tb * tb;
        let scale = b2 * s.powi(4)
            + SQRT_2 * s * (b2 * s * s + 4.0)
            + (b2 / 2.0 + 2.0) * s * s
            + 4.0;
        ok &= stability_discriminant(tb, s).abs() <= 1e-10 * scale;
    }

    // dense-sampling sign test of the equal-σ corner symbol around the
    // threshold
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let tb: f64 = rng.gen_range(0.05..0.95);
        let s1 = threshold_sigma1(tb).unwrap().value().unwrap();
        let max_re = |sigma: f64| -> f64 {
            (0..720)
                .map(|a| {
                    let th = a as f64 * PI / 360.0;
                    corner_re_nu_equal_sigma(tb, sigma, th.cos(), th.sin())
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        ok &= max_re(0.98 * s1) <= 1e-12;
        ok &= max_re(1.02 * s1) > 0.0;
    }
    report(
        1,
        "sigma1(0.5) ~ 3.325, sigma1(0.2) ~ 7.67, discriminant root, corner sign test",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 2. Side-layer unconditional stability
// ---------------------------------------------------------------------------

#[test]
fn c02_side_layer_unconditional() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut ok = true;
    for _ in 0..100_000 {
        let sigma: f64 = rng.gen_range(0.0..20.0);
        let tb: f64 = rng.gen_range(-1.0..1.0);
        let kx: f64 = rng.gen_range(-10.0..10.0);
        let ky: f64 = rng.gen_range(-10.0..10.0);
        let re = side_symbol(tb, sigma, FRAC_PI_4, kx, ky).nu.re;
        let k2 = kx * kx + ky * ky;
        ok &= re <= 1e-12 * k2.max(1.0);
        // strict decay away from the degenerate set {2kx + b ky = 0} u {s = 0}
        let comb = 2.0 * kx + tb * ky;
        if sigma > 0.01 && comb * comb > 0.01 * k2.max(1.0) {
            ok &= re < 0.0;
        }
        if !ok {
            break;
        }
    }
    report(
        2,
        "Re(nu_side) <= 0 on 1e5 samples, zero only on {2kx + b ky = 0} or sigma = 0",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 3. Modal damping inside the layer
// ---------------------------------------------------------------------------

#[test]
fn c03_modal_damping() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ok = true;
    let mut checked = 0u32;
    while checked < 10_000 {
        let ax: f64 = rng.gen_range(0.5..2.0);
        let ay: f64 = rng.gen_range(0.5..2.0);
        let beta: f64 = rng.gen_range(-0.9..0.9) * (ax * ay).sqrt();
        let s = C::new(rng.gen_range(0.0..5.0), rng.gen_range(-5.0..5.0));
        let ky: f64 = rng.gen_range(-5.0..5.0);
        let sigma: f64 = rng.gen_range(0.01..10.0);
        let (l1, l2) = modal_lambdas(ax, ay, beta, s, ky).unwrap();
        let center = C::new(0.0, beta * ky / (2.0 * ax));
        // strict inequalities degenerate exactly at the rotation center
        if (l1 - center).norm() < 1e-9 || (l2 - center).norm() < 1e-9 {
            continue;
        }
        let t1 = pml_shifted_lambda(l1, ax, beta, ky, FRAC_PI_4, sigma);
        let t2 = pml_shifted_lambda(l2, ax, beta, ky, FRAC_PI_4, sigma);
        ok &= t1.re > 0.0 && t2.re < 0.0;
        checked += 1;
        if !ok {
            break;
        }
    }
    report(
        3,
        "Re(lambda~2) < 0 and Re(lambda~1) > 0 on 1e4 samples away from the rotation center",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 4. Discretization order and operator structure
// ---------------------------------------------------------------------------

#[test]
fn c04_discretization_structure() {
    // observed order of apply_d2 on sin over three refinements
    let err = |n: usize| -> f64 {
        let d = 2.0 * PI / n as f64;
        let line: Vec<C> = (0..=n).map(|i| C::new((i as f64 * d).sin(), 0.0)).collect();
        let d2 = apply_d2(&line, d).unwrap();
        (2..n - 1)
            .map(|i| (d2[i].re + (i as f64 * d).sin()).abs())
            .fold(0.0f64, f64::max)
    };
    let (e1, e2, e3) = (err(64), err(128), err(256));
    let p12 = (e1 / e2).log2();
    let p23 = (e2 / e3).log2();
    let mut ok = (3.7..=4.3).contains(&p12) && (3.7..=4.3).contains(&p23);

    // exact reduction at sigma = 0, beta = 0
    let layout = DomainLayout::new(2.0, 2.0, 0.0, 0.0).unwrap();
    let (layout, grid) = GridSpec::build(&layout, 2.0 / 30.0, 2.0 / 30.0).unwrap();
    let coeffs = CnlsCoefficients::scalar_linear(0.75, 1.25, 0.0).unwrap();
    let profile =
        build_profiles(&layout, &grid, &PmlParameters::with_magnitudes(0.0, 0.0).unwrap()).unwrap();
    let fields = build_coefficient_fields(&profile, &coeffs, FRAC_PI_4);
    let op = assemble_linear_operator(&coeffs, 0, &fields, &grid).unwrap();
    let mut direct = d2x_operator(&grid);
    direct.scale(C::new(0.75, 0.0));
    let mut d2y = d2y_operator(&grid);
    d2y.scale(C::new(1.25, 0.0));
    let mut direct = direct.add_scaled(C::new(1.0, 0.0), &d2y);
    direct.zero_rows(&boundary_mask(&grid));
    let x: Vec<C> = (0..grid.n_points())
        .map(|i| C::new((i as f64 * 0.311).sin(), (i as f64 * 0.077).cos()))
        .collect();
    let a = op.matrix.apply(&x);
    let b = direct.apply(&x);
    let scale = b.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    ok &= a
        .iter()
        .zip(&b)
        .all(|(u, v)| (u - v).norm() <= 1e-13 * scale);

    // constant-sigma mixed orderings commute
    let layout2 = DomainLayout::new(2.0, 2.0, 0.5, 0.5).unwrap();
    let (layout2, grid2) = GridSpec::build(&layout2, 0.1, 0.1).unwrap();
    let coeffs2 = CnlsCoefficients::scalar_linear(1.0, 1.0, 0.5).unwrap();
    let profile2 = AbsorptionProfile {
        layout: layout2,
        params: PmlParameters::with_magnitudes(2.0, 2.0).unwrap(),
        sigma_x: vec![2.0; grid2.nx],
        sigma_y: vec![2.0; grid2.ny],
        sigma_x_d: vec![0.0; grid2.nx],
        sigma_y_d: vec![0.0; grid2.ny],
    };
    let fields2 = build_coefficient_fields(&profile2, &coeffs2, FRAC_PI_4);
    let set = pml_operator_set(&grid2, &fields2, 0).unwrap();
    let y: Vec<C> = (0..grid2.n_points())
        .map(|i| C::new((i as f64 * 0.17).cos(), (i as f64 * 0.29).sin()))
        .collect();
    let xy = set.dxy.apply(&y);
    let yx = set.dyx.apply(&y);
    let cscale = xy.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    ok &= xy
        .iter()
        .zip(&yx)
        .all(|(u, v)| (u - v).norm() <= 1e-12 * cscale);

    report(
        4,
        "4th-order stencils, exact sigma=0 reduction, constant-sigma commutator",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 5. Time-integrator order
// ---------------------------------------------------------------------------

#[test]
fn c05_temporal_order() {
    // linear run on a fixed desk-scale grid; the pulse stays away from the
    // layers so free-space propagation is the exact reference
    let base = ScenarioConfig {
        coefficients: CnlsCoefficients::scalar_linear(1.0, 1.0, 0.5).unwrap(),
        layout: DomainLayout::new(6.0, 6.0, 1.2, 1.2).unwrap(),
        dx: 6.0 / 180.0,
        dy: 6.0 / 180.0,
        pml: PmlParameters::with_magnitudes(3.3, 3.3).unwrap(),
        dt: 0.04,
        t_end: 0.4,
        initial_condition: InitialCondition::Gaussian {
            center: (3.0, 3.0),
            amplitude: 1.0,
            widths: (1.0, 1.0),
        },
        snapshot_times: vec![],
        error_times: vec![0.4],
    };
    let mut errors = Vec::new();
    let mut reference: Option<ComplexState> = None;
    for dt in [0.04, 0.02, 0.01] {
        let mut c = base.clone();
        c.dt = dt;
        let run = run_simulation(&c).unwrap();
        let r = match &reference {
            Some(r) => r.clone(),
            None => {
                let r = spectral_evolve(&run.initial, &c.coefficients, 0.4).unwrap().state;
                reference = Some(r.clone());
                r
            }
        };
        errors.push(relative_error(snapshot_at(&run, 0.4).unwrap(), &r).unwrap());
    }
    // the spatial discretization error is a fixed floor; the temporal order
    // is observed on the halvings whose errors still sit above it
    let p = (errors[0] / errors[1]).log2();
    let ok = (3.5..=4.5).contains(&p) && errors[1] >= errors[2];
    println!(
        "    temporal errors {:?} -> observed order {p:.2}",
        errors
    );
    report(5, "observed temporal order in [3.5, 4.5]", ok);
}

// ---------------------------------------------------------------------------
// 6. Linear convergence sweep, beta = 0
// ---------------------------------------------------------------------------

fn linear_sweep(name: &str, scale: f64) -> (Vec<(f64, f64)>, f64) {
    let base = desk_scenario(name, scale);
    let deltas: Vec<f64> = sweep_width_fractions(name)
        .iter()
        .map(|f| f * base.layout.lx)
        .collect();
    let sweep = layer_width_sweep(&base, &deltas, ReferencePolicy::Spectral).unwrap();
    let rows: Vec<(f64, f64)> = sweep.rows.iter().map(|&(d, e, _)| (d, e)).collect();
    (rows, sweep.fits[0].1.rate)
}

#[test]
fn c06_linear_sweep_beta0_desk() {
    let (rows, rate) = linear_sweep("lin-beta0", LIN_DESK);
    println!("    rows {rows:?}, rate {rate:.3}");
    let ok = monotone_decreasing(&rows) && rate > 0.8;
    report(6, "beta=0 sweep decreases monotonically with rate > 0.8 (desk)", ok);
}

#[test]
#[ignore = "published-resolution tier (hours)"]
fn c06_linear_sweep_beta0_paper() {
    let (rows, rate) = linear_sweep("lin-beta0", 1.0);
    let narrow = rows.iter().find(|r| (r.0 - 0.08 * 6.0).abs() < 1e-9).unwrap().1;
    let wide = rows.iter().find(|r| (r.0 - 0.30 * 6.0).abs() < 1e-9).unwrap().1;
    let ok = (1.27..=2.37).contains(&rate) && narrow >= 10.0 * wide;
    report(6, "beta=0 sweep rate in [1.27, 2.37] with 10x spread (paper tier)", ok);
}

// ---------------------------------------------------------------------------
// 7. Linear convergence sweep, beta = 0.5
// ---------------------------------------------------------------------------

#[test]
fn c07_linear_sweep_beta05_desk() {
    let (rows, rate) = linear_sweep("lin-beta05", LIN_DESK);
    println!("    rows {rows:?}, rate {rate:.3}");
    let ok = monotone_decreasing(&rows) && rate > 0.5;
    report(7, "beta=0.5 sweep decreases monotonically with rate > 0.5 (desk)", ok);
}

#[test]
#[ignore = "published-resolution tier (hours)"]
fn c07_linear_sweep_beta05_paper() {
    let (_, rate) = linear_sweep("lin-beta05", 1.0);
    report(7, "beta=0.5 sweep rate in [0.75, 1.39] (paper tier)", (0.75..=1.39).contains(&rate));
}

// ---------------------------------------------------------------------------
// 8. Instability above the threshold
// ---------------------------------------------------------------------------

#[test]
fn c08_instability_reproduction() {
    let unstable = desk_scenario("lin-beta05-unstable", LIN_DESK);
    let run = run_simulation(&unstable).unwrap();
    let m04 = layer_max(snapshot_at(&run, 0.4).unwrap());
    let m06 = layer_max(snapshot_at(&run, 0.6).unwrap());
    let growth = m06 / m04;

    // the stable twin: the solution keeps decaying (dispersion plus
    // absorption) and the layer field stays bounded while the packet flows
    // through, instead of blowing up
    let mut stable = desk_scenario("lin-beta05", LIN_DESK);
    stable.t_end = 0.6;
    stable.snapshot_times = vec![0.4, 0.6];
    stable.error_times = vec![];
    let srun = run_simulation(&stable).unwrap();
    let s04 = layer_max(snapshot_at(&srun, 0.4).unwrap());
    let s06 = layer_max(snapshot_at(&srun, 0.6).unwrap());
    let peak_at = |t: f64| -> f64 {
        srun.output
            .diagnostics
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .unwrap()
            .max_abs
    };
    let (p04, p06) = (peak_at(0.4), peak_at(0.6));

    println!(
        "    deep-layer max: unstable {m04:.3e} -> {m06:.3e} (x{growth:.0}), \
         stable {s04:.3e} -> {s06:.3e}; stable peak {p04:.3} -> {p06:.3}"
    );
    let ok = growth >= 5.0 && p06 < p04 && s06 < 5.0 * s04 && s06 < 0.2;
    report(8, "h=20 grows >= 5x in the layers while h=3.3 decays", ok);
}

// ---------------------------------------------------------------------------
// 9. Nonlinear convergence sweeps
// ---------------------------------------------------------------------------

fn nonlinear_sweep(name: &str, scale: f64) -> (Vec<(f64, f64)>, f64, f64) {
    let base = desk_scenario(name, scale);
    let deltas: Vec<f64> = sweep_width_fractions(name)
        .iter()
        .map(|f| f * base.layout.lx)
        .collect();
    let sweep = layer_width_sweep(&base, &deltas, ReferencePolicy::WidestLayer).unwrap();
    let t_last = *base.error_times.last().unwrap();
    let fit = &sweep
        .fits
        .iter()
        .find(|(t, _)| (t - t_last).abs() < 1e-9)
        .unwrap()
        .1;
    let rows: Vec<(f64, f64)> = sweep
        .rows
        .iter()
        .filter(|r| (r.2 - t_last).abs() < 1e-9)
        .map(|&(d, e, _)| (d, e))
        .collect();
    (rows, fit.rate, fit.correlation)
}

#[test]
fn c09_nonlinear_sweeps_desk() {
    let (rows_b0, rate_b0, corr_b0) = nonlinear_sweep("nl-beta0", NL_DESK);
    println!("    nl-beta0 rows {rows_b0:?}, rate {rate_b0:.3}, corr {corr_b0:.4}");
    let (rows_mx, rate_mx, corr_mx) = nonlinear_sweep("nl-mixed", NL_DESK);
    println!("    nl-mixed rows {rows_mx:?}, rate {rate_mx:.3}, corr {corr_mx:.4}");
    let ok = monotone_decreasing(&rows_b0)
        && monotone_decreasing(&rows_mx)
        && corr_b0.abs() > 0.97
        && corr_mx.abs() > 0.97
        && rate_b0 > 0.0
        && rate_mx > 0.0;
    report(9, "nonlinear sweeps decay log-linearly with |r| > 0.97 (desk)", ok);
}

#[test]
#[ignore = "published-resolution tier (hours)"]
fn c09_nonlinear_sweeps_paper() {
    let (_, rate_b0, _) = nonlinear_sweep("nl-beta0", 1.0);
    let (_, rate_mx, _) = nonlinear_sweep("nl-mixed", 1.0);
    let ok = (0.28..=0.66).contains(&rate_b0) && (0.21..=0.49).contains(&rate_mx);
    report(9, "nonlinear sweep rates near 0.47 / 0.35 (paper tier)", ok);
}

// ---------------------------------------------------------------------------
// 10. Moving pulse through the layer
// ---------------------------------------------------------------------------

/// Peak modulus of the first component over the whole box (the published
/// figures and the quoted pulse amplitude refer to u1).
fn first_component_peak(state: &ComplexState) -> f64 {
    let np = state.grid.n_points();
    state.data[..np].iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn c10_pulse_scenario() {
    let mut config = desk_scenario("nl-pulse", PULSE_DESK);
    // the kicked soliton (group speed ~13 along y=x from the center) crosses
    // the corner interface around t ~ 0.38-0.45; sample u1 right there
    config.snapshot_times.push(0.45);
    let run = run_simulation(&config).unwrap();
    let amp = first_component_peak(snapshot_at(&run, 0.45).unwrap());

    // after the pulse has left: residual over the physical domain
    let at3 = restrict_to_physical(snapshot_at(&run, 3.0).unwrap()).unwrap();
    let residual = at3.max_abs();

    let base = desk_scenario("nl-pulse", PULSE_DESK);
    let deltas: Vec<f64> = sweep_width_fractions("nl-pulse")
        .iter()
        .map(|f| f * base.layout.lx)
        .collect();
    let sweep = layer_width_sweep(&base, &deltas, ReferencePolicy::WidestLayer).unwrap();
    let rate_half = sweep.fits.iter().find(|(t, _)| (t - 0.5).abs() < 1e-9).unwrap().1.rate;
    let rate_three = sweep.fits.iter().find(|(t, _)| (t - 3.0).abs() < 1e-9).unwrap().1.rate;

    println!(
        "    amplitude {amp:.4}, residual at t=3 {residual:.3e}, rates {rate_half:.3}/{rate_three:.3}"
    );
    let ok = (0.89..=1.09).contains(&amp)
        && residual < 1e-3
        && rate_half > 0.0
        && rate_three > 0.0;
    report(
        10,
        "pulse amplitude ~0.99, post-exit residual < 1e-3, positive decay rates",
        ok,
    );
}

#[test]
#[ignore = "published-resolution tier (hours)"]
fn c10_pulse_paper_rates() {
    // published-resolution entry amplitude: u1 peak at the interface crossing
    let mut short = scenario("nl-pulse").unwrap();
    short.t_end = 0.55;
    short.snapshot_times = vec![0.45];
    short.error_times = vec![];
    let entry = run_simulation(&short).unwrap();
    let amp = first_component_peak(snapshot_at(&entry, 0.45).unwrap());

    let base = scenario("nl-pulse").unwrap();
    let deltas: Vec<f64> = sweep_width_fractions("nl-pulse")
        .iter()
        .map(|f| f * base.layout.lx)
        .collect();
    let sweep = layer_width_sweep(&base, &deltas, ReferencePolicy::WidestLayer).unwrap();
    let rate_half = sweep.fits.iter().find(|(t, _)| (t - 0.5).abs() < 1e-9).unwrap().1.rate;
    let rate_three = sweep.fits.iter().find(|(t, _)| (t - 3.0).abs() < 1e-9).unwrap().1.rate;
    println!("    amplitude {amp:.4}, rates {rate_half:.3}/{rate_three:.3}");
    let ok = (0.89..=1.09).contains(&amp)
        && (rate_half - 0.51).abs() <= 0.4 * 0.51
        && (rate_three - 0.48).abs() <= 0.4 * 0.48;
    report(
        10,
        "pulse amplitude ~0.99 and decay rates near 0.51 / 0.48 (paper tier)",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 11. Ground-state solver
// ---------------------------------------------------------------------------

#[test]
fn c11_ground_states() {
    // regenerated oracle values for the cubic ground state (tight shooting
    // tolerances; see the radial solver)
    let townes_phi0 = 2.2062008646509295;
    let townes_power = 11.700895887404982;
    let p = shoot_radial_ground_state(1.0, 0.0).unwrap();
    let mut ok = (p.phi0 - townes_phi0).abs() <= 1e-6 * townes_phi0
        && (p.power - townes_power).abs() <= 1e-6 * townes_power;

    // continued coupled ground state evolved without perturbation stays a
    // standing wave u(t) = phi e^{it}
    let config = desk_scenario("nl-mixed", NL_DESK);
    let (layout, grid) = GridSpec::build(&config.layout, config.dx, config.dy).unwrap();
    let phi = continue_ground_state(
        &config.coefficients,
        layout,
        grid,
        (layout.lx / 2.0, layout.ly / 2.0),
    )
    .unwrap();
    let profile = build_profiles(&layout, &grid, &config.pml).unwrap();
    let fields = build_coefficient_fields(&profile, &config.coefficients, config.pml.rho);
    let nc = config.coefficients.n_components();
    let ops: Vec<_> = (0..nc)
        .map(|j| assemble_linear_operator(&config.coefficients, j, &fields, &grid).unwrap())
        .collect();
    let tableau = ArkTableau::ark436l2sa();
    let solver = StageSolver::build(&ops, config.dt, tableau.gamma(), SolverKind::Auto).unwrap();
    let out = integrate(
        &phi,
        &ops,
        &config.coefficients,
        config.dt,
        1.0,
        &tableau,
        &solver,
        &[],
        50,
    )
    .unwrap();
    let mut expected = phi.clone();
    let phase = C::from_polar(1.0, 1.0);
    for z in expected.data.iter_mut() {
        *z *= phase;
    }
    let drift = relative_error(&out.final_state, &expected).unwrap();
    println!("    ground-state standing-wave drift at t=1: {drift:.3e}");
    ok &= drift < 1e-3;
    report(
        11,
        "Townes oracle to 1e-6 and continued ground state stationary to 1e-3",
        ok,
    );
}

// ---------------------------------------------------------------------------
// 12. Long-time stability
// ---------------------------------------------------------------------------

fn longtime_no_growth(t_end: f64) -> bool {
    let mut config = desk_scenario("nl-mixed-longtime", NL_DESK);
    config.t_end = t_end;
    config.snapshot_times = vec![];
    config.error_times = vec![];
    let run = run_simulation(&config).unwrap();
    let early_max = run
        .output
        .diagnostics
        .iter()
        .filter(|d| d.t <= 5.0)
        .map(|d| d.max_abs)
        .fold(0.0f64, f64::max);
    let overall: Vec<(f64, f64)> = run
        .output
        .diagnostics
        .iter()
        .map(|d| (d.t, d.max_abs))
        .collect();
    let worst = overall.iter().map(|r| r.1).fold(0.0f64, f64::max);
    println!("    max|u| over [0,5] = {early_max:.4}, over [0,{t_end}] = {worst:.4}");
    worst <= 1.05 * early_max
}

#[test]
fn c12_longtime_stability_desk() {
    report(12, "nl-mixed run to t=50 shows no growth (desk)", longtime_no_growth(50.0));
}

#[test]
#[ignore = "full t=200 tier (hours)"]
fn c12_longtime_stability_full() {
    report(12, "nl-mixed run to t=200 shows no growth (full tier)", longtime_no_growth(200.0));
}

// keep the nonlinearity wired into the acceptance surface: a quick
// sanity identity used by several criteria above
#[test]
fn nonlinearity_smoke() {
    let layout = DomainLayout::new(2.0, 2.0, 0.0, 0.0).unwrap();
    let (layout, grid) = GridSpec::build(&layout, 0.25, 0.25).unwrap();
    let coeffs =
        CnlsCoefficients::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0], 0.5, -0.2).unwrap();
    let s = ComplexState::from_fn(layout, grid, 2, |_, _, _| C::new(1.1, 0.0));
    let n = evaluate_nonlinearity(&s, &coeffs).unwrap();
    let want = 0.5 * (4.0 * 1.1f64.powi(3) - 0.2 * 1.1f64.powi(5));
    assert!(n.data.iter().all(|z| (z.re - want).abs() < 1e-12 && z.im == 0.0));
}
