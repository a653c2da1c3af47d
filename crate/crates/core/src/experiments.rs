//! Experiment harness: error metrics, exponential rate fitting, snapshot and
//! configuration persistence, the built-in scenario catalog, and the
//! layer-width convergence sweeps.

use std::fs;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretization::assemble_linear_operator;
use crate::error::{Error, Result};
use crate::model::{
    l2_norm, restrict_to_physical, CnlsCoefficients, ComplexState, DomainLayout, GridSpec,
    InitialCondition, ScenarioConfig,
};
use crate::pml::{build_coefficient_fields, build_profiles, PmlParameters};
use crate::reference::{continue_ground_state, spectral_evolve};
use crate::timestepper::{integrate, ArkTableau, IntegrationOutput, SolverKind, StageSolver};

type C = Complex64;

/// Relative L²(Ω) error `‖u − u_ref‖ / ‖u_ref‖`, both states restricted to
/// the physical domain. The grids must coincide on Ω; no interpolation.
pub fn relative_error(u: &ComplexState, u_ref: &ComplexState) -> Result<f64> {
    let a = restrict_to_physical(u)?;
    let b = restrict_to_physical(u_ref)?;
    if a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny || a.n_components != b.n_components {
        return Err(Error::config("states do not share the physical grid"));
    }
    if (a.grid.dx - b.grid.dx).abs() > 1e-12 || (a.grid.dy - b.grid.dy).abs() > 1e-12 {
        return Err(Error::config("states do not share the mesh width on Omega"));
    }
    let ref_norm = l2_norm(&b);
    if ref_norm == 0.0 {
        return Err(Error::domain("reference state has zero norm"));
    }
    let mut diff = a.clone();
    for (d, r) in diff.data.iter_mut().zip(&b.data) {
        *d -= r;
    }
    Ok(l2_norm(&diff) / ref_norm)
}

/// Least-squares fit of the exponential decay model `e_r ≈ c · 10^{−p δ}`.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Decay rate p in base-10 units (positive = error shrinks with width).
    pub rate: f64,
    /// Prefactor c.
    pub prefactor: f64,
    /// Pearson correlation of (δ, log₁₀ e_r); near −1 for clean decay.
    pub correlation: f64,
}

// the negated comparison rejects NaN errors along with non-positive ones
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::config("rate fit needs at least 3 points"));
    }
    if points.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::domain("rate fit requires positive errors"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("rate fit requires distinct widths"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(RateFit {
        rate: -slope,
        prefactor: 10f64.powf(intercept),
        correlation,
    })
}

// ---------------------------------------------------------------------------
// Snapshot files
// ---------------------------------------------------------------------------

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"CNLSSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// JSON header stored in every snapshot file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub coefficients: CnlsCoefficients,
    pub layout: DomainLayout,
    pub grid: GridSpec,
    pub n_components: usize,
    pub time: f64,
}

/// Writes `magic | version | header-length | JSON header | LE f64 pairs`.
/// The payload round-trips bit-exactly.
pub fn write_snapshot(
    path: &Path,
    state: &ComplexState,
    coeffs: &CnlsCoefficients,
    time: f64,
) -> Result<()> {
    let header = SnapshotHeader {
        coefficients: coeffs.clone(),
        layout: state.layout,
        grid: state.grid,
        n_components: state.n_components,
        time,
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| Error::format(format!("header encode: {e}")))?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_u32::<LittleEndian>(SNAPSHOT_VERSION)?;
    w.write_u64::<LittleEndian>(header_json.len() as u64)?;
    w.write_all(&header_json)?;
    for z in &state.data {
        w.write_u64::<LittleEndian>(z.re.to_bits())?;
        w.write_u64::<LittleEndian>(z.im.to_bits())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(ComplexState, SnapshotHeader)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::format("not a field snapshot file"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::format(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let hlen = r.read_u64::<LittleEndian>()? as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)?;
    let header: SnapshotHeader =
        serde_json::from_slice(&hbuf).map_err(|e| Error::format(format!("header decode: {e}")))?;
    let n = header.n_components * header.grid.n_points();
    let mut state = ComplexState::zeros(header.layout, header.grid, header.n_components);
    for k in 0..n {
        let re = f64::from_bits(r.read_u64::<LittleEndian>()?);
        let im = f64::from_bits(r.read_u64::<LittleEndian>()?);
        state.data[k] = C::new(re, im);
    }
    Ok((state, header))
}

// ---------------------------------------------------------------------------
// CSV outputs
// ---------------------------------------------------------------------------

pub fn write_errors_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "delta,e_r,time")?;
    for (delta, e_r, time) in rows {
        writeln!(w, "{delta},{e_r},{time}")?;
    }
    Ok(())
}

pub fn read_errors_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "delta,e_r,time" => {}
        _ => return Err(Error::format("errors CSV must start with 'delta,e_r,time'")),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::format(format!("errors CSV line {}: want 3 fields", ln + 2)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|e| Error::format(format!("errors CSV line {}: {e}", ln + 2)))
        };
        rows.push((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?));
    }
    Ok(rows)
}

pub fn write_diagnostics_csv(
    path: &Path,
    rows: &[crate::timestepper::DiagnosticsRow],
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,l2_omega,max_abs")?;
    for row in rows {
        writeln!(w, "{},{},{}", row.t, row.l2_omega, row.max_abs)?;
    }
    Ok(())
}

pub fn write_profile_csv(path: &Path, xs: &[f64], sigma: &[f64]) -> Result<()> {
    if xs.len() != sigma.len() {
        return Err(Error::config("profile CSV: coordinate/value length mismatch"));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x,sigma")?;
    for (x, s) in xs.iter().zip(sigma) {
        writeln!(w, "{x},{s}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Configuration files
// ---------------------------------------------------------------------------

/// On-disk configuration schema (TOML sections). Mirrors [`ScenarioConfig`]
/// but groups fields the way the files are laid out.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigFile {
    pub coefficients: CoefficientsSection,
    pub domain: DomainSection,
    pub grid: GridSection,
    pub pml: PmlSection,
    pub time: TimeSection,
    pub initial: InitialCondition,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoefficientsSection {
    pub alpha_x: Vec<f64>,
    pub alpha_y: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub eps_q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainSection {
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSection {
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PmlSection {
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub hx: f64,
    pub hy: f64,
    pub delta_x: f64,
    pub delta_y: f64,
}

fn default_rho() -> f64 {
    std::f64::consts::FRAC_PI_4
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct OutputsSection {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub error_times: Vec<f64>,
}

impl ConfigFile {
    pub fn into_scenario(self) -> Result<ScenarioConfig> {
        let coefficients = CnlsCoefficients::new(
            self.coefficients.alpha_x,
            self.coefficients.alpha_y,
            self.coefficients.beta,
            self.coefficients.gamma,
            self.coefficients.eps_q,
        )?;
        let layout = DomainLayout::new(
            self.domain.lx,
            self.domain.ly,
            self.pml.delta_x,
            self.pml.delta_y,
        )?;
        let pml = PmlParameters::new(self.pml.rho, self.pml.hx, self.pml.hy)?;
        let config = ScenarioConfig {
            coefficients,
            layout,
            dx: self.grid.dx,
            dy: self.grid.dy,
            pml,
            dt: self.time.dt,
            t_end: self.time.t_end,
            initial_condition: self.initial,
            snapshot_times: self.outputs.snapshot_times,
            error_times: self.outputs.error_times,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_scenario(config: &ScenarioConfig) -> Self {
        ConfigFile {
            coefficients: CoefficientsSection {
                alpha_x: config.coefficients.alpha_x.clone(),
                alpha_y: config.coefficients.alpha_y.clone(),
                beta: config.coefficients.beta.clone(),
                gamma: config.coefficients.gamma,
                eps_q: config.coefficients.eps_q,
            },
            domain: DomainSection {
                lx: config.layout.lx,
                ly: config.layout.ly,
            },
            grid: GridSection {
                dx: config.dx,
                dy: config.dy,
            },
            pml: PmlSection {
                rho: config.pml.rho,
                hx: config.pml.hx,
                hy: config.pml.hy,
                delta_x: config.layout.delta_x,
                delta_y: config.layout.delta_y,
            },
            time: TimeSection {
                dt: config.dt,
                t_end: config.t_end,
            },
            initial: config.initial_condition.clone(),
            outputs: OutputsSection {
                snapshot_times: config.snapshot_times.clone(),
                error_times: config.error_times.clone(),
            },
        }
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))?;
    file.into_scenario()
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn config_to_toml(config: &ScenarioConfig) -> Result<String> {
    toml::to_string_pretty(&ConfigFile::from_scenario(config))
        .map_err(|e| Error::format(format!("config encode: {e}")))
}

// ---------------------------------------------------------------------------
// Scenario catalog
// ---------------------------------------------------------------------------

pub const SCENARIO_NAMES: [&str; 7] = [
    "lin-beta0",
    "lin-beta05",
    "lin-beta05-unstable",
    "nl-beta0",
    "nl-mixed",
    "nl-mixed-longtime",
    "nl-pulse",
];

/// Built-in scenario at the published resolution. `delta` defaults to 0.2·Lx
/// per side; sweeps override it.
pub fn scenario(name: &str) -> Result<ScenarioConfig> {
    let gaussian_center = |l: f64| InitialCondition::Gaussian {
        center: (l / 2.0, l / 2.0),
        amplitude: 1.0,
        widths: (1.0, 1.0),
    };
    let config = match name {
        "lin-beta0" => ScenarioConfig {
            coefficients: CnlsCoefficients::scalar_linear(0.75, 1.25, 0.0)?,
            layout: DomainLayout::new(6.0, 6.0, 1.2, 1.2)?,
            dx: 6.0 / 350.0,
            dy: 6.0 / 350.0,
            pml: PmlParameters::with_magnitudes(30.0, 30.0)?,
            dt: 0.01,
            t_end: 1.0,
            initial_condition: gaussian_center(6.0),
            snapshot_times: vec![0.0, 1.0],
            error_times: vec![1.0],
        },
        "lin-beta05" => ScenarioConfig {
            coefficients: CnlsCoefficients::scalar_linear(1.0, 1.0, 0.5)?,
            layout: DomainLayout::new(6.0, 6.0, 1.2, 1.2)?,
            dx: 6.0 / 350.0,
            dy: 6.0 / 350.0,
            pml: PmlParameters::with_magnitudes(3.3, 3.3)?,
            dt: 0.01,
            t_end: 1.0,
            initial_condition: gaussian_center(6.0),
            snapshot_times: vec![0.0, 1.0],
            error_times: vec![1.0],
        },
        "lin-beta05-unstable" => ScenarioConfig {
            coefficients: CnlsCoefficients::scalar_linear(1.0, 1.0, 0.5)?,
            layout: DomainLayout::new(6.0, 6.0, 1.2, 1.2)?,
            dx: 6.0 / 350.0,
            dy: 6.0 / 350.0,
            pml: PmlParameters::with_magnitudes(20.0, 20.0)?,
            dt: 0.01,
            t_end: 0.6,
            initial_condition: gaussian_center(6.0),
            snapshot_times: vec![0.4, 0.6],
            error_times: vec![],
        },
        "nl-beta0" => ScenarioConfig {
            coefficients: CnlsCoefficients::new(
                vec![0.75, 1.25],
                vec![1.25, 0.75],
                vec![0.0, 0.0],
                0.5,
                -0.2,
            )?,
            layout: DomainLayout::new(14.0, 14.0, 2.8, 2.8)?,
            dx: 14.0 / 250.0,
            dy: 14.0 / 250.0,
            pml: PmlParameters::with_magnitudes(8.0, 8.0)?,
            dt: 0.01,
            t_end: 5.0,
            initial_condition: InitialCondition::SolitonPlusGaussians {
                groundstate: "auto".into(),
            },
            snapshot_times: vec![0.0, 2.0, 5.0],
            error_times: vec![5.0],
        },
        "nl-mixed" => ScenarioConfig {
            coefficients: CnlsCoefficients::new(
                vec![1.0, 0.75],
                vec![1.0, 1.0],
                vec![0.2, 0.15],
                0.5,
                -0.2,
            )?,
            layout: DomainLayout::new(14.0, 14.0, 2.8, 2.8)?,
            dx: 14.0 / 250.0,
            dy: 14.0 / 250.0,
            pml: PmlParameters::with_magnitudes(7.6, 7.6)?,
            dt: 0.01,
            t_end: 5.0,
            initial_condition: InitialCondition::SolitonPlusGaussians {
                groundstate: "auto".into(),
            },
            snapshot_times: vec![0.0, 2.0, 5.0],
            error_times: vec![5.0],
        },
        "nl-mixed-longtime" => {
            let mut c = scenario("nl-mixed")?;
            c.t_end = 200.0;
            c.snapshot_times = vec![200.0];
            c.error_times = vec![];
            c
        }
        "nl-pulse" => ScenarioConfig {
            coefficients: CnlsCoefficients::new(
                vec![1.0, 0.75],
                vec![1.0, 1.0],
                vec![0.2, 0.15],
                0.5,
                -0.2,
            )?,
            layout: DomainLayout::new(10.0, 10.0, 2.0, 2.0)?,
            dx: 10.0 / 180.0,
            dy: 10.0 / 180.0,
            pml: PmlParameters::with_magnitudes(7.6, 7.6)?,
            dt: 0.01,
            t_end: 3.0,
            initial_condition: InitialCondition::KickedSoliton {
                groundstate: "auto".into(),
                wavevector: (6.0, 6.0),
            },
            snapshot_times: vec![0.5, 1.0, 1.5, 3.0],
            error_times: vec![0.5, 3.0],
        },
        other => {
            return Err(Error::config(format!(
                "unknown scenario '{other}'; known: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(config)
}

/// Layer widths used in the published sweeps, as fractions of Lx.
pub fn sweep_width_fractions(name: &str) -> &'static [f64] {
    match name {
        "nl-pulse" => &[0.10, 0.15, 0.20, 0.25, 0.30, 0.35],
        _ => &[0.08, 0.12, 0.16, 0.20, 0.25, 0.30],
    }
}

/// Coarsens the mesh by the given factor (< 1) for desk-scale runs; cell
/// counts scale proportionally, widths stay fixed.
pub fn apply_scale(config: &mut ScenarioConfig, scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::config("scale must lie in (0, 1]"));
    }
    config.dx /= scale;
    config.dy /= scale;
    Ok(())
}

// ---------------------------------------------------------------------------
// Running scenarios
// ---------------------------------------------------------------------------

/// Materializes the initial condition on the computational grid.
pub fn build_initial_state(
    config: &ScenarioConfig,
    layout: DomainLayout,
    grid: GridSpec,
) -> Result<ComplexState> {
    let n = config.coefficients.n_components();
    let (lx, ly) = (layout.lx, layout.ly);
    let groundstate = |source: &str| -> Result<ComplexState> {
        if source == "auto" {
            continue_ground_state(&config.coefficients, layout, grid, (lx / 2.0, ly / 2.0))
        } else {
            let (state, header) = read_snapshot(Path::new(source))?;
            if state.grid.nx != grid.nx || state.grid.ny != grid.ny {
                return Err(Error::config(format!(
                    "ground-state snapshot grid {}x{} does not match run grid {}x{}",
                    header.grid.nx, header.grid.ny, grid.nx, grid.ny
                )));
            }
            Ok(state)
        }
    };
    match &config.initial_condition {
        InitialCondition::Gaussian {
            center,
            amplitude,
            widths,
        } => Ok(ComplexState::from_fn(layout, grid, n, |_, x, y| {
            let ex = ((x - center.0) / widths.0).powi(2);
            let ey = ((y - center.1) / widths.1).powi(2);
            C::new(amplitude * (-(ex + ey)).exp(), 0.0)
        })),
        InitialCondition::SolitonPlusGaussians { groundstate: src } => {
            let mut state = groundstate(src)?;
            let ps = [lx / 2.0, lx / 2.0, lx / 4.0, 3.0 * lx / 4.0];
            let qs = [ly / 4.0, 3.0 * ly / 4.0, ly / 2.0, ly / 2.0];
            for c in 0..state.n_components {
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        let (x, y) = (grid.x(i), grid.y(j));
                        let mut bump = 0.0;
                        for k in 0..4 {
                            bump += (-2.0 * ((x - ps[k]).powi(2) + (y - qs[k]).powi(2))).exp();
                        }
                        let idx = state.idx(c, i, j);
                        state.data[idx] += C::new(0.8 * bump, 0.0);
                    }
                }
            }
            Ok(state)
        }
        InitialCondition::KickedSoliton {
            groundstate: src,
            wavevector,
        } => {
            let mut state = groundstate(src)?;
            for c in 0..state.n_components {
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        let phase =
                            wavevector.0 * (grid.x(i) - lx / 2.0) + wavevector.1 * (grid.y(j) - ly / 2.0);
                        let idx = state.idx(c, i, j);
                        state.data[idx] *= C::from_polar(1.0, phase);
                    }
                }
            }
            Ok(state)
        }
        InitialCondition::File { path } => {
            let (state, _) = read_snapshot(Path::new(path))?;
            if state.grid.nx != grid.nx || state.grid.ny != grid.ny {
                return Err(Error::config("snapshot grid does not match the run grid"));
            }
            Ok(state)
        }
    }
}

/// A completed simulation with its grid realization.
pub struct SimulationRun {
    pub layout: DomainLayout,
    pub grid: GridSpec,
    pub initial: ComplexState,
    pub output: IntegrationOutput,
    pub stability_warning: Option<String>,
}

/// Builds operators and integrates one configuration. Snapshot times are the
/// union of the configured snapshot and error-measurement times.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimulationRun> {
    config.validate()?;
    let (layout, grid) = GridSpec::build(&config.layout, config.dx, config.dy)?;
    let profile = build_profiles(&layout, &grid, &config.pml)?;
    let report = profile.stability_report(&config.coefficients);
    let stability_warning = report.exceeded.then(|| report.to_string());
    let fields = build_coefficient_fields(&profile, &config.coefficients, config.pml.rho);
    let nc = config.coefficients.n_components();
    let mut ops = Vec::with_capacity(nc);
    for j in 0..nc {
        ops.push(assemble_linear_operator(
            &config.coefficients,
            j,
            &fields,
            &grid,
        )?);
    }
    let tableau = ArkTableau::ark436l2sa();
    let solver = StageSolver::build(&ops, config.dt, tableau.gamma(), SolverKind::Auto)?;
    let initial = build_initial_state(config, layout, grid)?;
    let mut times: Vec<f64> = config
        .snapshot_times
        .iter()
        .chain(config.error_times.iter())
        .cloned()
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let output = integrate(
        &initial,
        &ops,
        &config.coefficients,
        config.dt,
        config.t_end,
        &tableau,
        &solver,
        &times,
        10,
    )?;
    Ok(SimulationRun {
        layout,
        grid,
        initial,
        output,
        stability_warning,
    })
}

/// Snapshot captured nearest to the requested time.
pub fn snapshot_at(run: &SimulationRun, t: f64) -> Result<&ComplexState> {
    run.output
        .snapshots
        .iter()
        .find(|(st, _)| (st - t).abs() < 1e-9)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::config(format!("no snapshot captured at t = {t}")))
}

/// Runs a scenario and persists diagnostics, snapshots, and a run summary
/// into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<SimulationRun> {
    fs::create_dir_all(out_dir)?;
    let run = run_simulation(config)?;
    write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &run.output.diagnostics)?;
    for (t, state) in &run.output.snapshots {
        let name = format!("snapshot_t{t:.3}.bin");
        write_snapshot(&out_dir.join(name), state, &config.coefficients, *t)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        final_time: f64,
        steps: usize,
        max_abs_final: f64,
        l2_omega_final: f64,
        max_abs_history: Vec<(f64, f64)>,
        stability_warning: &'a Option<String>,
    }
    let last = run.output.diagnostics.last().unwrap();
    let summary = Summary {
        final_time: run.output.final_time,
        steps: run.output.steps,
        max_abs_final: last.max_abs,
        l2_omega_final: last.l2_omega,
        max_abs_history: run
            .output
            .diagnostics
            .iter()
            .map(|d| (d.t, d.max_abs))
            .collect(),
        stability_warning: &run.stability_warning,
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_vec_pretty(&summary).map_err(|e| Error::format(e.to_string()))?,
    )?;
    Ok(run)
}

// ---------------------------------------------------------------------------
// Layer-width sweeps
// ---------------------------------------------------------------------------

/// How the sweep obtains its reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferencePolicy {
    /// Exact free-space propagation of the initial data (linear runs only).
    Spectral,
    /// The run with the widest layer serves as reference and is excluded
    /// from the rate fit.
    WidestLayer,
}

#[derive(Debug)]
pub struct SweepResult {
    /// `(delta, e_r, time)` rows, matching the errors-CSV schema.
    pub rows: Vec<(f64, f64, f64)>,
    /// One fit per measurement time.
    pub fits: Vec<(f64, RateFit)>,
}

/// Runs the base configuration once per layer width and measures the
/// relative L²(Ω) error at every configured error time.
pub fn layer_width_sweep(
    base: &ScenarioConfig,
    deltas: &[f64],
    policy: ReferencePolicy,
) -> Result<SweepResult> {
    if deltas.is_empty() {
        return Err(Error::config("sweep needs at least one layer width"));
    }
    if base.error_times.is_empty() {
        return Err(Error::config("sweep base config has no error times"));
    }
    if policy == ReferencePolicy::Spectral && base.coefficients.gamma != 0.0 {
        return Err(Error::config(
            "spectral reference is only exact for linear runs",
        ));
    }
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    let with_delta = |d: f64| -> Result<ScenarioConfig> {
        let mut c = base.clone();
        c.layout = DomainLayout::new(c.layout.lx, c.layout.ly, d, d)?;
        Ok(c)
    };

    // reference fields on the physical grid, one per error time
    let widest = *deltas.last().unwrap();
    let mut runs: Vec<(f64, SimulationRun)> = Vec::new();
    for &d in &deltas {
        runs.push((d, run_simulation(&with_delta(d)?)?));
    }
    let reference_for = |t: f64| -> Result<ComplexState> {
        match policy {
            ReferencePolicy::WidestLayer => {
                let run = &runs.last().unwrap().1;
                Ok(snapshot_at(run, t)?.clone())
            }
            ReferencePolicy::Spectral => {
                let run = &runs.last().unwrap().1;
                let evolved = spectral_evolve(&run.initial, &base.coefficients, t)?;
                Ok(evolved.state)
            }
        }
    };

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &t in &base.error_times {
        let reference = reference_for(t)?;
        let mut points = Vec::new();
        for (d, run) in &runs {
            if policy == ReferencePolicy::WidestLayer && (*d - widest).abs() < 1e-12 {
                continue;
            }
            let e = relative_error(snapshot_at(run, t)?, &reference)?;
            rows.push((*d, e, t));
            points.push((*d, e));
        }
        fits.push((t, fit_rate(&points)?));
    }
    Ok(SweepResult { rows, fits })
}
