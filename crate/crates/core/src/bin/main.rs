//! Command-line front end: stability tables, modal analysis, absorption
//! profile export, scenario runs, layer-width sweeps, rate fits, and
//! ground-state computation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use cnls_pml::analysis::{
    dispersion, find_removal_transform, modal_lambdas, system_threshold, threshold_sigma1,
    RemovalOutcome, StabilityThreshold,
};
use cnls_pml::error::{Error, Result};
use cnls_pml::experiments::{
    apply_scale, config_to_toml, fit_rate, layer_width_sweep, load_config, read_errors_csv,
    run_scenario, scenario, sweep_width_fractions, write_errors_csv, write_profile_csv,
    write_snapshot, ReferencePolicy, SCENARIO_NAMES,
};
use cnls_pml::model::{GridSpec, ScenarioConfig};
use cnls_pml::pml::build_profiles;
use cnls_pml::reference::continue_ground_state;

#[derive(Parser)]
#[command(
    name = "cnls-pml",
    about = "2D coupled nonlinear Schrödinger solver with perfectly matched layers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigSource {
    /// Path to a TOML scenario configuration.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Mesh coarsening factor in (0, 1]; 1 = published resolution.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Worker threads (accepted for compatibility; execution is currently
    /// single-threaded).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl ConfigSource {
    fn resolve(&self) -> Result<(ScenarioConfig, String)> {
        let (mut config, name) = match (&self.config, &self.scenario) {
            (Some(path), _) => (
                load_config(path)?,
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "config".into()),
            ),
            (None, Some(name)) => (scenario(name)?, name.clone()),
            (None, None) => {
                return Err(Error::config(format!(
                    "supply --config or --scenario (known scenarios: {})",
                    SCENARIO_NAMES.join(", ")
                )))
            }
        };
        if self.scale != 1.0 {
            apply_scale(&mut config, self.scale)?;
        }
        Ok((config, name))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the corner-layer stability threshold σ₁(β̃).
    Threshold {
        /// Evaluate a single scaled mixed coefficient β̃ ∈ [-1, 1].
        #[arg(long)]
        tilde_beta: Option<f64>,
        /// Evaluate the system threshold for a scenario's coefficients.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Modal exponents, dispersion, and mixed-derivative removal for a
    /// scenario's coefficients.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Transverse wavenumber for the modal analysis.
        #[arg(long, default_value_t = 2.0)]
        ky: f64,
        /// Imaginary part of the Laplace variable s = i·s_im.
        #[arg(long, default_value_t = 1.0)]
        s_im: f64,
        /// Wavenumbers for the dispersion report.
        #[arg(long, default_value_t = 1.0)]
        kx: f64,
    },
    /// Export the absorption profile σx as CSV (x, sigma).
    Profile {
        #[command(flatten)]
        source: ConfigSource,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario and write snapshots, diagnostics, and a summary.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Print the scenario configuration and exit without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Layer-width convergence sweep; writes an errors CSV and prints fits.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: PathBuf,
        /// Layer widths (absolute). Defaults to the published fractions of Lx.
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
    },
    /// Fit the exponential decay model to an errors CSV.
    Fit {
        /// Input CSV with header delta,e_r,time.
        #[arg(long)]
        input: PathBuf,
    },
    /// Compute the coupled ground state and persist it as a snapshot.
    Groundstate {
        #[command(flatten)]
        source: ConfigSource,
        /// Output snapshot path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Threshold { tilde_beta, config } => cmd_threshold(tilde_beta, config),
        Command::Analyze { config, ky, s_im, kx } => cmd_analyze(&config, ky, s_im, kx),
        Command::Profile { source, out } => cmd_profile(&source, &out),
        Command::Run { source, out, dry_run } => cmd_run(&source, &out, dry_run),
        Command::Sweep { source, out, deltas } => cmd_sweep(&source, &out, &deltas),
        Command::Fit { input } => cmd_fit(&input),
        Command::Groundstate { source, out } => cmd_groundstate(&source, &out),
    }
}

fn print_threshold(label: &str, threshold: &StabilityThreshold) {
    match threshold.value() {
        Some(v) => println!("{label}: sigma1 = {v:.6}"),
        None => println!("{label}: unconditionally stable"),
    }
}

fn cmd_threshold(tilde_beta: Option<f64>, config: Option<PathBuf>) -> Result<()> {
    match (tilde_beta, config) {
        (Some(tb), _) => {
            let t = threshold_sigma1(tb)?;
            print_threshold(&format!("tilde_beta = {tb}"), &t);
        }
        (None, Some(path)) => {
            let cfg = load_config(&path)?;
            let t = system_threshold(&cfg.coefficients);
            println!(
                "tilde_beta per component: {:?}",
                cfg.coefficients.tilde_betas()
            );
            print_threshold("system", &t);
        }
        (None, None) => {
            println!("tilde_beta  sigma1");
            for i in 1..=19 {
                let tb = i as f64 * 0.05;
                let t = threshold_sigma1(tb)?;
                println!("{tb:>10.2}  {:.6}", t.value().unwrap());
            }
        }
    }
    Ok(())
}

fn cmd_analyze(config: &Path, ky: f64, s_im: f64, kx: f64) -> Result<()> {
    let cfg = load_config(config)?;
    let c = &cfg.coefficients;
    let s = Complex64::new(0.0, s_im);
    println!("components: {}", c.n_components());
    for j in 0..c.n_components() {
        let d = dispersion(c.alpha_x[j], c.alpha_y[j], c.beta[j], kx, ky);
        let (l1, l2) = modal_lambdas(c.alpha_x[j], c.alpha_y[j], c.beta[j], s, ky)?;
        println!("component {j}:");
        println!("  tilde_beta = {:.6}", c.tilde_beta(j));
        println!(
            "  dispersion at (kx={kx}, ky={ky}): omega = {:.6}, vg_x = {:.6}, vp_x = {}",
            d.omega,
            d.vg,
            d.vp.map_or("n/a".into(), |v| format!("{v:.6}"))
        );
        println!("  modal exponents at (s = {s_im}i, ky = {ky}):");
        println!("    lambda1 = {:.6} + {:.6}i", l1.re, l1.im);
        println!("    lambda2 = {:.6} + {:.6}i", l2.re, l2.im);
    }
    let t = system_threshold(c);
    print_threshold("system stability", &t);
    match find_removal_transform(c, 1e-10) {
        RemovalOutcome::Removable(p) => {
            println!(
                "mixed derivatives removable: a = {:.6}, b = {:.6}, theta = {:.6}",
                p.a, p.b, p.theta
            );
            println!("  transformed alpha_x = {:?}", p.alpha_x_t);
            println!("  transformed alpha_y = {:?}", p.alpha_y_t);
        }
        RemovalOutcome::NotRemovable => {
            println!("mixed derivatives not removable by a single transform");
        }
    }
    Ok(())
}

fn cmd_profile(source: &ConfigSource, out: &Path) -> Result<()> {
    let (config, _) = source.resolve()?;
    let (layout, grid) = GridSpec::build(&config.layout, config.dx, config.dy)?;
    let profile = build_profiles(&layout, &grid, &config.pml)?;
    write_profile_csv(out, &grid.xs(), &profile.sigma_x)?;
    println!(
        "wrote {} samples, max sigma_x = {:.4}",
        grid.nx,
        profile.max_sigma_x()
    );
    let report = profile.stability_report(&config.coefficients);
    println!("{report}");
    Ok(())
}

fn cmd_run(source: &ConfigSource, out: &Path, dry_run: bool) -> Result<()> {
    let (config, name) = source.resolve()?;
    if dry_run {
        println!("{}", config_to_toml(&config)?);
        return Ok(());
    }
    println!("running scenario '{name}'");
    let run = run_scenario(&config, out)?;
    if let Some(w) = &run.stability_warning {
        eprintln!("warning: {w}");
    }
    let last = run.output.diagnostics.last().unwrap();
    println!(
        "finished: t = {:.3}, steps = {}, l2(Omega) = {:.6e}, max|u| = {:.6e}",
        run.output.final_time, run.output.steps, last.l2_omega, last.max_abs
    );
    println!("outputs in {}", out.display());
    Ok(())
}

fn cmd_sweep(source: &ConfigSource, out: &Path, deltas: &[f64]) -> Result<()> {
    let (config, name) = source.resolve()?;
    let deltas: Vec<f64> = if deltas.is_empty() {
        sweep_width_fractions(&name)
            .iter()
            .map(|f| f * config.layout.lx)
            .collect()
    } else {
        deltas.to_vec()
    };
    let policy = if config.coefficients.gamma == 0.0 {
        ReferencePolicy::Spectral
    } else {
        ReferencePolicy::WidestLayer
    };
    println!(
        "sweep '{name}': widths {:?}, {} reference",
        deltas,
        if policy == ReferencePolicy::Spectral {
            "spectral"
        } else {
            "widest-layer"
        }
    );
    let result = layer_width_sweep(&config, &deltas, policy)?;
    std::fs::create_dir_all(out)?;
    write_errors_csv(&out.join("errors.csv"), &result.rows)?;
    for (t, fit) in &result.fits {
        println!(
            "t = {t}: rate p = {:.4}, prefactor c = {:.4e}, correlation = {:.4}",
            fit.rate, fit.prefactor, fit.correlation
        );
    }
    Ok(())
}

fn cmd_fit(input: &Path) -> Result<()> {
    let rows = read_errors_csv(input)?;
    if rows.is_empty() {
        return Err(Error::config("errors CSV contains no data rows"));
    }
    let mut times: Vec<f64> = rows.iter().map(|r| r.2).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for t in times {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| (r.2 - t).abs() < 1e-12)
            .map(|r| (r.0, r.1))
            .collect();
        let fit = fit_rate(&pts)?;
        println!(
            "t = {t}: rate p = {:.4}, prefactor c = {:.4e}, correlation = {:.4}",
            fit.rate, fit.prefactor, fit.correlation
        );
    }
    Ok(())
}

fn cmd_groundstate(source: &ConfigSource, out: &Path) -> Result<()> {
    let (config, _) = source.resolve()?;
    let (layout, grid) = GridSpec::build(&config.layout, config.dx, config.dy)?;
    let state = continue_ground_state(
        &config.coefficients,
        layout,
        grid,
        (layout.lx / 2.0, layout.ly / 2.0),
    )?;
    write_snapshot(out, &state, &config.coefficients, 0.0)?;
    println!(
        "ground state written to {} (peak amplitude {:.6})",
        out.display(),
        state.max_abs()
    );
    Ok(())
}
