//! Command-line entry points.
//!
//! Subcommands: `simulate` (trajectory CSV + snapshot SVGs), `wave`
//! (per-sample and summary CSVs), `sobol` (indices CSV + bar chart SVG),
//! `check` (parameter constraint report). Flags override environment
//! variables (`BLIGHTWAVE_*`), which override the config file, which
//! overrides built-in defaults.
//!
//! Exit codes: 0 success (warnings allowed), 2 configuration or I/O
//! error, 3 experiment aborted (instability, blow-up, failed sensitivity
//! evaluation).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{a_priori_bounds, check_wave_constraints};
use crate::sensitivity::{run_sensitivity, SobolResult};
use crate::solver::{integrate, standard_initial_condition, Grid, Trajectory};
use crate::svg;
use crate::wave::{wave_experiment, SampleOutcome, StatSummary, WaveExperiment};

#[derive(Parser, Debug)]
#[command(
    name = "blightwave",
    about = "Blossom-blight epidemic simulator: travelling waves and sensitivity analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sample count: wave samples or sensitivity base sample size.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Worker threads for parallel sample evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration and write the trajectory and snapshots.
    Simulate,
    /// Sample parameter sets and compute the travelling-wave statistics.
    Wave,
    /// Variance-based sensitivity analysis of the front position.
    Sobol,
    /// Evaluate the wave-existence parameter constraints and bounds.
    Check,
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
    match std::env::var(name) {
        Ok(text) => text
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("cannot parse {name}={text}"))),
        Err(_) => Ok(None),
    }
}

struct Resolved {
    config: RunConfig,
    seed: u64,
    out_dir: PathBuf,
    samples: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<Resolved> {
    let config_path = match &cli.config {
        Some(p) => Some(p.clone()),
        None => env_parse::<PathBuf>("BLIGHTWAVE_CONFIG")?,
    };
    let config = match config_path {
        Some(path) => RunConfig::from_path(&path)?,
        None => RunConfig::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => env_parse::<u64>("BLIGHTWAVE_SEED")?.unwrap_or(config.seed),
    };
    let out_dir = match &cli.out {
        Some(p) => p.clone(),
        None => env_parse::<PathBuf>("BLIGHTWAVE_OUT")?.unwrap_or_else(|| PathBuf::from("out")),
    };
    let samples = match cli.samples {
        Some(n) => Some(n),
        None => env_parse::<usize>("BLIGHTWAVE_SAMPLES")?,
    };
    if let Some(threads) = match cli.threads {
        Some(t) => Some(t),
        None => env_parse::<usize>("BLIGHTWAVE_THREADS")?,
    } {
        // Ignored if a global pool already exists (e.g. second call in
        // one process); determinism never depends on the thread count.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(Resolved { config, seed, out_dir, samples })
}

/// Metadata comment embedded as the first line of every output file.
fn meta_line(resolved: &Resolved, extra: &str) -> String {
    let sep = if extra.is_empty() { "" } else { " " };
    format!(
        "# blightwave seed={} config_sha256={}{sep}{extra}",
        resolved.seed,
        resolved.config.config_hash()
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn fnum(v: f64) -> String {
    format!("{v}")
}

fn csv_escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn cmd_simulate(resolved: &Resolved) -> Result<()> {
    let cfg = &resolved.config;
    let params = cfg.params.to_model_params();
    let grid = Grid::new(cfg.grid.length, cfg.grid.n_cells)?;
    let initial = standard_initial_condition(&grid, &params, cfg.initial.b_seed)?;
    let traj = integrate(
        &initial,
        &params,
        &grid,
        cfg.integrator.t_end,
        cfg.integrator.dt,
        cfg.integrator.method()?,
        cfg.integrator.record_every,
    )?;

    std::fs::create_dir_all(&resolved.out_dir)?;
    write_trajectory_csv(resolved, &traj)?;
    for &t in &cfg.simulate.snapshot_times {
        let snap = traj.snapshot_nearest(t)?;
        let chart = svg::snapshot_chart(
            snap.t,
            grid.length(),
            &[
                ("B", &snap.b),
                ("O", &snap.o),
                ("S", &snap.s),
                ("I", &snap.i),
                ("R", &snap.r),
            ],
            meta_line(resolved, &format!("t={}", fnum(snap.t))).trim_start_matches("# "),
        );
        let name = format!("snapshot_t{}.svg", fnum(t));
        write_file(&resolved.out_dir.join(name), &chart)?;
    }
    Ok(())
}

fn write_trajectory_csv(resolved: &Resolved, traj: &Trajectory) -> Result<()> {
    let grid = traj.grid();
    let mut out = String::new();
    out.push_str(&meta_line(resolved, ""));
    out.push('\n');
    out.push_str("t,x,B,O,S,I,R\n");
    for snap in traj.snapshots() {
        for j in 0..grid.n_cells() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fnum(snap.t),
                fnum(grid.cell_center(j)),
                fnum(snap.b[j]),
                fnum(snap.o[j]),
                fnum(snap.s[j]),
                fnum(snap.i[j]),
                fnum(snap.r[j]),
            ));
        }
    }
    write_file(&resolved.out_dir.join("trajectory.csv"), &out)
}

fn cmd_wave(resolved: &Resolved) -> Result<WaveExperiment> {
    let cfg = &resolved.config;
    let n_samples = resolved.samples.unwrap_or(cfg.wave.n_samples);
    let ranges = cfg.wave.ranges.to_wave_ranges();
    let wave_config = cfg.wave.to_wave_config()?;
    let result = wave_experiment(n_samples, &ranges, resolved.seed, &wave_config)?;

    std::fs::create_dir_all(&resolved.out_dir)?;
    write_wave_samples_csv(resolved, &result)?;
    write_wave_summary_csv(resolved, &result)?;
    if result.n_failed > 0 || result.n_degenerate > 0 {
        eprintln!(
            "warning: {} of {} samples failed, {} degenerate; excluded from the summary",
            result.n_failed, n_samples, result.n_degenerate
        );
    }
    Ok(result)
}

fn write_wave_samples_csv(resolved: &Resolved, result: &WaveExperiment) -> Result<()> {
    let mut out = String::new();
    out.push_str(&meta_line(resolved, &format!("n_samples={}", result.samples.len())));
    out.push('\n');
    out.push_str(
        "sample,d1,d2,k,eps,r,mu,gamma,m1,m2,alpha,a1,a2,n1,n2,t_cmp,\
         pearson,l2,neighborhood_cells,neighborhood_truncated,speed,speed_minus_cmin,\
         regression_r2,status,detail\n",
    );
    for s in &result.samples {
        let p = &s.params;
        let head = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.index,
            fnum(p.d1),
            fnum(p.d2),
            fnum(p.k),
            fnum(p.eps),
            fnum(p.r),
            fnum(p.mu),
            fnum(p.gamma),
            fnum(p.m1),
            fnum(p.m2),
            fnum(p.alpha),
            fnum(p.a1),
            fnum(p.a2),
            fnum(p.n1),
            fnum(p.n2),
            s.t_cmp.map(fnum).unwrap_or_default(),
        );
        let tail = match &s.outcome {
            SampleOutcome::Stats(w) => format!(
                "{},{},{},{},{},{},{},ok,",
                fnum(w.pearson),
                fnum(w.l2_shape_diff),
                w.neighborhood_cells,
                w.neighborhood_truncated,
                fnum(w.speed),
                fnum(w.speed_minus_cmin),
                fnum(w.regression_r2),
            ),
            SampleOutcome::Degenerate(reason) => {
                format!(",,,,,,,degenerate,{}", csv_escape(reason))
            }
            SampleOutcome::Failed(reason) => format!(",,,,,,,failed,{}", csv_escape(reason)),
        };
        out.push_str(&format!("{head},{tail}\n"));
    }
    write_file(&resolved.out_dir.join("wave_samples.csv"), &out)
}

fn write_wave_summary_csv(resolved: &Resolved, result: &WaveExperiment) -> Result<()> {
    let mut out = String::new();
    out.push_str(&meta_line(
        resolved,
        &format!(
            "n_samples={} n_ok={} n_failed={} n_degenerate={}",
            result.samples.len(),
            result.n_ok,
            result.n_failed,
            result.n_degenerate
        ),
    ));
    out.push('\n');
    out.push_str("statistic,sample_min,sample_max,sample_mean,std_dev\n");
    let mut row = |name: &str, s: &Option<StatSummary>| {
        match s {
            Some(s) => out.push_str(&format!(
                "{name},{},{},{},{}\n",
                fnum(s.min),
                fnum(s.max),
                fnum(s.mean),
                fnum(s.std_dev)
            )),
            None => out.push_str(&format!("{name},,,,\n")),
        };
    };
    row("pearson_correlation", &result.pearson);
    row("local_l2_norm", &result.l2_shape_diff);
    row("wave_speed_difference", &result.speed_minus_cmin);
    write_file(&resolved.out_dir.join("wave_summary.csv"), &out)
}

fn cmd_sobol(resolved: &Resolved) -> Result<SobolResult> {
    let cfg = &resolved.config;
    let n_base = resolved.samples.unwrap_or(cfg.sobol.n_base);
    let factors = cfg.sobol.factors.to_factor_ranges();
    let sens_config = cfg
        .sobol
        .to_sensitivity_config(cfg.params.to_model_params())?;
    let result = run_sensitivity(&factors, n_base, resolved.seed, &sens_config)?;

    std::fs::create_dir_all(&resolved.out_dir)?;
    let meta = meta_line(
        resolved,
        &format!(
            "model_runs={} n_base={} sampler={} degenerate={} degenerate_qoi={}",
            result.total_runs,
            result.n_base,
            sens_config.sampler.name(),
            result.degenerate,
            result.n_degenerate_qoi
        ),
    );
    let mut out = String::new();
    out.push_str(&meta);
    out.push('\n');
    out.push_str(
        "factor,first_order,first_ci_low,first_ci_high,first_std_err,\
         total_order,total_ci_low,total_ci_high,total_std_err\n",
    );
    for (i, name) in result.factor_names.iter().enumerate() {
        if result.degenerate {
            break;
        }
        let s = &result.first_order[i];
        let t = &result.total_order[i];
        out.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{}\n",
            fnum(s.value),
            fnum(s.ci_low),
            fnum(s.ci_high),
            fnum(s.std_err),
            fnum(t.value),
            fnum(t.ci_low),
            fnum(t.ci_high),
            fnum(t.std_err),
        ));
    }
    write_file(&resolved.out_dir.join("sobol_indices.csv"), &out)?;

    if !result.degenerate {
        let chart = svg::sobol_bar_chart(
            &result.factor_names,
            &result.first_order,
            &result.total_order,
            meta.trim_start_matches("# "),
        );
        write_file(&resolved.out_dir.join("sobol_indices.svg"), &chart)?;
    } else {
        eprintln!("warning: constant quantity of interest; indices are undefined");
    }
    if result.n_degenerate_qoi > 0 {
        eprintln!(
            "warning: {} runs saw no infection reach the grid (peak defaulted to cell 0)",
            result.n_degenerate_qoi
        );
    }
    Ok(result)
}

fn cmd_check(resolved: &Resolved) -> Result<()> {
    let cfg = &resolved.config;
    let params = cfg.params.to_model_params();
    let report = check_wave_constraints(&params)?;
    let bounds = a_priori_bounds(&params, cfg.initial.b_seed, 0.0)?;

    println!("wave-existence parameter constraints:");
    println!("  d2 <= d1:                  {}", report.d2_le_d1);
    println!("  n1 = n2 + 1:               {}", report.exponent_link);
    println!("  m1 <= g(n):                {}", report.m1_le_g_n);
    println!("  ooze secretion inequality: {}", report.ooze_inequality);
    println!("  all satisfied:             {}", report.all_satisfied);
    println!("minimum wave speed c_min = {} m/day", fnum(report.c_min));
    println!("a-priori solution bounds (seed mass {} CFU in cell 0):", fnum(cfg.initial.b_seed));
    println!("  b_max = {} CFU", fnum(bounds.b_max));
    println!("  o_max = {} CFU", fnum(bounds.o_max));
    println!("  compartment_max = {} flowers", fnum(bounds.compartment_max));

    std::fs::create_dir_all(&resolved.out_dir)?;
    let mut out = String::new();
    out.push_str(&meta_line(resolved, ""));
    out.push('\n');
    out.push_str("quantity,value\n");
    out.push_str(&format!("d2_le_d1,{}\n", report.d2_le_d1));
    out.push_str(&format!("exponent_link,{}\n", report.exponent_link));
    out.push_str(&format!("m1_le_g_n,{}\n", report.m1_le_g_n));
    out.push_str(&format!("ooze_inequality,{}\n", report.ooze_inequality));
    out.push_str(&format!("all_satisfied,{}\n", report.all_satisfied));
    out.push_str(&format!("c_min,{}\n", fnum(report.c_min)));
    out.push_str(&format!("b_max,{}\n", fnum(bounds.b_max)));
    out.push_str(&format!("o_max,{}\n", fnum(bounds.o_max)));
    out.push_str(&format!("compartment_max,{}\n", fnum(bounds.compartment_max)));
    write_file(&resolved.out_dir.join("constraint_report.csv"), &out)
}

pub fn run_command(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let resolved = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let outcome: Result<()> = match cli.command {
        Command::Simulate => cmd_simulate(&resolved),
        Command::Wave => cmd_wave(&resolved).map(|_| ()),
        Command::Sobol => cmd_sobol(&resolved).map(|_| ()),
        Command::Check => cmd_check(&resolved),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParam { .. } | Error::Io(_) | Error::Domain(_) => 2,
                Error::FailedEvaluation { .. } | Error::Instability { .. } | Error::BlowUp { .. } => 3,
            }
        }
    }
}

pub fn main_entry() -> i32 {
    run_command(std::env::args().collect())
}
