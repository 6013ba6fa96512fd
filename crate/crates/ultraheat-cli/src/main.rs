//! `ultraheat` — scenario-driven runs of the p-adic graph diffusion library.
//!
//! Every command reads one JSON scenario and writes deterministic CSV files
//! into the output directory. Exit codes: 0 success, 1 validation error,
//! 2 numerical refusal (degenerate spectrum or non-commuting guard).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ultraheat_core::boundary;
use ultraheat_core::evolve::{self, Method};
use ultraheat_core::format_float;
use ultraheat_core::ops::spectral_frame;
use ultraheat_core::quad::QuadratureConfig;
use ultraheat_core::scenario::{load_scenario, parse_point, Scenario};
use ultraheat_core::stochastic;
use ultraheat_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ultraheat",
    about = "Non-autonomous diffusion on graphs of p-adic balls",
    version
)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true, default_value = "scenario.json")]
    scenario: PathBuf,
    /// Directory for CSV outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the scenario, reporting its derived parameters.
    Validate,
    /// Tracked eigendecomposition of the Laplacian over the window.
    Spectrum {
        /// Number of grid intervals across the window (0 = start time only).
        #[arg(long, default_value_t = 0)]
        grid: usize,
    },
    /// Solve the Cauchy problem for the scenario's initial condition.
    Evolve {
        #[arg(long, value_parser = ["autonomous", "closed", "trotter", "commuting"])]
        method: String,
        /// Start time (defaults to the window start).
        #[arg(long)]
        from: Option<f64>,
        /// End time (defaults to the window end).
        #[arg(long)]
        to: Option<f64>,
        /// Trotter steps.
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Simpson subintervals (defaults to the scenario's quad_k).
        #[arg(long)]
        quad_k: Option<usize>,
    },
    /// Trotter error against the best reference over a list of step counts.
    SweepTrotter {
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        quad_k: Option<usize>,
        /// Comma-separated step counts (default 8,16,...,1024).
        #[arg(long)]
        steps_list: Option<String>,
    },
    /// Boundary eigenvalue report for the scenario's region.
    Boundary {
        /// Evaluation time (defaults to the window start).
        #[arg(long)]
        at: Option<f64>,
    },
    /// Monte-Carlo simulation with analytic cross-validation.
    Simulate {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        /// Start point `vertex[:digits]`.
        #[arg(long)]
        start: Option<String>,
    },
    /// Analytic heat-kernel ball probabilities.
    Kernel {
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        start: Option<String>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ULTRAHEAT_THREADS") {
        if let Ok(count) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(count.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical_refusal() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let scenario = load_scenario(&cli.scenario)?;
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Validate => validate(&scenario),
        Command::Spectrum { grid } => spectrum(&scenario, *grid, &cli.out),
        Command::Evolve {
            method,
            from,
            to,
            steps,
            quad_k,
        } => evolve_cmd(&scenario, method, *from, *to, *steps, *quad_k, &cli.out),
        Command::SweepTrotter {
            from,
            to,
            quad_k,
            steps_list,
        } => sweep(
            &scenario,
            *from,
            *to,
            *quad_k,
            steps_list.as_deref(),
            &cli.out,
        ),
        Command::Boundary { at } => boundary_cmd(&scenario, *at, &cli.out),
        Command::Simulate {
            paths,
            seed,
            from,
            to,
            start,
        } => simulate(
            &scenario,
            *paths,
            *seed,
            *from,
            *to,
            start.as_deref(),
            &cli.out,
        ),
        Command::Kernel { from, to, start } => {
            kernel(&scenario, *from, *to, start.as_deref(), &cli.out)
        }
    }
}

fn write_file(out: &Path, name: &str, contents: &str) -> Result<()> {
    let path = out.join(name);
    std::fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate(scenario: &Scenario) -> Result<()> {
    let e = &scenario.embedding;
    println!(
        "scenario ok: p = {}, n = {}, level = {}, resolution = {}, window = [{}, {}]",
        e.prime(),
        e.vertices(),
        e.level(),
        scenario.resolution,
        scenario.window.0,
        scenario.window.1
    );
    Ok(())
}

fn spectrum(scenario: &Scenario, grid: usize, out: &Path) -> Result<()> {
    let n = scenario.embedding.vertices();
    let (s, t) = scenario.window;
    let times: Vec<f64> = if grid == 0 {
        vec![s]
    } else {
        (0..=grid)
            .map(|i| s + (t - s) * i as f64 / grid as f64)
            .collect()
    };
    let mut csv = String::from("t,k,mu");
    for i in 0..n {
        csv.push_str(&format!(",phi_{i}"));
    }
    csv.push('\n');
    let mut previous = None;
    for tau in times {
        let frame = spectral_frame(&scenario.graph, tau, previous.as_ref())?;
        for k in 0..n {
            csv.push_str(&format!(
                "{},{k},{}",
                format_float(tau),
                format_float(frame.eigenvalues[k])
            ));
            for i in 0..n {
                csv.push_str(&format!(",{}", format_float(frame.modal.get(i, k))));
            }
            csv.push('\n');
        }
        previous = Some(frame);
    }
    write_file(out, "spectrum.csv", &csv)
}

fn evolve_cmd(
    scenario: &Scenario,
    method: &str,
    from: Option<f64>,
    to: Option<f64>,
    steps: usize,
    quad_k: Option<usize>,
    out: &Path,
) -> Result<()> {
    let u0 = scenario
        .initial
        .as_ref()
        .ok_or_else(|| Error::Scenario("evolve needs an initial condition".into()))?;
    let s = from.unwrap_or(scenario.window.0);
    let t = to.unwrap_or(scenario.window.1);
    let quad = match quad_k {
        Some(k) => QuadratureConfig::new(k)?,
        None => scenario.quad,
    };
    let method = match method {
        "autonomous" => Method::Autonomous,
        "closed" => Method::ClosedForm,
        "trotter" => Method::Trotter(steps),
        "commuting" => Method::Commuting,
        other => return Err(Error::InvalidArgument(format!("unknown method {other}"))),
    };
    let report = evolve::run_method(&scenario.graph, method, s, t, u0, &quad)?;

    let mut diagnostics = String::from("key,value\n");
    diagnostics.push_str(&format!("method,{}\n", report.method));
    diagnostics.push_str(&format!("from,{}\n", format_float(s)));
    diagnostics.push_str(&format!("to,{}\n", format_float(t)));
    if let Some(defect) = report.commutation_defect {
        diagnostics.push_str(&format!("commutation_defect,{}\n", format_float(defect)));
    }
    diagnostics.push_str(&format!(
        "degenerate_matching,{}\n",
        report.degenerate_matching
    ));
    if let Some(k) = report.quad_subintervals {
        diagnostics.push_str(&format!("quad_k,{k}\n"));
    }
    if method == Method::ClosedForm {
        let gap = evolve::closed_vs_trotter_gap(&scenario.graph, s, t, u0, &quad, 1024)?;
        diagnostics.push_str(&format!("closed_vs_trotter_gap,{}\n", format_float(gap)));
    }
    write_file(out, "evolve_result.csv", &report.result.to_csv())?;
    write_file(out, "evolve_diagnostics.csv", &diagnostics)
}

fn sweep(
    scenario: &Scenario,
    from: Option<f64>,
    to: Option<f64>,
    quad_k: Option<usize>,
    steps_list: Option<&str>,
    out: &Path,
) -> Result<()> {
    let u0 = scenario
        .initial
        .as_ref()
        .ok_or_else(|| Error::Scenario("sweep-trotter needs an initial condition".into()))?;
    let s = from.unwrap_or(scenario.window.0);
    let t = to.unwrap_or(scenario.window.1);
    let quad = match quad_k {
        Some(k) => QuadratureConfig::new(k)?,
        None => scenario.quad,
    };
    let steps: Vec<usize> = match steps_list {
        None => (3..=10).map(|k| 1usize << k).collect(),
        Some(list) => list
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad step count '{x}'")))
            })
            .collect::<Result<_>>()?,
    };
    let table = evolve::trotter_error_sweep(&scenario.graph, s, t, u0, &steps, &quad)?;
    let mut csv = String::from("n,l2_error\n");
    for (n, err) in &table.rows {
        csv.push_str(&format!("{n},{}\n", format_float(*err)));
    }
    let mut summary = String::from("key,value\n");
    summary.push_str(&format!("reference,{}\n", table.reference));
    match table.slope {
        Some(slope) => summary.push_str(&format!("slope,{}\n", format_float(slope))),
        None => summary.push_str("slope,undefined\n"),
    }
    write_file(out, "sweep.csv", &csv)?;
    write_file(out, "sweep_summary.csv", &summary)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn boundary_cmd(scenario: &Scenario, at: Option<f64>, out: &Path) -> Result<()> {
    let region = scenario
        .region
        .as_ref()
        .ok_or_else(|| Error::Scenario("boundary needs a region".into()))?;
    let t = at.unwrap_or(scenario.window.0);
    let report = boundary::bound_report(
        &scenario.graph,
        region,
        t,
        scenario.resolution,
        scenario.edge_set,
        scenario.normalization,
    )?;
    let mut csv = String::from("key,value\n");
    csv.push_str(&format!("t,{}\n", format_float(report.t)));
    csv.push_str(&format!("resolution,{}\n", report.resolution));
    csv.push_str(&format!("dirichlet,{}\n", format_float(report.dirichlet)));
    csv.push_str(&format!("vonneumann,{}\n", format_float(report.vonneumann)));
    csv.push_str(&format!(
        "graph_dirichlet,{}\n",
        format_float(report.graph_dirichlet)
    ));
    csv.push_str(&format!(
        "graph_vonneumann,{}\n",
        format_float(report.graph_vonneumann)
    ));
    csv.push_str(&format!("gamma_hat,{}\n", format_float(report.gamma_hat)));
    csv.push_str(&format!(
        "flag_dirichlet_le_min,{}\n",
        flag(report.dirichlet_le_min)
    ));
    csv.push_str(&format!(
        "flag_dirichlet_le_one,{}\n",
        flag(report.dirichlet_le_one)
    ));
    csv.push_str(&format!(
        "flag_vonneumann_le_min,{}\n",
        flag(report.vonneumann_le_min)
    ));
    csv.push_str(&format!(
        "flag_gamma_hat_lt_graph_dirichlet,{}\n",
        flag(report.gamma_hat_lt_graph_dirichlet)
    ));
    csv.push_str(&format!(
        "flag_vonneumann_lt_graph_vonneumann,{}\n",
        flag(report.vonneumann_lt_graph_vonneumann)
    ));
    write_file(out, "boundary_report.csv", &csv)
}

fn simulate(
    scenario: &Scenario,
    paths: Option<usize>,
    seed: Option<u64>,
    from: Option<f64>,
    to: Option<f64>,
    start: Option<&str>,
    out: &Path,
) -> Result<()> {
    let defaults = scenario.stochastic.as_ref();
    let paths = paths
        .or(defaults.map(|d| d.paths))
        .ok_or_else(|| Error::Scenario("simulate needs --paths or a stochastic section".into()))?;
    let seed = seed
        .or(defaults.map(|d| d.seed))
        .ok_or_else(|| Error::Scenario("simulate needs --seed or a stochastic section".into()))?;
    let x0 = match start {
        Some(spec) => parse_point(&scenario.embedding, spec)?,
        None => defaults.map(|d| d.start.clone()).ok_or_else(|| {
            Error::Scenario("simulate needs --start or a stochastic section".into())
        })?,
    };
    let s = from.unwrap_or(scenario.window.0);
    let t = to.unwrap_or(scenario.window.1);
    let cmp = stochastic::validate_markov(&scenario.graph, s, t, &x0, paths, seed, &scenario.quad)?;

    let mut occupancy = String::from("ball,empirical,analytic,stderr\n");
    for i in 0..scenario.embedding.vertices() {
        occupancy.push_str(&format!(
            "{i},{},{},{}\n",
            format_float(cmp.estimate.ball_probabilities[i]),
            format_float(cmp.analytic[i]),
            format_float(cmp.estimate.standard_errors[i])
        ));
    }
    let mut comparison = String::from("key,value\n");
    comparison.push_str(&format!("paths,{paths}\n"));
    comparison.push_str(&format!("seed,{seed}\n"));
    comparison.push_str(&format!("from,{}\n", format_float(s)));
    comparison.push_str(&format!("to,{}\n", format_float(t)));
    comparison.push_str(&format!("tv_distance,{}\n", format_float(cmp.tv_distance)));
    comparison.push_str(&format!(
        "survival_empirical,{}\n",
        format_float(cmp.estimate.survival_atom)
    ));
    comparison.push_str(&format!(
        "survival_expected,{}\n",
        format_float(cmp.survival_expected)
    ));
    comparison.push_str(&format!(
        "survival_sigma,{}\n",
        format_float(cmp.survival_sigma)
    ));
    comparison.push_str(&format!(
        "restart_time,{}\n",
        format_float(cmp.restart_time)
    ));
    comparison.push_str(&format!(
        "chapman_kolmogorov_tv,{}\n",
        format_float(cmp.chapman_kolmogorov_tv)
    ));
    write_file(out, "occupancy.csv", &occupancy)?;
    write_file(out, "comparison.csv", &comparison)
}

fn kernel(
    scenario: &Scenario,
    from: Option<f64>,
    to: Option<f64>,
    start: Option<&str>,
    out: &Path,
) -> Result<()> {
    let x0 = match start {
        Some(spec) => parse_point(&scenario.embedding, spec)?,
        None => scenario
            .stochastic
            .as_ref()
            .map(|d| d.start.clone())
            .ok_or_else(|| {
                Error::Scenario("kernel needs --start or a stochastic section".into())
            })?,
    };
    let s = from.unwrap_or(scenario.window.0);
    let t = to.unwrap_or(scenario.window.1);
    let probs = stochastic::heat_kernel_ball_probs(&scenario.graph, s, &x0, t, &scenario.quad)?;
    let mut csv = String::from("ball,probability\n");
    for (i, p) in probs.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", format_float(*p)));
    }
    write_file(out, "kernel.csv", &csv)
}
