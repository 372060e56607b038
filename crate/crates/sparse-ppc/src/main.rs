//! Command-line front end: `simulate` runs the Monte-Carlo experiment,
//! `certify` prints the stability certificates, `solve` computes one packet.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use sparse_ppc::analysis;
use sparse_ppc::controllers::{
    solve_l0_omp, solve_l1l2_fista, synthesize_l0, synthesize_l1l2, FISTA_DEFAULT_MAX_ITER,
    FISTA_DEFAULT_TOL,
};
use sparse_ppc::harness::{
    emit_outputs, run_monte_carlo, ControllerKind, HarnessError, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "sparse-ppc",
    about = "Sparse packetized predictive control simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ControllerArg {
    L0Omp,
    L1l2Fista,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full Monte-Carlo experiment and write CSV/report/plot files.
    Simulate {
        /// JSON config; defaults to the embedded reference experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Override the simulation horizon (steps per run).
        #[arg(long)]
        horizon: Option<usize>,
        /// Worker threads for the run sweep (default: all cores).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Print the stability certificates for every configured W_m.
    Certify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute a single control packet for a given state.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// State vector as comma-separated numbers, e.g. "1.0,0.5,-2,0".
        #[arg(long)]
        state: String,
        /// Which controller to run (default: from the config; l0 when both).
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig, HarnessError> {
    match path {
        Some(p) => SimConfig::from_json_file(p),
        None => {
            let config = SimConfig::reference_experiment();
            config.validate()?;
            Ok(config)
        }
    }
}

fn cmd_simulate(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    runs: Option<usize>,
    horizon: Option<usize>,
    parallel: Option<usize>,
) -> Result<(), HarnessError> {
    let mut config = load_config(&config)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    if let Some(runs) = runs {
        config.runs = runs;
    }
    if let Some(horizon) = horizon {
        config.horizon = horizon;
    }
    config.validate()?;

    let results = match parallel {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_monte_carlo(&config))?
        }
        None => run_monte_carlo(&config)?,
    };

    let written = emit_outputs(&results, &config)?;
    for series in &results.series {
        println!(
            "{} w_m={}: steady-state mean norm {:.4}, mean packet l0 {:.3}, max norm {:.4}",
            series.controller.label(),
            series.w_m,
            series.steady_state_norm(sparse_ppc::harness::STEADY_STATE_WINDOW),
            series.mean_packet_l0_overall(),
            series.max_state_norm
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_certify(config: Option<PathBuf>) -> Result<(), HarnessError> {
    let config = load_config(&config)?;
    let kinds = config.controller.kinds();
    let base_plant = config.build_plant(config.w_m[0])?;
    let q = config.build_q(base_plant.dim())?;

    let l0 = if kinds.contains(&ControllerKind::L0Omp) {
        Some(synthesize_l0(
            &base_plant,
            config.prediction_horizon,
            &q,
            config.xi_scale,
        )?)
    } else {
        None
    };
    let l1l2 = if kinds.contains(&ControllerKind::L1L2Fista) {
        Some(synthesize_l1l2(
            &base_plant,
            config.prediction_horizon,
            &q,
            config.nu,
            config.r,
            config.zeta,
        )?)
    } else {
        None
    };

    for &w_m in &config.w_m {
        let plant = config.build_plant(w_m)?;
        let effective = plant.effective_l2_bound();
        if let Some(design) = &l0 {
            let cert = analysis::l0_certificate(design, &plant, effective)?;
            println!("[certificate l0_omp w_m={w_m} effective_l2_bound={effective}]");
            println!("{cert}\n");
        }
        if let Some(design) = &l1l2 {
            let cert = analysis::l1l2_certificate(design, &plant, effective)?;
            println!("[certificate l1l2_fista w_m={w_m} effective_l2_bound={effective}]");
            println!("zeta = {}", design.zeta());
            println!("{cert}\n");
        }
    }
    Ok(())
}

fn cmd_solve(
    config: Option<PathBuf>,
    state: String,
    controller: Option<ControllerArg>,
) -> Result<(), HarnessError> {
    let config = load_config(&config)?;
    let plant = config.build_plant(config.w_m[0])?;
    let q = config.build_q(plant.dim())?;

    let x: Vec<f64> = state
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Config(format!("bad --state value: {e}")))?;
    if x.len() != plant.dim() {
        return Err(HarnessError::Config(format!(
            "state has length {}, plant dimension is {}",
            x.len(),
            plant.dim()
        )));
    }

    let kind = match controller {
        Some(ControllerArg::L0Omp) => ControllerKind::L0Omp,
        Some(ControllerArg::L1l2Fista) => ControllerKind::L1L2Fista,
        None => config.controller.kinds()[0],
    };

    match kind {
        ControllerKind::L0Omp => {
            let design = synthesize_l0(&plant, config.prediction_horizon, &q, config.xi_scale)?;
            let (packet, report) = solve_l0_omp(&design, &x, 0)?;
            println!("controller = l0_omp");
            println!("packet = {:?}", packet.inputs());
            println!("support_size = {}", report.support_size);
            println!("greedy_iterations = {}", report.iterations);
            println!("residual_sq = {}", report.final_objective_or_residual);
            println!("constraint_budget = {}", design.pi().quad_form(&x));
        }
        ControllerKind::L1L2Fista => {
            let design = synthesize_l1l2(
                &plant,
                config.prediction_horizon,
                &q,
                config.nu,
                config.r,
                config.zeta,
            )?;
            let (packet, report) =
                solve_l1l2_fista(&design, &x, 0, FISTA_DEFAULT_TOL, FISTA_DEFAULT_MAX_ITER)?;
            println!("controller = l1l2_fista");
            println!("packet = {:?}", packet.inputs());
            println!("support_size = {}", report.support_size);
            println!("iterations = {}", report.iterations);
            println!("objective = {}", report.final_objective_or_residual);
            println!("converged = {}", report.converged);
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            runs,
            horizon,
            parallel,
        } => cmd_simulate(config, seed, out, runs, horizon, parallel),
        Command::Certify { config } => cmd_certify(config),
        Command::Solve {
            config,
            state,
            controller,
        } => cmd_solve(config, state, controller),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
