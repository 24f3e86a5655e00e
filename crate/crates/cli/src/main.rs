//! `dic`: command-line front end for the solvers and the simulator.
//!
//! Every command reads a scenario file, applies `--set key=value` overrides
//! on top of it, writes its CSV files into `--out`, and writes
//! `manifest.json` last.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dic_core::hjbqvi::{solve_tc, sweep_tc_loading, SolverConfig, TcSolution};
use dic_core::no_tc::{solve_no_tc, sweep_loading, LoadingSweepRow};
use dic_core::scenario::{arithmetic_grid, default_phi_grid};
use dic_core::sim::{
    band_strategy, default_horizon, no_tc_strategy, simulate_outcomes, summarize, SimConfig, Strategy,
};
use dic_core::{ModelParams, Scenario};
use log::info;
use serde::Serialize;

use output::{phi_tag, Csv};

/// Tail fraction used to pick the default simulation horizon.
const HORIZON_TAIL: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "dic", version, about = "Optimal investment, consumption and insurance with durable goods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the frictionless problem at the scenario's loading factor.
    SolveNtc {
        #[command(flatten)]
        common: Common,
    },
    /// Frictionless solutions over a grid of loading factors.
    SweepLoading {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        phi: PhiGrid,
    },
    /// Transaction-cost solve at the scenario's loading factor.
    SolveTc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Transaction-cost solves over a grid of loading factors.
    SweepTcLoading {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        phi: PhiGrid,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo estimate of the expected discounted utility of a strategy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a scenario and report every violated constraint.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override a model parameter of the scenario, e.g. `--set theta=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct PhiGrid {
    /// Loading factors as `start:step:stop`; defaults to the scenario's grid.
    #[arg(long, value_name = "A:STEP:B")]
    phi_grid: Option<String>,
}

#[derive(Args)]
struct SolverArgs {
    /// Grid nodes.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Right end of the grid (default: a multiple of the frictionless target).
    #[arg(long)]
    z_max: Option<f64>,
    /// Stop the outer iteration when the sup-norm change falls below this.
    #[arg(long)]
    tol_outer: Option<f64>,
    /// Stop the policy iteration when the sup-norm change falls below this.
    #[arg(long)]
    tol_inner: Option<f64>,
    /// Stop PSOR when the largest update of a sweep falls below this.
    #[arg(long)]
    tol_psor: Option<f64>,
    /// PSOR relaxation factor in (0, 2).
    #[arg(long)]
    omega: Option<f64>,
    /// Cap on outer iterations.
    #[arg(long)]
    max_outer: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            grid_n: self.grid_n.unwrap_or(d.grid_n),
            z_max: self.z_max.or(d.z_max),
            tol_outer: self.tol_outer.unwrap_or(d.tol_outer),
            tol_inner: self.tol_inner.unwrap_or(d.tol_inner),
            tol_psor: self.tol_psor.unwrap_or(d.tol_psor),
            omega: self.omega.unwrap_or(d.omega),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            ..d
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StrategyKind {
    /// Frictionless constant fractions, rebalanced every step.
    NoTc,
    /// No-trading band of the transaction-cost solution.
    Band,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value_t = StrategyKind::NoTc)]
    strategy: StrategyKind,
    /// Number of simulated paths.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    /// Time step in years.
    #[arg(long, default_value_t = 1.0 / 250.0)]
    dt: f64,
    /// Horizon in years (default: where the discounted tail drops below 0.1%).
    #[arg(long)]
    horizon: Option<f64>,
    /// Seed; path `i` uses stream `i` of this seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Initial wealth.
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    /// Initial durable price.
    #[arg(long, default_value_t = 1.0)]
    p0: f64,
    /// Initial durable stock (default: the strategy's own target).
    #[arg(long)]
    k0: Option<f64>,
    /// Also write the terminal state of every path to `paths.csv`.
    #[arg(long)]
    dump_paths: bool,
}

#[derive(Serialize)]
struct GridInfo {
    phi: f64,
    theta: f64,
    z_max: f64,
    nodes: usize,
    spacing: f64,
}

impl GridInfo {
    fn of(sol: &TcSolution) -> Self {
        Self {
            phi: sol.params.phi,
            theta: sol.grid.theta,
            z_max: sol.grid.z_max,
            nodes: sol.grid.len(),
            spacing: sol.grid.h,
        }
    }
}

#[derive(Serialize)]
struct SimulationInfo {
    strategy: StrategyKind,
    config: SimConfig,
    x0: f64,
    p0: f64,
    k0: f64,
    horizon_tail: Option<f64>,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    arguments: Vec<String>,
    scenario_file: PathBuf,
    scenario_name: String,
    /// Scenario exactly as read from the file.
    file_values: toml::Table,
    /// Command-line overrides, applied on top of `file_values`.
    overrides: toml::Table,
    params: ModelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    grids: Vec<GridInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulationInfo>,
    files: Vec<PathBuf>,
    wall_time_seconds: f64,
}

/// Scenario with overrides applied, plus what the manifest needs about it.
struct Loaded {
    scenario: Scenario,
    file_values: toml::Table,
    overrides: toml::Table,
}

fn parse_overrides(items: &[String]) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    for item in items {
        let Some((key, value)) = item.split_once('=') else {
            bail!("override `{item}` is not of the form KEY=VALUE");
        };
        let key = key.trim();
        if key == "name" || key == "phi_grid" {
            bail!("override `{item}`: `{key}` cannot be set with --set");
        }
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("override `{item}`: value is not a number"))?;
        table.insert(key.to_string(), toml::Value::Float(value));
    }
    Ok(table)
}

fn load(common: &Common) -> Result<Loaded> {
    let path = &common.scenario;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let overrides = parse_overrides(&common.overrides)?;
    let scenario = if overrides.is_empty() {
        Scenario::parse(&text)
    } else {
        let mut table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing {}", path.display()))?;
        table.extend(overrides.clone());
        Scenario::parse(&toml::to_string(&table)?)
    }
    .with_context(|| format!("scenario {}", path.display()))?;
    let file_values = text.parse().with_context(|| format!("parsing {}", path.display()))?;
    Ok(Loaded {
        scenario,
        file_values,
        overrides,
    })
}

fn phi_grid(arg: &PhiGrid, scenario: &Scenario) -> Result<Vec<f64>> {
    if let Some(text) = &arg.phi_grid {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, step, b] = parts[..] else {
            bail!("--phi-grid `{text}` is not of the form start:step:stop");
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("--phi-grid `{text}`: `{s}` is not a number"))
        };
        return Ok(arithmetic_grid(num(a)?, num(step)?, num(b)?)?);
    }
    Ok(if scenario.phi_grid.is_empty() {
        default_phi_grid()
    } else {
        scenario.phi_grid.clone()
    })
}

/// Collects output files and writes the manifest when done.
struct Run {
    started: Instant,
    out: PathBuf,
    files: Vec<PathBuf>,
    manifest: Manifest,
}

impl Run {
    fn start(command: &'static str, common: &Common, loaded: &Loaded) -> Result<Self> {
        std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Self {
            started: Instant::now(),
            out: common.out.clone(),
            files: Vec::new(),
            manifest: Manifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                arguments: std::env::args().skip(1).collect(),
                scenario_file: common.scenario.clone(),
                scenario_name: loaded.scenario.name.clone(),
                file_values: loaded.file_values.clone(),
                overrides: loaded.overrides.clone(),
                params: loaded.scenario.params,
                phi_grid: None,
                solver: None,
                grids: Vec::new(),
                simulation: None,
                files: Vec::new(),
                wall_time_seconds: 0.0,
            },
        })
    }

    fn save(&mut self, csv: &Csv, name: &str) -> Result<()> {
        let path = csv.save(&self.out, name)?;
        info!("wrote {}", path.display());
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.files = self.files;
        self.manifest.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let path = self.out.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        Ok(())
    }
}

fn save_tc(run: &mut Run, sol: &TcSolution) -> Result<()> {
    let tag = phi_tag(sol.params.phi);
    run.save(&output::tc_values(sol), &format!("tc_value_{tag}.csv"))?;
    run.save(&output::tc_trace(sol), &format!("tc_trace_{tag}.csv"))?;
    run.manifest.grids.push(GridInfo::of(sol));
    Ok(())
}

fn report_tc(sol: &TcSolution) {
    let b = &sol.bands;
    println!(
        "phi = {}: no-trading zone [{:.6}, {:.6}], z* = {:.6}, M = {:.8}, {} outer iterations",
        sol.params.phi,
        b.z_low,
        b.z_high,
        b.z_star,
        b.m,
        sol.outer_iterations()
    );
}

fn solve_ntc_cmd(common: &Common) -> Result<()> {
    let loaded = load(common)?;
    let mut run = Run::start("solve-ntc", common, &loaded)?;
    let params = loaded.scenario.params;
    let sol = solve_no_tc(&params)?;
    let row = LoadingSweepRow {
        phi: params.phi,
        alpha_c: sol.alpha_c,
        alpha_pi1: sol.alpha_pi1,
        alpha_k: sol.alpha_k,
        alpha_q: sol.alpha_q,
        alpha_v: sol.alpha_v,
        objective: sol.objective,
    };
    println!(
        "alpha_c = {:.10}, alpha_pi1 = {:.10}, alpha_k = {:.10}, alpha_q = {:.10}, alpha_v = {:.10}",
        sol.alpha_c, sol.alpha_pi1, sol.alpha_k, sol.alpha_q, sol.alpha_v
    );
    run.save(&output::loading_sweep(&[row]), &format!("ntc_{}.csv", loaded.scenario.name))?;
    run.finish()
}

fn sweep_loading_cmd(common: &Common, phi: &PhiGrid) -> Result<()> {
    let loaded = load(common)?;
    let mut run = Run::start("sweep-loading", common, &loaded)?;
    let grid = phi_grid(phi, &loaded.scenario)?;
    let scenario = Scenario::new(loaded.scenario.name.clone(), loaded.scenario.params, grid.clone())?;
    let rows = sweep_loading(&scenario)?;
    run.manifest.phi_grid = Some(grid);
    run.save(&output::loading_sweep(&rows), &format!("sweep_loading_{}.csv", scenario.name))?;
    run.finish()
}

fn solve_tc_cmd(common: &Common, solver: &SolverArgs) -> Result<()> {
    let loaded = load(common)?;
    let mut run = Run::start("solve-tc", common, &loaded)?;
    let config = solver.config();
    run.manifest.solver = Some(config);
    let sol = solve_tc(&loaded.scenario.params, &config)?;
    report_tc(&sol);
    save_tc(&mut run, &sol)?;
    run.save(&output::tc_summary([&sol]), "tc_summary.csv")?;
    run.finish()
}

fn sweep_tc_cmd(common: &Common, phi: &PhiGrid, solver: &SolverArgs) -> Result<()> {
    let loaded = load(common)?;
    let mut run = Run::start("sweep-tc-loading", common, &loaded)?;
    let grid = phi_grid(phi, &loaded.scenario)?;
    let config = solver.config();
    run.manifest.phi_grid = Some(grid.clone());
    run.manifest.solver = Some(config);
    let sols = sweep_tc_loading(&loaded.scenario.params, &grid, &config)?;
    for sol in &sols {
        report_tc(sol);
        save_tc(&mut run, sol)?;
    }
    run.save(&output::tc_summary(&sols), "tc_summary.csv")?;
    run.finish()
}

fn simulate_cmd(common: &Common, sim: &SimArgs, solver: &SolverArgs) -> Result<()> {
    let loaded = load(common)?;
    let mut run = Run::start("simulate", common, &loaded)?;
    let params = loaded.scenario.params;
    let ntc = solve_no_tc(&params)?;
    let (strategy, k0): (Box<dyn Strategy>, f64) = match sim.strategy {
        StrategyKind::NoTc => (
            Box::new(no_tc_strategy(&ntc)),
            sim.k0.unwrap_or(ntc.alpha_k * sim.x0 / sim.p0),
        ),
        StrategyKind::Band => {
            let config = solver.config();
            run.manifest.solver = Some(config);
            let sol = solve_tc(&params, &config)?;
            report_tc(&sol);
            run.manifest.grids.push(GridInfo::of(&sol));
            let k0 = sim.k0.unwrap_or(sim.x0 / (sol.bands.z_star * sim.p0));
            (Box::new(band_strategy(&sol.bands, &sol.policy, &sol.grid)?), k0)
        }
    };
    let horizon = match sim.horizon {
        Some(t) => t,
        None => default_horizon(&params, &ntc, HORIZON_TAIL)?,
    };
    let config = SimConfig {
        horizon,
        dt: sim.dt,
        n_paths: sim.paths,
        seed: sim.seed,
    };
    run.manifest.simulation = Some(SimulationInfo {
        strategy: sim.strategy,
        config,
        x0: sim.x0,
        p0: sim.p0,
        k0,
        horizon_tail: sim.horizon.is_none().then_some(HORIZON_TAIL),
    });
    let outcomes = simulate_outcomes(&params, strategy.as_ref(), (sim.x0, sim.p0, k0), &config)?;
    let res = summarize(&outcomes, &params, &ntc, &config)?;
    println!(
        "mean = {:.8} +- {:.8} (stderr), truncation bound {:.3e}, {} insolvent paths",
        res.mean, res.stderr, res.truncation_bound, res.solvency_violations
    );
    run.save(&output::simulation(&res), "simulation.csv")?;
    if sim.dump_paths {
        run.save(&output::path_dump(&outcomes), "paths.csv")?;
    }
    run.finish()
}

fn validate_cmd(common: &Common) -> Result<()> {
    let loaded = load(common)?;
    let params = loaded.scenario.params;
    let tv = params.transversality();
    if !tv.holds {
        bail!(
            "transversality fails: discount rate falls short of the value growth rate by {:e}",
            -tv.margin
        );
    }
    println!(
        "{}: scenario `{}` is valid (transversality margin {:.6e})",
        common.scenario.display(),
        loaded.scenario.name,
        tv.margin
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::SolveNtc { common } => solve_ntc_cmd(common),
        Command::SweepLoading { common, phi } => sweep_loading_cmd(common, phi),
        Command::SolveTc { common, solver } => solve_tc_cmd(common, solver),
        Command::SweepTcLoading { common, phi, solver } => sweep_tc_cmd(common, phi, solver),
        Command::Simulate { common, sim, solver } => simulate_cmd(common, sim, solver),
        Command::Validate { common } => validate_cmd(common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
