use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bisis::experiments::{
    run_baseline_comparison, run_epsilon_sweep, run_heatmap, solve_plan, validate, with_pool,
    write_compare_csv, write_curve_csv, write_heatmap_csv, write_manifest, write_node_ids,
    write_plan_csv, write_sweep_csv, Clamp, CostMode, Direction, Manifest, Prepared, Scenario,
    SolverKind,
};
use bisis::graph::{synth, write_edge_list};
use bisis::{Error, Result};

#[derive(Parser)]
#[command(
    name = "bisis",
    version,
    about = "Competing-contagion community seeding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local search at each epsilon; writes sweep.csv.
    Sweep(ScenarioArgs),
    /// Budget by incumbent-strength grid plus the minimum-budget curve.
    Heatmap(ScenarioArgs),
    /// Local search against centrality baselines at equal budget.
    Compare(ScenarioArgs),
    /// One local-search plan with per-node detail; writes plan.csv.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Runs the invariant checks on the scenario's graph.
    Validate(ScenarioArgs),
    /// Writes a generated graph as an edge list.
    Generate {
        #[arg(long, value_enum)]
        family: Family,
        /// Seed for random families, size for the others.
        #[arg(long, default_value_t = 1)]
        arg: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    DolphinsLike,
    FacebookLike,
    Complete,
    Cycle,
}

/// Overrides applied on top of `--config` (or the defaults).
#[derive(Args, Default)]
struct ScenarioArgs {
    /// Scenario file (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list path or `synth:<family>:<arg>`.
    #[arg(long)]
    graph: Option<String>,
    /// auto, zero or one.
    #[arg(long)]
    indexing: Option<String>,
    #[arg(long)]
    largest_component: bool,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long, value_enum)]
    cost_mode: Option<CostArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    baselines: Option<Vec<String>>,
    #[arg(long)]
    netshield_k: Option<usize>,
    #[arg(long)]
    u_max: Option<f64>,
    #[arg(long, value_enum)]
    clamp: Option<ClampArg>,
    #[arg(long)]
    local_search_steps: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    y0: Option<f64>,
    /// Simulate even when the entrant is at or below threshold.
    #[arg(long)]
    no_threshold_shortcut: bool,
    #[arg(long, value_delimiter = ',')]
    tau1_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    budget_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Homogeneous,
    Heterogeneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClampArg {
    PerNode,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    FixedPoint,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Random,
    Uniform,
    Degree,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { s.$field = v.clone(); })*
            };
        }
        set!(
            graph,
            indexing,
            tau1,
            tau2,
            seed,
            epsilons,
            baselines,
            u_max,
            local_search_steps
        );
        set!(dt, horizon, max_iter, y0, tau1_grid, budget_grid, output);
        if self.budget.is_some() {
            s.budget = self.budget;
        }
        if self.netshield_k.is_some() {
            s.netshield_k = self.netshield_k;
        }
        if self.largest_component {
            s.largest_component = true;
        }
        if self.no_threshold_shortcut {
            s.threshold_shortcut = false;
        }
        if let Some(c) = self.cost_mode {
            s.cost_mode = match c {
                CostArg::Homogeneous => CostMode::Homogeneous,
                CostArg::Heterogeneous => CostMode::Heterogeneous,
            };
        }
        if let Some(c) = self.clamp {
            s.clamp = match c {
                ClampArg::PerNode => Clamp::PerNode,
                ClampArg::Uniform => Clamp::Uniform,
            };
        }
        if let Some(k) = self.solver {
            s.solver = match k {
                SolverArg::FixedPoint => SolverKind::FixedPoint,
                SolverArg::Rk4 => SolverKind::Rk4,
            };
        }
        if let Some(d) = self.direction {
            s.direction = match d {
                DirectionArg::Random => Direction::Random,
                DirectionArg::Uniform => Direction::Uniform,
                DirectionArg::Degree => Direction::Degree,
            };
        }
        s.validate()?;
        Ok(s)
    }
}

fn create(dir: &Path, name: &str, manifest: &mut Manifest) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|source| Error::Io { path, source })?;
    manifest.outputs.push(name.to_string());
    Ok(BufWriter::new(file))
}

struct Run {
    scenario: Scenario,
    prep: Prepared,
    manifest: Manifest,
    started: Instant,
}

impl Run {
    fn start(command: &str, args: &ScenarioArgs) -> Result<Self> {
        let started = Instant::now();
        let scenario = args.scenario()?;
        let prep = Prepared::new(&scenario)?;
        std::fs::create_dir_all(&scenario.output).map_err(|source| Error::Io {
            path: scenario.output.clone(),
            source,
        })?;
        let manifest = Manifest::new(command, &scenario, &prep.input);
        Ok(Run {
            scenario,
            prep,
            manifest,
            started,
        })
    }

    fn out(&mut self, name: &str) -> Result<BufWriter<File>> {
        create(&self.scenario.output, name, &mut self.manifest)
    }

    /// Writes node ids and the manifest; returns whether every check passed.
    fn finish(mut self) -> Result<bool> {
        let ids = self.out("node_ids.csv")?;
        write_node_ids(&self.prep.input.node_ids, ids)?;
        self.manifest.wall_seconds = self.started.elapsed().as_secs_f64();
        write_manifest(&self.scenario.output.join("manifest.json"), &self.manifest)?;
        for (name, ok) in &self.manifest.checks {
            println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
        }
        println!("wrote {}", self.scenario.output.display());
        Ok(self.manifest.checks.iter().all(|(_, ok)| *ok))
    }
}

fn sweep(args: &ScenarioArgs) -> Result<bool> {
    let mut run = Run::start("sweep", args)?;
    let out = run_epsilon_sweep(&run.prep, &run.scenario)?;
    println!(
        "critical budget {:.6}, gamma {:.6}, mean x* {:.6}",
        out.critical_budget, out.gamma, out.avg_x_star
    );
    for r in &out.rows {
        println!(
            "eps {:<6} mean x {:.6} mean y {:.6} margin {:.6}",
            r.epsilon, r.avg_x, r.avg_y, r.margin
        );
    }
    write_sweep_csv(&out.rows, run.out("sweep.csv")?)?;
    run.manifest
        .checks
        .push(("mean y non-decreasing in epsilon".into(), out.monotone));
    run.finish()
}

fn heatmap(args: &ScenarioArgs) -> Result<bool> {
    let mut run = Run::start("heatmap", args)?;
    let out = run_heatmap(&run.prep, &run.scenario)?;
    for p in &out.curve {
        println!(
            "tau1 {:<6} mean x* {:.6} minimum budget {:.6}",
            p.tau1, p.avg_x_star, p.c_min
        );
    }
    write_heatmap_csv(&out.cells, run.out("heatmap.csv")?)?;
    write_curve_csv(&out.curve, run.out("curve.csv")?)?;
    run.manifest.checks.push((
        "entrant dies out below the minimum-budget curve".into(),
        out.below_curve_extinct,
    ));
    run.manifest.checks.push((
        "minimum budget increases with incumbent strength".into(),
        out.curve_increasing,
    ));
    run.finish()
}

fn compare(args: &ScenarioArgs) -> Result<bool> {
    let mut run = Run::start("compare", args)?;
    let out = run_baseline_comparison(&run.prep, &run.scenario)?;
    println!(
        "critical budget {:.6}, gamma {:.6}",
        out.critical_budget, out.gamma
    );
    for r in &out.rows {
        let eps = r.epsilon.map(|e| format!(" eps {e}")).unwrap_or_default();
        println!(
            "{:<12}{eps} mean y {:.6} margin {:.6}",
            r.method, r.avg_y, r.margin
        );
    }
    write_compare_csv(&out.rows, run.out("compare.csv")?)?;
    run.manifest.checks.push((
        "local search at least matches every baseline".into(),
        out.dominates,
    ));
    run.finish()
}

fn solve(args: &ScenarioArgs, epsilon: f64) -> Result<bool> {
    let mut run = Run::start("solve", args)?;
    let out = solve_plan(&run.prep, &run.scenario, epsilon)?;
    println!(
        "budget {:.6}, gamma {:.6}, margin {:.6}, mean x {:.6}, mean y {:.6}",
        out.search.plan.budget_spent(),
        out.search.plan.gamma(),
        out.search.margin,
        out.equilibrium.avg_x,
        out.equilibrium.avg_y
    );
    write_plan_csv(&out.nodes, run.out("plan.csv")?)?;
    run.manifest.checks.push((
        "local-search plan is supercritical".into(),
        out.search.margin > 0.0,
    ));
    run.finish()
}

fn validate_cmd(args: &ScenarioArgs) -> Result<bool> {
    let s = args.scenario()?;
    let prep = Prepared::new(&s)?;
    let checks = validate(&prep, &s)?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{tag} {}", c.name);
        } else {
            println!("{tag} {} ({})", c.name, c.detail);
        }
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn generate(family: Family, arg: u64, out: &Path) -> Result<bool> {
    let g = match family {
        Family::DolphinsLike => synth::dolphins_like(arg)?,
        Family::FacebookLike => synth::facebook_like(arg)?,
        Family::Complete => synth::complete(arg as usize)?,
        Family::Cycle => synth::cycle(arg as usize)?,
    };
    let file = File::create(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    write_edge_list(&g, BufWriter::new(file)).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    println!("{} nodes, {} edges", g.n(), g.num_edges());
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(a) => with_pool(|| sweep(&a))?,
        Command::Heatmap(a) => with_pool(|| heatmap(&a))?,
        Command::Compare(a) => with_pool(|| compare(&a))?,
        Command::Solve { scenario, epsilon } => with_pool(|| solve(&scenario, epsilon))?,
        Command::Validate(a) => with_pool(|| validate_cmd(&a))?,
        Command::Generate { family, arg, out } => generate(family, arg, &out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
