//! Scenario configuration and the batch runs built from it: epsilon sweeps,
//! budget heatmaps and baseline comparisons, with CSV and manifest output.

mod output;
mod runs;
mod validate;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocate::ClampRule;
use crate::baselines::Method;
use crate::dynamics::{single_sis_fixed_point, EpidemicParams};
use crate::error::{Error, Result};
use crate::graph::{load_edge_list, synth, Graph, Indexing, LoadOptions};
use crate::seeding::{heterogeneous_costs, homogeneous_costs};

pub use output::{
    write_compare_csv, write_curve_csv, write_heatmap_csv, write_manifest, write_node_ids,
    write_plan_csv, write_sweep_csv, Manifest, SCHEMA_COMPARE, SCHEMA_CURVE, SCHEMA_HEATMAP,
    SCHEMA_PLAN, SCHEMA_SWEEP,
};
pub use runs::{
    equilibrium_for, heatmap_direction, run_baseline_comparison, run_epsilon_sweep, run_heatmap,
    solve_plan, CompareOutput, CompareRow, CurvePoint, HeatmapCell, HeatmapOutput, PlanNodeRow,
    SolveOutput, SweepOutput, SweepRow,
};
pub use validate::{validate, Check};

/// Environment variable that sets the worker-pool size.
pub const WORKERS_ENV: &str = "BISIS_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    #[default]
    Homogeneous,
    Heterogeneous,
}

impl CostMode {
    pub fn name(self) -> &'static str {
        match self {
            CostMode::Homogeneous => "homogeneous",
            CostMode::Heterogeneous => "heterogeneous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    FixedPoint,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Clamp {
    #[default]
    PerNode,
    Uniform,
}

impl From<Clamp> for ClampRule {
    fn from(c: Clamp) -> Self {
        match c {
            Clamp::PerNode => ClampRule::PerNode,
            Clamp::Uniform => ClampRule::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Seeded uniform draws in `[0, 1]`.
    #[default]
    Random,
    Uniform,
    Degree,
}

/// Everything a run needs. Loadable from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Edge-list path, or `synth:<family>:<arg>` for a generated graph
    /// (`dolphins-like:<seed>`, `facebook-like:<seed>`, `complete:<n>`, `cycle:<n>`).
    pub graph: String,
    pub indexing: String,
    pub largest_component: bool,
    pub tau1: f64,
    pub tau2: f64,
    pub cost_mode: CostMode,
    pub seed: u64,
    /// Optional budget; it must equal the critical budget.
    pub budget: Option<f64>,
    pub epsilons: Vec<f64>,
    pub baselines: Vec<String>,
    pub netshield_k: Option<usize>,
    /// Largest entry of the critical `u`.
    pub u_max: f64,
    pub clamp: Clamp,
    pub local_search_steps: usize,
    pub solver: SolverKind,
    pub dt: f64,
    /// RK4 step cap (runs stop early once converged).
    pub horizon: usize,
    /// Fixed-point iteration cap.
    pub max_iter: usize,
    /// Initial entrant share at every node.
    pub y0: f64,
    /// Report `(x*, 0)` without simulating when the survival margin is at most 1e-9.
    pub threshold_shortcut: bool,
    pub tau1_grid: Vec<f64>,
    /// Empty means an automatic grid around the largest minimum budget.
    pub budget_grid: Vec<f64>,
    pub direction: Direction,
    pub output: PathBuf,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            graph: "synth:dolphins-like:1".into(),
            indexing: "auto".into(),
            largest_component: false,
            tau1: 0.8,
            tau2: 0.05,
            cost_mode: CostMode::Homogeneous,
            seed: 42,
            budget: None,
            epsilons: vec![0.02, 0.05, 0.1, 0.15, 0.2],
            baselines: vec!["degree".into(), "evc".into(), "netshield".into()],
            netshield_k: None,
            u_max: 0.5,
            clamp: Clamp::PerNode,
            local_search_steps: 1,
            solver: SolverKind::FixedPoint,
            dt: 0.05,
            horizon: 2_000_000,
            max_iter: 5_000_000,
            y0: 1e-3,
            threshold_shortcut: true,
            tau1_grid: vec![0.3, 0.45, 0.6, 0.8, 1.0],
            budget_grid: Vec::new(),
            direction: Direction::Random,
            output: PathBuf::from("out"),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau1 > 0.0 && self.tau1.is_finite()) {
            return bad(format!("tau1 must be positive, got {}", self.tau1));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return bad(format!("tau2 must be positive, got {}", self.tau2));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e >= 0.0 && **e < 1.0)) {
            return bad(format!("epsilon {e} outside [0, 1)"));
        }
        if let Some(t) = self
            .tau1_grid
            .iter()
            .find(|t| !(**t > 0.0 && t.is_finite()))
        {
            return bad(format!("tau1 grid value {t} must be positive"));
        }
        if let Some(c) = self
            .budget_grid
            .iter()
            .find(|c| !(**c >= 0.0 && c.is_finite()))
        {
            return bad(format!("budget grid value {c} must be non-negative"));
        }
        for b in &self.baselines {
            b.parse::<Method>()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.indexing
            .parse::<Indexing>()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.u_max > 0.0 && self.u_max <= 1.0) {
            return bad(format!("u_max must be in (0, 1], got {}", self.u_max));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.y0 > 0.0 && self.y0 < 0.5) {
            return bad(format!("y0 must be in (0, 0.5), got {}", self.y0));
        }
        Ok(())
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.baselines.iter().map(|b| b.parse()).collect()
    }

    pub fn params(&self) -> Result<EpidemicParams> {
        EpidemicParams::from_tau(self.tau1, self.tau2)
    }

    pub fn costs(&self, n: usize) -> Vec<f64> {
        match self.cost_mode {
            CostMode::Homogeneous => homogeneous_costs(n),
            CostMode::Heterogeneous => heterogeneous_costs(n, self.seed),
        }
    }
}

/// A graph together with where it came from.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub graph: Graph,
    /// File id of every internal node (identity for generated graphs).
    pub node_ids: Vec<i64>,
    pub source: String,
    pub duplicates_dropped: usize,
}

pub fn load_graph(source: &str, indexing: &str, largest_component: bool) -> Result<GraphInput> {
    if let Some(spec) = source.strip_prefix("synth:") {
        let (family, arg) = spec.split_once(':').unwrap_or((spec, "1"));
        let arg: u64 = arg
            .parse()
            .map_err(|_| Error::Config(format!("bad synthetic graph argument {arg:?}")))?;
        let graph = match family {
            "dolphins-like" => synth::dolphins_like(arg)?,
            "facebook-like" => synth::facebook_like(arg)?,
            "complete" => synth::complete(arg as usize)?,
            "cycle" => synth::cycle(arg as usize)?,
            other => return Err(Error::Config(format!("unknown synthetic family {other:?}"))),
        };
        return Ok(GraphInput {
            node_ids: (0..graph.n() as i64).collect(),
            graph,
            source: source.to_string(),
            duplicates_dropped: 0,
        });
    }
    let opts = LoadOptions {
        indexing: indexing.parse()?,
        strict: true,
        largest_component,
    };
    let loaded = load_edge_list(source, &opts)?;
    Ok(GraphInput {
        graph: loaded.graph,
        node_ids: loaded.node_ids,
        source: source.to_string(),
        duplicates_dropped: loaded.duplicates_dropped,
    })
}

/// Shared inputs of every run on one scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub input: GraphInput,
    pub params: EpidemicParams,
    pub w: Vec<f64>,
    pub x_star: Vec<f64>,
}

impl Prepared {
    pub fn new(s: &Scenario) -> Result<Self> {
        s.validate()?;
        let input = load_graph(&s.graph, &s.indexing, s.largest_component)?;
        Self::with_graph(s, input)
    }

    pub fn with_graph(s: &Scenario, input: GraphInput) -> Result<Self> {
        let params = s.params()?;
        let w = s.costs(input.graph.n());
        let x_star = single_sis_fixed_point(&input.graph, s.tau1, 1e-13)?;
        Ok(Prepared {
            input,
            params,
            w,
            x_star,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.input.graph
    }

    pub fn with_costs(&self, mode: CostMode, seed: u64) -> Self {
        let n = self.graph().n();
        let w = match mode {
            CostMode::Homogeneous => homogeneous_costs(n),
            CostMode::Heterogeneous => heterogeneous_costs(n, seed),
        };
        Prepared { w, ..self.clone() }
    }
}

/// Runs `f` on a worker pool sized by [`WORKERS_ENV`] (default: all cores).
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let k: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer")))?;
        builder = builder.num_threads(k.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}
