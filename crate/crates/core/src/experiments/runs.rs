use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Direction, Prepared, Scenario, SolverKind};
use crate::allocate::{local_search_from, LocalSearchOptions, LocalSearchResult};
use crate::baselines::{
    baseline_plan, default_netshield_k, degree_scores, evc_scores, netshield_k_for_budget,
    netshield_scores, Allocation, Method,
};
use crate::dynamics::{
    bisis_integrate, equilibrium_residual, single_sis_fixed_point, steady_state, EquilibriumReport,
    IntegratorConfig, StatePair, SteadyStateConfig,
};
use crate::error::{Error, Result};
use crate::seeding::{
    critical_pair, minimum_budget, plan_along, survival_margin, BudgetSearch, CommunityPlan,
    CriticalOptions,
};

/// Margins at or below this are treated as "at threshold" by the shortcut.
const SHORTCUT_MARGIN: f64 = 1e-9;
/// Largest equilibrium residual accepted in emitted rows.
const ROW_RESIDUAL: f64 = 1e-6;
/// Relative budget-parity tolerance.
const BUDGET_RTOL: f64 = 1e-10;

/// Equilibrium of the coupled dynamics for `plan`, started from `x*` and a
/// uniform entrant seed, with the scenario's solver. Fails if the solver
/// does not converge to a state passing the residual re-check.
pub fn equilibrium_for(
    prep: &Prepared,
    s: &Scenario,
    plan: &CommunityPlan,
    margin: f64,
) -> Result<EquilibriumReport> {
    let g = prep.graph();
    let community = Some(plan.community());
    if s.threshold_shortcut && margin <= SHORTCUT_MARGIN {
        let state = StatePair::new(prep.x_star.clone(), vec![0.0; g.n()])?;
        let (residual_x, residual_y) = equilibrium_residual(g, &prep.params, community, &state)?;
        return Ok(EquilibriumReport {
            avg_x: state.avg_x(),
            avg_y: 0.0,
            state,
            residual_x,
            residual_y,
            steps: 0,
            converged: true,
            dt: 0.0,
        });
    }
    let init = StatePair::seeded(&prep.x_star, s.y0)?;
    let report = match s.solver {
        SolverKind::FixedPoint => {
            let cfg = SteadyStateConfig {
                max_iter: s.max_iter,
                ..SteadyStateConfig::default()
            };
            steady_state(g, &prep.params, community, &init, &cfg)?
        }
        SolverKind::Rk4 => {
            let cfg = IntegratorConfig {
                dt: s.dt,
                steps: s.horizon,
                ..IntegratorConfig::default()
            };
            bisis_integrate(g, &prep.params, community, &init, &cfg)?
        }
    };
    let residual = report.residual_x.max(report.residual_y);
    if !report.converged || residual > ROW_RESIDUAL {
        return Err(Error::NonConvergence {
            what: "equilibrium",
            iterations: report.steps,
            residual,
        });
    }
    Ok(report)
}

fn search_options(s: &Scenario, epsilon: f64) -> LocalSearchOptions {
    LocalSearchOptions {
        epsilon,
        clamp: s.clamp.into(),
        steps: s.local_search_steps.max(1),
        critical: CriticalOptions {
            u_max: s.u_max,
            budget: s.budget,
            ..CriticalOptions::default()
        },
    }
}

fn context(what: &str, e: Error) -> Error {
    match e {
        Error::NonConvergence {
            iterations,
            residual,
            ..
        } => Error::Output(format!(
            "{what}: no converged equilibrium after {iterations} iterations (residual {residual:e})"
        )),
        other => Error::Output(format!("{what}: {other}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub avg_x: f64,
    pub avg_y: f64,
    pub margin: f64,
    pub budget_spent: f64,
    pub residual: f64,
    /// Solver iterations (deterministic stand-in for runtime).
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub critical_budget: f64,
    pub gamma: f64,
    pub avg_x_star: f64,
    /// `avg_y` non-decreasing and `avg_x` non-increasing in epsilon.
    pub monotone: bool,
    /// Both strictly.
    pub strictly_monotone: bool,
}

pub fn run_epsilon_sweep(prep: &Prepared, s: &Scenario) -> Result<SweepOutput> {
    let mut eps = s.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    let results: Vec<(LocalSearchResult, EquilibriumReport)> = eps
        .par_iter()
        .map(|&e| {
            let what = format!("epsilon {e}");
            let ls = local_search_from(
                prep.graph(),
                &prep.params,
                &prep.x_star,
                &prep.w,
                &search_options(s, e),
            )
            .map_err(|err| context(&what, err))?;
            let eq =
                equilibrium_for(prep, s, &ls.plan, ls.margin).map_err(|err| context(&what, err))?;
            Ok((ls, eq))
        })
        .collect::<Result<_>>()?;

    let (critical_budget, gamma) = match results.first() {
        Some((ls, _)) => (ls.critical.plan.budget_spent(), ls.critical.plan.gamma()),
        None => {
            let c = critical_pair(
                prep.graph(),
                &prep.x_star,
                s.tau2,
                &prep.w,
                &search_options(s, 0.0).critical,
            )?;
            (c.plan.budget_spent(), c.plan.gamma())
        }
    };
    let mut rows = Vec::with_capacity(results.len());
    for (e, (ls, eq)) in eps.iter().zip(&results) {
        audit_budget(
            ls.plan.budget_spent(),
            critical_budget,
            &format!("epsilon {e}"),
        )?;
        rows.push(SweepRow {
            epsilon: *e,
            avg_x: eq.avg_x,
            avg_y: eq.avg_y,
            margin: ls.margin,
            budget_spent: ls.plan.budget_spent(),
            residual: eq.residual_x.max(eq.residual_y),
            iterations: eq.steps,
        });
    }
    let pairs = rows.windows(2);
    let monotone = pairs
        .clone()
        .all(|p| p[1].avg_y >= p[0].avg_y && p[1].avg_x <= p[0].avg_x);
    let strictly_monotone = pairs
        .clone()
        .all(|p| p[1].avg_y > p[0].avg_y && p[1].avg_x < p[0].avg_x);
    Ok(SweepOutput {
        rows,
        critical_budget,
        gamma,
        avg_x_star: crate::dynamics::mean(&prep.x_star),
        monotone,
        strictly_monotone,
    })
}

fn audit_budget(spent: f64, target: f64, what: &str) -> Result<()> {
    if (spent - target).abs() > BUDGET_RTOL * target.max(f64::MIN_POSITIVE) {
        return Err(Error::Output(format!(
            "{what}: budget parity violated (spent {spent}, expected {target})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapCell {
    pub tau1: f64,
    pub avg_x_star: f64,
    pub budget: f64,
    pub avg_x: f64,
    pub avg_y: f64,
    pub margin: f64,
    pub survived: bool,
    pub below_curve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub tau1: f64,
    pub avg_x_star: f64,
    pub c_min: f64,
}

#[derive(Debug, Clone)]
pub struct HeatmapOutput {
    pub cells: Vec<HeatmapCell>,
    pub curve: Vec<CurvePoint>,
    /// Every cell below the curve has `avg_y < 1e-8`.
    pub below_curve_extinct: bool,
    /// `c_min` strictly increasing with `avg_x_star`.
    pub curve_increasing: bool,
}

/// The participation direction used for heatmap cells.
pub fn heatmap_direction(prep: &Prepared, s: &Scenario) -> Vec<f64> {
    let n = prep.graph().n();
    match s.direction {
        Direction::Uniform => vec![1.0; n],
        Direction::Degree => prep.graph().degrees().iter().map(|&d| d as f64).collect(),
        Direction::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed_d1ec);
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
        }
    }
}

pub fn run_heatmap(prep: &Prepared, s: &Scenario) -> Result<HeatmapOutput> {
    if s.tau1_grid.is_empty() {
        return Err(Error::Config("tau1 grid is empty".into()));
    }
    let g = prep.graph();
    let direction = heatmap_direction(prep, s);
    let rows: Vec<(f64, Vec<f64>, f64)> = s
        .tau1_grid
        .par_iter()
        .map(|&t1| {
            let xs = single_sis_fixed_point(g, t1, 1e-13)?;
            let c = minimum_budget(
                g,
                &xs,
                s.tau2,
                &direction,
                &prep.w,
                &BudgetSearch::default(),
            )?;
            Ok((t1, xs, c))
        })
        .collect::<Result<_>>()?;

    let grid = if s.budget_grid.is_empty() {
        // 2.1 rather than 2 keeps the midpoint off the largest C_min, where the
        // equilibrium sits exactly at threshold and converges only algebraically.
        let top = 2.1 * rows.iter().map(|r| r.2).fold(0.0, f64::max);
        (0..=12).map(|k| top * k as f64 / 12.0).collect()
    } else {
        s.budget_grid.clone()
    };

    let jobs: Vec<(usize, f64)> = (0..rows.len())
        .flat_map(|r| grid.iter().map(move |&c| (r, c)))
        .collect();
    let cells: Vec<HeatmapCell> = jobs
        .par_iter()
        .map(|&(r, c)| {
            let (t1, xs, c_min) = &rows[r];
            let row_prep = Prepared {
                params: crate::dynamics::EpidemicParams::from_tau(*t1, s.tau2)?,
                x_star: xs.clone(),
                ..prep.clone()
            };
            let plan = plan_along(&direction, &prep.w, c)?;
            let margin = survival_margin(g, xs, s.tau2, &plan)?;
            let eq = equilibrium_for(&row_prep, s, &plan, margin)
                .map_err(|e| context(&format!("tau1 {t1}, budget {c}"), e))?;
            Ok(HeatmapCell {
                tau1: *t1,
                avg_x_star: crate::dynamics::mean(xs),
                budget: c,
                avg_x: eq.avg_x,
                avg_y: eq.avg_y,
                margin,
                survived: margin > 0.0,
                below_curve: c < *c_min,
            })
        })
        .collect::<Result<_>>()?;

    let mut curve: Vec<CurvePoint> = rows
        .iter()
        .map(|(t1, xs, c)| CurvePoint {
            tau1: *t1,
            avg_x_star: crate::dynamics::mean(xs),
            c_min: *c,
        })
        .collect();
    curve.sort_by(|a, b| a.avg_x_star.total_cmp(&b.avg_x_star));
    let curve_increasing = curve.windows(2).all(|p| p[1].c_min > p[0].c_min);
    let below_curve_extinct = cells
        .iter()
        .filter(|c| c.below_curve)
        .all(|c| c.avg_y < 1e-8);
    Ok(HeatmapOutput {
        cells,
        curve,
        below_curve_extinct,
        curve_increasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub cost_mode: String,
    pub epsilon: Option<f64>,
    pub netshield_k: Option<usize>,
    pub avg_x: f64,
    pub avg_y: f64,
    pub margin: f64,
    pub budget_spent: f64,
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub rows: Vec<CompareRow>,
    pub critical_budget: f64,
    pub gamma: f64,
    /// For every epsilon: local search is at least every baseline and
    /// strictly above at least one.
    pub dominates: bool,
}

pub fn run_baseline_comparison(prep: &Prepared, s: &Scenario) -> Result<CompareOutput> {
    let methods = s.methods()?;
    if methods.is_empty() {
        return Err(Error::Config("no baselines listed".into()));
    }
    let g = prep.graph();
    let crit = critical_pair(
        g,
        &prep.x_star,
        s.tau2,
        &prep.w,
        &search_options(s, 0.0).critical,
    )?;
    let budget = crit.plan.budget_spent();
    let gamma = crit.plan.gamma();
    let cost_mode = s.cost_mode.name().to_string();

    enum Job {
        Search(f64),
        Baseline(Method),
    }
    let mut jobs: Vec<Job> = s.epsilons.iter().map(|&e| Job::Search(e)).collect();
    jobs.extend(methods.iter().map(|&m| Job::Baseline(m)));

    let rows: Vec<CompareRow> = jobs
        .par_iter()
        .map(|job| -> Result<CompareRow> {
            let (name, epsilon, k, plan, margin) = match *job {
                Job::Search(e) => {
                    let ls = local_search_from(
                        g,
                        &prep.params,
                        &prep.x_star,
                        &prep.w,
                        &search_options(s, e),
                    )?;
                    (
                        "local_search".to_string(),
                        Some(e),
                        None,
                        ls.plan,
                        ls.margin,
                    )
                }
                Job::Baseline(m) => {
                    let (scores, k) = match m {
                        Method::Degree => (degree_scores(g), None),
                        Method::Eigenvector => (evc_scores(g)?, None),
                        Method::NetShield => {
                            let k = match s.netshield_k {
                                Some(k) => k,
                                None => netshield_k_for_budget(
                                    g,
                                    &prep.w,
                                    budget,
                                    gamma,
                                    default_netshield_k(g.n()),
                                )?,
                            };
                            (netshield_scores(g, k)?, Some(k))
                        }
                    };
                    let plan =
                        baseline_plan(&scores, &prep.w, budget, gamma, Allocation::Proportional)?;
                    let margin = survival_margin(g, &prep.x_star, s.tau2, &plan)?;
                    (m.name().to_string(), None, k, plan, margin)
                }
            };
            audit_budget(plan.budget_spent(), budget, &name)?;
            let eq = equilibrium_for(prep, s, &plan, margin).map_err(|e| context(&name, e))?;
            Ok(CompareRow {
                method: name,
                cost_mode: cost_mode.clone(),
                epsilon,
                netshield_k: k,
                avg_x: eq.avg_x,
                avg_y: eq.avg_y,
                margin,
                budget_spent: plan.budget_spent(),
            })
        })
        .collect::<Result<_>>()?;

    let baseline_y: Vec<f64> = rows
        .iter()
        .filter(|r| r.epsilon.is_none())
        .map(|r| r.avg_y)
        .collect();
    let dominates = rows.iter().filter(|r| r.epsilon.is_some()).all(|r| {
        baseline_y.iter().all(|&b| r.avg_y >= b) && baseline_y.iter().any(|&b| r.avg_y > b)
    });
    Ok(CompareOutput {
        rows,
        critical_budget: budget,
        gamma,
        dominates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNodeRow {
    pub node: usize,
    pub node_id: i64,
    pub w: f64,
    pub nu: f64,
    pub u_critical: f64,
    pub alpha: f64,
    pub u: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub search: LocalSearchResult,
    pub equilibrium: EquilibriumReport,
    pub nodes: Vec<PlanNodeRow>,
}

/// Critical pair, one local-search step at `epsilon`, and the resulting equilibrium.
pub fn solve_plan(prep: &Prepared, s: &Scenario, epsilon: f64) -> Result<SolveOutput> {
    let search = local_search_from(
        prep.graph(),
        &prep.params,
        &prep.x_star,
        &prep.w,
        &search_options(s, epsilon),
    )?;
    let equilibrium = equilibrium_for(prep, s, &search.plan, search.margin)?;
    let nodes = (0..prep.graph().n())
        .map(|i| PlanNodeRow {
            node: i,
            node_id: prep.input.node_ids[i],
            w: prep.w[i],
            nu: search.critical.pf.vector[i],
            u_critical: search.critical.plan.u()[i],
            alpha: search.step.alpha[i],
            u: search.plan.u()[i],
            x: equilibrium.state.x[i],
            y: equilibrium.state.y[i],
        })
        .collect();
    Ok(SolveOutput {
        search,
        equilibrium,
        nodes,
    })
}
