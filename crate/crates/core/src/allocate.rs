//! First-order improvement of the critical community: the perturbation LP,
//! the local search built on it, and the per-node sensitivity scan.

use rayon::prelude::*;

use crate::dynamics::{
    single_sis_fixed_point, steady_state, EpidemicParams, Incumbent, StatePair, SteadyStateConfig,
};
use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::seeding::{
    critical_pair, survival_margin_with, susceptible_scale, CommunityPlan, CriticalOptions,
    CriticalPair,
};
use crate::spectral::{dot, pf_eigenpair, Community, ScaledOperator};

/// Solution of `max sum alpha_i nu_i` subject to `sum w_i alpha_i = 0` and box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationStep {
    pub alpha: Vec<f64>,
    pub epsilon: f64,
    pub objective: f64,
    pub budget_residual: f64,
}

/// The LP with the uniform box `alpha_i in [-epsilon, epsilon]`.
pub fn solve_perturbation_lp(nu: &[f64], w: &[f64], epsilon: f64) -> Result<PerturbationStep> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = nu.len();
    let alpha = solve_box_lp(nu, w, &vec![-epsilon; n], &vec![epsilon; n])?;
    Ok(step(nu, w, alpha, epsilon))
}

/// The LP with per-coordinate bounds `lower_i <= alpha_i <= upper_i`, where
/// `lower_i <= 0 <= upper_i` (so `alpha = 0` is feasible).
///
/// Fractional knapsack: every coordinate starts at its lower bound and
/// coordinates are raised to their upper bound in decreasing order of
/// `nu_i / w_i` (ties by ascending index) until the budget balances. At most
/// one coordinate, the pivot, ends strictly inside its box.
pub fn solve_box_lp(nu: &[f64], w: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    let n = nu.len();
    check_len(n, w.len())?;
    check_len(n, lower.len())?;
    check_len(n, upper.len())?;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the budget constraint forces alpha = 0 when n < 2".into(),
        ));
    }
    if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "cost {bad} must be positive"
        )));
    }
    if nu.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("nu must be finite".into()));
    }
    for i in 0..n {
        if !(lower[i] <= 0.0 && upper[i] >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "box [{}, {}] at {i} does not contain 0",
                lower[i], upper[i]
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (nu[b] / w[b]).total_cmp(&(nu[a] / w[a])).then(a.cmp(&b)));
    let mut alpha = lower.to_vec();
    let mut slack: f64 = -lower.iter().zip(w).map(|(l, wi)| l * wi).sum::<f64>();
    let mut pivot = None;
    for &i in &order {
        let room = (upper[i] - lower[i]) * w[i];
        if room >= slack {
            alpha[i] = lower[i] + slack / w[i];
            pivot = Some(i);
            break;
        }
        alpha[i] = upper[i];
        slack -= room;
    }
    // Re-solve the pivot from the others so the budget balances to rounding.
    if let Some(p) = pivot {
        let rest: f64 = (0..n).filter(|&j| j != p).map(|j| w[j] * alpha[j]).sum();
        alpha[p] = (-rest / w[p]).clamp(lower[p], upper[p]);
    }
    Ok(alpha)
}

fn step(nu: &[f64], w: &[f64], alpha: Vec<f64>, epsilon: f64) -> PerturbationStep {
    PerturbationStep {
        objective: dot(&alpha, nu),
        budget_residual: dot(&alpha, w).abs(),
        alpha,
        epsilon,
    }
}

/// How the step size is limited so that `u + alpha` stays in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampRule {
    /// `alpha_i in [-min(eps, u_i), min(eps, 1 - u_i)]`.
    #[default]
    PerNode,
    /// One bound for every node: `eps_eff = min(eps, min u, 1 - max u)`.
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub struct LocalSearchOptions {
    pub epsilon: f64,
    pub clamp: ClampRule,
    /// Number of LP steps; after the first, the eigenvector is recomputed at
    /// the current plan.
    pub steps: usize,
    pub critical: CriticalOptions,
}

impl LocalSearchOptions {
    pub fn new(epsilon: f64) -> Self {
        LocalSearchOptions {
            epsilon,
            clamp: ClampRule::PerNode,
            steps: 1,
            critical: CriticalOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalSearchResult {
    pub x_star: Vec<f64>,
    pub critical: CriticalPair,
    /// The last LP step taken (all zeros when `epsilon = 0`).
    pub step: PerturbationStep,
    pub plan: CommunityPlan,
    /// Survival margin of `plan`.
    pub margin: f64,
}

/// Critical community followed by `steps` budget-neutral LP moves along the
/// PF eigenvector. `gamma` stays at its critical value, so the budget spent
/// is unchanged.
pub fn local_search(
    g: &Graph,
    params: &EpidemicParams,
    w: &[f64],
    opts: &LocalSearchOptions,
) -> Result<LocalSearchResult> {
    let x_star = single_sis_fixed_point(g, params.tau1(), 1e-13)?;
    local_search_from(g, params, &x_star, w, opts)
}

/// As [`local_search`] with a precomputed incumbent equilibrium.
pub fn local_search_from(
    g: &Graph,
    params: &EpidemicParams,
    x_star: &[f64],
    w: &[f64],
    opts: &LocalSearchOptions,
) -> Result<LocalSearchResult> {
    if !(opts.epsilon.is_finite() && opts.epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative, got {}",
            opts.epsilon
        )));
    }
    let tau2 = params.tau2();
    let critical = critical_pair(g, x_star, tau2, w, &opts.critical)?;
    let n = g.n();
    let mut plan = critical.plan.clone();
    let mut last = PerturbationStep {
        alpha: vec![0.0; n],
        epsilon: opts.epsilon,
        objective: 0.0,
        budget_residual: 0.0,
    };
    if opts.epsilon > 0.0 {
        let s = susceptible_scale(x_star)?;
        let mut nu = critical.pf.vector.clone();
        for k in 0..opts.steps.max(1) {
            if k > 0 {
                let op = ScaledOperator::new(g, &s)?.with_community(plan.community())?;
                nu = pf_eigenpair(&op, &opts.critical.power)?.vector;
            }
            let (lower, upper) = bounds(plan.u(), opts.epsilon, opts.clamp);
            let alpha = solve_box_lp(&nu, w, &lower, &upper)?;
            let u: Vec<f64> = plan
                .u()
                .iter()
                .zip(&alpha)
                .map(|(a, b)| (a + b).clamp(0.0, 1.0))
                .collect();
            last = step(&nu, w, alpha, opts.epsilon);
            plan = CommunityPlan::new(plan.gamma(), u, w.to_vec())?;
        }
    }
    let margin = survival_margin_with(g, x_star, tau2, &plan, &opts.critical.power)?;
    Ok(LocalSearchResult {
        x_star: x_star.to_vec(),
        critical,
        step: last,
        plan,
        margin,
    })
}

fn bounds(u: &[f64], eps: f64, rule: ClampRule) -> (Vec<f64>, Vec<f64>) {
    match rule {
        ClampRule::PerNode => (
            u.iter().map(|&x| -eps.min(x)).collect(),
            u.iter().map(|&x| eps.min(1.0 - x)).collect(),
        ),
        ClampRule::Uniform => {
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = u.iter().copied().fold(0.0, f64::max);
            let e = eps.min(lo).min(1.0 - hi);
            (vec![-e; u.len()], vec![e; u.len()])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub node: usize,
    /// Entry of the unit-norm PF eigenvector at the critical plan.
    pub nu_c: f64,
    /// First-order prediction of `d y-bar / d alpha_i`.
    pub predicted_slope: f64,
    /// `y-bar(alpha_i = probe) / probe` from simulation.
    pub measured_slope: f64,
    /// Whether the simulation met its convergence test.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SensitivityOptions {
    pub probe: f64,
    /// The first-order law is derived with the incumbent held at `x*`;
    /// `Coupled` lets both products evolve.
    pub incumbent: Incumbent,
    /// Also run at `probe / 2` and fail if the slope moves by more than `max_probe_change`.
    pub check_halving: bool,
    pub max_probe_change: f64,
    pub solver: SteadyStateConfig,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        SensitivityOptions {
            probe: 1e-3,
            incumbent: Incumbent::Frozen,
            check_halving: true,
            max_probe_change: 0.25,
            solver: SteadyStateConfig {
                max_iter: 50_000_000,
                ..SteadyStateConfig::default()
            },
        }
    }
}

/// Measures how fast the entrant's equilibrium share grows when one node's
/// participation `u_i` is raised by `probe` above the critical plan, and
/// compares it with the first-order prediction
/// `tau2 * 2 gamma (u^T v) v_i * (1^T v) / (N sum_j v_j^3 / s_j^2)`.
pub fn sensitivity_scan(
    g: &Graph,
    params: &EpidemicParams,
    crit: &CriticalPair,
    x_star: &[f64],
    nodes: &[usize],
    opts: &SensitivityOptions,
) -> Result<Vec<SensitivityReport>> {
    let n = g.n();
    check_len(n, x_star.len())?;
    if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("node {bad} out of range")));
    }
    if !(opts.probe > 0.0 && opts.probe.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "probe must be positive, got {}",
            opts.probe
        )));
    }
    let s = susceptible_scale(x_star)?;
    let v = &crit.pf.vector;
    let u = crit.plan.u();
    let gamma = crit.plan.gamma();
    let tau2 = params.tau2();
    let shape: f64 = (0..n).map(|j| v[j].powi(3) / (s[j] * s[j])).sum();
    let sum_v: f64 = v.iter().sum();
    let zeta = tau2 * sum_v / (n as f64 * shape);
    let uv = dot(u, v);
    let predicted = |i: usize| zeta * 2.0 * gamma * uv * v[i];

    let measure = |i: usize, probe: f64| -> Result<(f64, bool)> {
        let mut up = u.to_vec();
        up[i] += probe;
        if up[i] > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "probe pushes u_{i} above 1"
            )));
        }
        // Warm start on the first-order equilibrium shape.
        let scale = predicted(i) * probe * n as f64 / sum_v;
        let y0: Vec<f64> = (0..n)
            .map(|j| (scale * v[j]).clamp(1e-12, 0.5 * s[j]))
            .collect();
        let init = StatePair::new(x_star.to_vec(), y0)?;
        let cfg = SteadyStateConfig {
            incumbent: opts.incumbent,
            ..opts.solver
        };
        let r = steady_state(g, params, Some(Community::new(gamma, &up)), &init, &cfg)?;
        Ok((r.avg_y / probe, r.converged))
    };

    nodes
        .par_iter()
        .map(|&i| {
            let (slope, converged) = measure(i, opts.probe)?;
            if opts.check_halving {
                let (half, _) = measure(i, 0.5 * opts.probe)?;
                let change = if half > 0.0 {
                    (slope - half).abs() / half
                } else {
                    f64::INFINITY
                };
                if change > opts.max_probe_change {
                    return Err(Error::ProbeTooLarge {
                        probe: opts.probe,
                        change,
                    });
                }
            }
            Ok(SensitivityReport {
                node: i,
                nu_c: v[i],
                predicted_slope: predicted(i),
                measured_slope: slope,
                converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synth;

    #[test]
    fn two_node_swap() {
        let s = solve_perturbation_lp(&[2.0, 1.0], &[1.0, 1.0], 0.1).unwrap();
        assert_eq!(s.alpha, vec![0.1, -0.1]);
        assert!((s.objective - 0.1).abs() < 1e-15);
        assert_eq!(s.budget_residual, 0.0);
    }

    #[test]
    fn uniform_tie_break_by_id() {
        let s = solve_perturbation_lp(&[1.0; 4], &[1.0; 4], 0.2).unwrap();
        assert_eq!(s.alpha, vec![0.2, 0.2, -0.2, -0.2]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn single_interior_pivot() {
        let nu = [5.0, 4.0, 3.0, 2.0, 1.0];
        let w = [1.0, 2.0, 1.0, 1.0, 1.0];
        let s = solve_perturbation_lp(&nu, &w, 1.0).unwrap();
        let interior = s.alpha.iter().filter(|a| a.abs() < 1.0 - 1e-12).count();
        assert!(interior <= 1);
        assert!(s.budget_residual < 1e-12);
    }

    #[test]
    fn lp_errors() {
        assert!(solve_perturbation_lp(&[1.0], &[1.0], 0.1).is_err());
        assert!(solve_perturbation_lp(&[1.0, 2.0], &[1.0, 0.0], 0.1).is_err());
        assert!(solve_perturbation_lp(&[1.0, 2.0], &[1.0, 1.0], 0.0).is_err());
        assert!(solve_box_lp(&[1.0, 2.0], &[1.0, 1.0], &[0.1, 0.0], &[1.0, 1.0]).is_err());
    }

    fn dolphins() -> (Graph, EpidemicParams, Vec<f64>) {
        let g = synth::dolphins_like(1).unwrap();
        let p = EpidemicParams::from_tau(0.8, 0.05).unwrap();
        let w = vec![1.0; g.n()];
        (g, p, w)
    }

    #[test]
    fn zero_epsilon_keeps_critical_plan() {
        let (g, p, w) = dolphins();
        let r = local_search(&g, &p, &w, &LocalSearchOptions::new(0.0)).unwrap();
        assert_eq!(r.plan, r.critical.plan);
        assert!(r.margin.abs() < 1e-9);
    }

    #[test]
    fn local_search_is_feasible_and_supercritical() {
        let (g, p, w) = dolphins();
        for eps in [0.02, 0.1, 0.3] {
            for clamp in [ClampRule::PerNode, ClampRule::Uniform] {
                let opts = LocalSearchOptions {
                    clamp,
                    ..LocalSearchOptions::new(eps)
                };
                let r = local_search(&g, &p, &w, &opts).unwrap();
                assert!(r.plan.u().iter().all(|&x| (0.0..=1.0).contains(&x)));
                assert!(r.plan.budget_spent() <= r.critical.plan.budget_spent() * (1.0 + 1e-12));
                assert!(r.step.objective > 0.0);
                assert!(r.margin > 0.0, "eps {eps} {clamp:?} margin {}", r.margin);
                let a_max = r.step.alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                assert!(a_max <= eps + 1e-15);
            }
        }
    }

    #[test]
    fn iterated_search_does_not_lose_margin() {
        let (g, p, w) = dolphins();
        let one = local_search(&g, &p, &w, &LocalSearchOptions::new(0.05)).unwrap();
        let three = local_search(
            &g,
            &p,
            &w,
            &LocalSearchOptions {
                steps: 3,
                ..LocalSearchOptions::new(0.05)
            },
        )
        .unwrap();
        assert!(three.margin >= one.margin);
    }

    #[test]
    fn symmetric_nodes_have_equal_slopes() {
        let g = synth::complete(6).unwrap();
        let p = EpidemicParams::from_tau(0.4, 0.1).unwrap();
        let x = single_sis_fixed_point(&g, 0.4, 1e-13).unwrap();
        let w = vec![1.0; 6];
        let crit = critical_pair(&g, &x, 0.1, &w, &CriticalOptions::default()).unwrap();
        let r =
            sensitivity_scan(&g, &p, &crit, &x, &[0, 3], &SensitivityOptions::default()).unwrap();
        assert!((r[0].measured_slope / r[1].measured_slope - 1.0).abs() < 0.01);
        assert!(r.iter().all(|s| s.predicted_slope > 0.0));
        // On this small instance the first-order prediction is also accurate in absolute terms.
        assert!((r[0].measured_slope / r[0].predicted_slope - 1.0).abs() < 0.05);
    }
}
