//! Single-product and competing-product SIS dynamics on a graph.
//!
//! Product 1 (the incumbent, `x`) spreads over `A`; Product 2 (the entrant,
//! `y`) spreads over `A + gamma u u^T`. Both compete for the same susceptible
//! share `1 - x - y` of every node.

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::spectral::{dot, pf_eigenpair, Community, PowerOptions, ScaledOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    pub beta1: f64,
    pub delta1: f64,
    pub beta2: f64,
    pub delta2: f64,
}

impl EpidemicParams {
    pub fn new(beta1: f64, delta1: f64, beta2: f64, delta2: f64) -> Result<Self> {
        for (name, v) in [
            ("beta1", beta1),
            ("delta1", delta1),
            ("beta2", beta2),
            ("delta2", delta2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(EpidemicParams {
            beta1,
            delta1,
            beta2,
            delta2,
        })
    }

    /// Unit curing rates; only the ratios `beta / delta` affect equilibria.
    pub fn from_tau(tau1: f64, tau2: f64) -> Result<Self> {
        Self::new(tau1, 1.0, tau2, 1.0)
    }

    pub fn tau1(&self) -> f64 {
        self.beta1 / self.delta1
    }

    pub fn tau2(&self) -> f64 {
        self.beta2 / self.delta2
    }
}

/// Adoption probabilities of both products at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Slack allowed on the state bounds before a state is considered invalid.
const BOUND_SLACK: f64 = 1e-12;

impl StatePair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let s = StatePair { x, y };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_len(self.x.len(), self.y.len())?;
        for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
            if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 || x + y > 1.0 + BOUND_SLACK
            {
                return Err(Error::InvalidState(format!("node {i}: x = {x}, y = {y}")));
            }
        }
        Ok(())
    }

    /// Incumbent at `x_star` and a uniform entrant seed `y0` (capped so that
    /// `x + y <= 1`).
    pub fn seeded(x_star: &[f64], y0: f64) -> Result<Self> {
        let y = x_star.iter().map(|&x| y0.min(0.5 * (1.0 - x))).collect();
        Self::new(x_star.to_vec(), y)
    }

    pub fn avg_x(&self) -> f64 {
        mean(&self.x)
    }

    pub fn avg_y(&self) -> f64 {
        mean(&self.y)
    }
}

/// Whether the incumbent evolves or is held at its initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Incumbent {
    #[default]
    Coupled,
    Frozen,
}

/// Converged (or final) state of a simulation.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub state: StatePair,
    pub avg_x: f64,
    pub avg_y: f64,
    /// Sup-norm residuals of the two fixed-point equations.
    pub residual_x: f64,
    pub residual_y: f64,
    pub steps: usize,
    pub converged: bool,
    /// Step size actually used (after any halvings); 0 for the fixed-point solver.
    pub dt: f64,
}

/// Stopping rule shared by both solvers. A population counts as settled when
/// its per-step change is below `step_tol` and either tiny relative to its
/// own size or the population has fallen below `extinction` (then it is set
/// to exactly zero).
#[derive(Debug, Clone, Copy)]
pub struct Convergence {
    pub step_tol: f64,
    pub rel_tol: f64,
    pub extinction: f64,
}

impl Convergence {
    fn settled(&self, change: f64, size: f64, time_step: f64) -> bool {
        change < self.step_tol && (size == 0.0 || change <= self.rel_tol * time_step * size)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Maximum number of steps at the initial `dt` (doubled on every halving).
    pub steps: usize,
    pub convergence: Convergence,
    pub max_halvings: u32,
    pub incumbent: Incumbent,
    /// A run that settles with a larger equilibrium residual than this is
    /// treated as a step-size artefact and retried with half the step.
    pub residual_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.05,
            steps: 1000,
            convergence: Convergence {
                step_tol: 1e-10,
                rel_tol: 1e-8,
                extinction: 1e-14,
            },
            max_halvings: 4,
            incumbent: Incumbent::Coupled,
            residual_tol: 1e-6,
        }
    }
}

impl IntegratorConfig {
    /// Defaults with a step budget large enough to reach equilibrium.
    pub fn to_equilibrium() -> Self {
        IntegratorConfig {
            steps: 20_000_000,
            ..Self::default()
        }
    }
}

/// Relative slack on `tau lambda = 1` below which the product is treated as dying out.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Fixed point of `x = tau (1 - x) .* A x` (single-product SIS), or zero when
/// `tau lambda(A) <= 1`. Damped iteration from `x = 0.5` until
/// `max_i |x_i - t_i / (1 + t_i)|` is at most `tol`, with `t = tau A x`. This
/// is the plain residual divided by `1 + t_i`, which keeps its rounding floor
/// near machine precision on dense graphs.
pub fn single_sis_fixed_point(g: &Graph, tau: f64, tol: f64) -> Result<Vec<f64>> {
    single_sis_fixed_point_on(g, tau, None, tol)
}

/// As [`single_sis_fixed_point`] on `A + gamma u u^T`.
pub fn single_sis_fixed_point_on(
    g: &Graph,
    tau: f64,
    community: Option<Community>,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let n = g.n();
    let ones = vec![1.0; n];
    let mut op = ScaledOperator::new(g, &ones)?;
    if let Some(c) = community {
        op = op.with_community(c)?;
    }
    let lambda = pf_eigenpair(&op, &PowerOptions::default())?.lambda;
    if tau * lambda <= 1.0 + THRESHOLD_SLACK {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.5; n];
    let mut bx = vec![0.0; n];
    let max_iter = 10_000_000;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        apply_b(g, community, &x, &mut bx);
        residual = 0.0;
        for i in 0..n {
            let t = tau * bx[i];
            let target = t / (1.0 + t);
            residual = f64::max(residual, (x[i] - target).abs());
            x[i] = 0.5 * x[i] + 0.5 * target;
        }
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        what: "single-product fixed point",
        iterations: max_iter,
        residual,
    })
}

/// Sup-norm residuals of `x = tau1 (1-x-y) .* A x` and
/// `y = tau2 (1-x-y) .* (A + gamma u u^T) y`.
pub fn equilibrium_residual(
    g: &Graph,
    params: &EpidemicParams,
    community: Option<Community>,
    state: &StatePair,
) -> Result<(f64, f64)> {
    let n = g.n();
    check_len(n, state.x.len())?;
    check_len(n, state.y.len())?;
    check_community(n, community)?;
    let (mut ax, mut by) = (vec![0.0; n], vec![0.0; n]);
    g.matvec_into(&state.x, &mut ax);
    apply_b(g, community, &state.y, &mut by);
    let (t1, t2) = (params.tau1(), params.tau2());
    let mut rx: f64 = 0.0;
    let mut ry: f64 = 0.0;
    for i in 0..n {
        let s = 1.0 - state.x[i] - state.y[i];
        rx = rx.max((state.x[i] - t1 * s * ax[i]).abs());
        ry = ry.max((state.y[i] - t2 * s * by[i]).abs());
    }
    Ok((rx, ry))
}

/// Classical RK4 integration of the coupled dynamics from `init`.
///
/// A step that leaves the feasible region (beyond rounding slack), or a run
/// that settles somewhere other than an equilibrium, restarts with half the
/// step size, up to `max_halvings` times.
pub fn bisis_integrate(
    g: &Graph,
    params: &EpidemicParams,
    community: Option<Community>,
    init: &StatePair,
    cfg: &IntegratorConfig,
) -> Result<EquilibriumReport> {
    let n = g.n();
    check_len(n, init.x.len())?;
    init.validate()?;
    check_community(n, community)?;
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {}",
            cfg.dt
        )));
    }
    let mut dt = cfg.dt;
    let mut steps = cfg.steps;
    for halving in 0..=cfg.max_halvings {
        let run = rk4_run(g, params, community, init, cfg, dt, steps)
            .map(|(state, taken, converged)| {
                finish(g, params, community, state, taken, converged, dt)
            })
            .transpose()?;
        match run {
            Some(r) if !(r.converged && spurious(&r, cfg)) => return Ok(r),
            _ if halving < cfg.max_halvings => {
                dt *= 0.5;
                steps = steps.saturating_mul(2);
            }
            _ => break,
        }
    }
    Err(Error::InvalidState(format!(
        "integration did not reach a valid equilibrium even at dt = {dt}"
    )))
}

fn spurious(r: &EquilibriumReport, cfg: &IntegratorConfig) -> bool {
    let rx = if cfg.incumbent == Incumbent::Frozen {
        0.0
    } else {
        r.residual_x
    };
    rx.max(r.residual_y) > cfg.residual_tol
}

fn rk4_run(
    g: &Graph,
    params: &EpidemicParams,
    community: Option<Community>,
    init: &StatePair,
    cfg: &IntegratorConfig,
    dt: f64,
    steps: usize,
) -> Option<(StatePair, usize, bool)> {
    let n = g.n();
    let frozen = cfg.incumbent == Incumbent::Frozen;
    let mut x = init.x.clone();
    let mut y = init.y.clone();
    let mut k = [(); 4].map(|_| (vec![0.0; n], vec![0.0; n]));
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut scratch = (vec![0.0; n], vec![0.0; n]);
    let conv = cfg.convergence;

    for step in 1..=steps {
        for stage in 0..4 {
            let h = match stage {
                0 => 0.0,
                1 | 2 => 0.5 * dt,
                _ => dt,
            };
            if stage == 0 {
                xs.copy_from_slice(&x);
                ys.copy_from_slice(&y);
            } else {
                let (px, py) = &k[stage - 1];
                for i in 0..n {
                    xs[i] = x[i] + h * px[i];
                    ys[i] = y[i] + h * py[i];
                }
            }
            let (kx, ky) = &mut k[stage];
            rhs(g, params, community, &xs, &ys, kx, ky, &mut scratch);
            if frozen {
                kx.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let mut dx: f64 = 0.0;
        let mut dy: f64 = 0.0;
        for i in 0..n {
            let nx = x[i] + dt / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
            let ny = y[i] + dt / 6.0 * (k[0].1[i] + 2.0 * k[1].1[i] + 2.0 * k[2].1[i] + k[3].1[i]);
            if !(nx.is_finite() && ny.is_finite())
                || nx < -BOUND_SLACK
                || ny < -BOUND_SLACK
                || nx + ny > 1.0 + BOUND_SLACK
            {
                return None;
            }
            let (nx, ny) = (nx.max(0.0), ny.max(0.0));
            dx = dx.max((nx - x[i]).abs());
            dy = dy.max((ny - y[i]).abs());
            x[i] = nx;
            y[i] = ny;
        }
        let (sx, sy) = (extinguish(&mut x, conv), extinguish(&mut y, conv));
        if conv.settled(dx, sx, dt) && conv.settled(dy, sy, dt) {
            return Some((StatePair { x, y }, step, true));
        }
    }
    Some((StatePair { x, y }, steps, false))
}

#[allow(clippy::too_many_arguments)]
fn rhs(
    g: &Graph,
    p: &EpidemicParams,
    community: Option<Community>,
    x: &[f64],
    y: &[f64],
    fx: &mut [f64],
    fy: &mut [f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) {
    let (ax, by) = scratch;
    g.matvec_into(x, ax);
    apply_b(g, community, y, by);
    for i in 0..x.len() {
        let s = 1.0 - x[i] - y[i];
        fx[i] = p.beta1 * s * ax[i] - p.delta1 * x[i];
        fy[i] = p.beta2 * s * by[i] - p.delta2 * y[i];
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateConfig {
    /// Weight of the new iterate in each damped update.
    pub damping: f64,
    pub max_iter: usize,
    pub convergence: Convergence,
    pub incumbent: Incumbent,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        SteadyStateConfig {
            damping: 0.5,
            max_iter: 5_000_000,
            convergence: Convergence {
                step_tol: 1e-13,
                rel_tol: 1e-10,
                extinction: 1e-14,
            },
            incumbent: Incumbent::Coupled,
        }
    }
}

/// Equilibrium reached from `init` by damped Jacobi iteration of
/// `x <- tau1 (1-y) Ax / (1 + tau1 Ax)` and `y <- tau2 (1-x) By / (1 + tau2 By)`.
///
/// Near a stable equilibrium the damped map behaves like an explicit Euler
/// step of the dynamics with step `damping` (in units of `1/delta`), so it
/// selects the same attractor as [`bisis_integrate`] while having no
/// stiffness limit on large graphs.
pub fn steady_state(
    g: &Graph,
    params: &EpidemicParams,
    community: Option<Community>,
    init: &StatePair,
    cfg: &SteadyStateConfig,
) -> Result<EquilibriumReport> {
    let n = g.n();
    check_len(n, init.x.len())?;
    init.validate()?;
    check_community(n, community)?;
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must be in (0, 1], got {}",
            cfg.damping
        )));
    }
    let (t1, t2) = (params.tau1(), params.tau2());
    let frozen = cfg.incumbent == Incumbent::Frozen;
    let theta = cfg.damping;
    let conv = cfg.convergence;
    let mut x = init.x.clone();
    let mut y = init.y.clone();
    let (mut ax, mut by) = (vec![0.0; n], vec![0.0; n]);
    let mut taken = cfg.max_iter;
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        g.matvec_into(&x, &mut ax);
        apply_b(g, community, &y, &mut by);
        let mut dx: f64 = 0.0;
        let mut dy: f64 = 0.0;
        for i in 0..n {
            let gx = if frozen {
                x[i]
            } else {
                let a = t1 * ax[i];
                (1.0 - y[i]) * a / (1.0 + a)
            };
            let b = t2 * by[i];
            let gy = (1.0 - x[i]) * b / (1.0 + b);
            let mut nx = x[i] + theta * (gx - x[i]);
            let mut ny = y[i] + theta * (gy - y[i]);
            let total = nx + ny;
            if total > 1.0 {
                if frozen {
                    ny = 1.0 - nx;
                } else {
                    nx /= total;
                    ny /= total;
                }
            }
            dx = dx.max((nx - x[i]).abs());
            dy = dy.max((ny - y[i]).abs());
            x[i] = nx;
            y[i] = ny;
        }
        let (sx, sy) = (extinguish(&mut x, conv), extinguish(&mut y, conv));
        if conv.settled(dx, sx, theta) && conv.settled(dy, sy, theta) {
            taken = it;
            converged = true;
            break;
        }
    }
    finish(
        g,
        params,
        community,
        StatePair { x, y },
        taken,
        converged,
        0.0,
    )
}

fn finish(
    g: &Graph,
    params: &EpidemicParams,
    community: Option<Community>,
    state: StatePair,
    steps: usize,
    converged: bool,
    dt: f64,
) -> Result<EquilibriumReport> {
    state.validate()?;
    let (residual_x, residual_y) = equilibrium_residual(g, params, community, &state)?;
    Ok(EquilibriumReport {
        avg_x: state.avg_x(),
        avg_y: state.avg_y(),
        state,
        residual_x,
        residual_y,
        steps,
        converged,
        dt,
    })
}

/// Zeroes a population whose sup norm fell below the extinction floor and
/// returns the (possibly zeroed) sup norm.
fn extinguish(z: &mut [f64], conv: Convergence) -> f64 {
    let size = z.iter().copied().fold(0.0, f64::max);
    if size > 0.0 && size < conv.extinction {
        z.iter_mut().for_each(|v| *v = 0.0);
        return 0.0;
    }
    size
}

fn apply_b(g: &Graph, community: Option<Community>, z: &[f64], out: &mut [f64]) {
    g.matvec_into(z, out);
    if let Some(c) = community {
        let k = c.gamma * dot(c.u, z);
        for (o, ui) in out.iter_mut().zip(c.u) {
            *o += k * ui;
        }
    }
}

fn check_community(n: usize, community: Option<Community>) -> Result<()> {
    if let Some(c) = community {
        check_len(n, c.u.len())?;
        if !(c.gamma.is_finite() && c.gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid gamma {}", c.gamma)));
        }
    }
    Ok(())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synth;

    #[test]
    fn regular_graph_closed_form() {
        for (g, d) in [
            (synth::cycle(10).unwrap(), 2.0),
            (synth::complete(5).unwrap(), 4.0),
            (synth::complete_bipartite(3, 3).unwrap(), 3.0),
        ] {
            let tau = 0.8;
            let x = single_sis_fixed_point(&g, tau, 1e-13).unwrap();
            for xi in x {
                assert!((xi - (1.0 - 1.0 / (tau * d))).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn below_threshold_dies_out() {
        let g = synth::cycle(6).unwrap();
        for tau in [0.4, 0.5] {
            assert!(single_sis_fixed_point(&g, tau, 1e-12)
                .unwrap()
                .iter()
                .all(|&x| x == 0.0));
        }
        assert!(single_sis_fixed_point(&g, -1.0, 1e-12).is_err());
    }

    #[test]
    fn fixed_point_satisfies_equation() {
        let g = synth::dolphins_like(3).unwrap();
        let x = single_sis_fixed_point(&g, 0.4, 1e-12).unwrap();
        let ax = g.matvec(&x).unwrap();
        for i in 0..g.n() {
            let t = 0.4 * ax[i];
            assert!((x[i] - t / (1.0 + t)).abs() <= 1e-12);
            assert!((x[i] - (1.0 - x[i]) * t).abs() <= 1e-12 * (1.0 + t));
            assert!(x[i] > 0.0 && x[i] < 1.0);
        }
    }

    #[test]
    fn state_validation() {
        assert!(StatePair::new(vec![0.6], vec![0.5]).is_err());
        assert!(StatePair::new(vec![-0.1], vec![0.5]).is_err());
        assert!(StatePair::new(vec![0.1, 0.2], vec![0.5]).is_err());
        let s = StatePair::seeded(&[0.999, 0.2], 1e-3).unwrap();
        assert!(s.y[0] < 1e-3 && s.y[1] == 1e-3);
    }

    #[test]
    fn entrant_without_community_dies_out_under_rk4_and_fixed_point() {
        let g = synth::dolphins_like(1).unwrap();
        let p = EpidemicParams::from_tau(0.8, 0.05).unwrap();
        let xs = single_sis_fixed_point(&g, 0.8, 1e-13).unwrap();
        let init = StatePair::seeded(&xs, 1e-3).unwrap();
        let rk = bisis_integrate(&g, &p, None, &init, &IntegratorConfig::to_equilibrium()).unwrap();
        let fp = steady_state(&g, &p, None, &init, &SteadyStateConfig::default()).unwrap();
        for r in [&rk, &fp] {
            assert!(r.converged);
            assert_eq!(r.avg_y, 0.0);
            assert!((r.avg_x - mean(&xs)).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_and_fixed_point_agree_on_coexistence() {
        let g = synth::dolphins_like(1).unwrap();
        let p = EpidemicParams::from_tau(0.3, 0.25).unwrap();
        let u: Vec<f64> = (0..g.n())
            .map(|i| if i % 3 == 0 { 0.6 } else { 0.0 })
            .collect();
        let c = Some(Community::new(0.4, &u));
        let xs = single_sis_fixed_point(&g, 0.3, 1e-13).unwrap();
        let init = StatePair::seeded(&xs, 1e-3).unwrap();
        let rk = bisis_integrate(&g, &p, c, &init, &IntegratorConfig::to_equilibrium()).unwrap();
        let fp = steady_state(&g, &p, c, &init, &SteadyStateConfig::default()).unwrap();
        assert!(rk.converged && fp.converged);
        assert!(fp.residual_x < 1e-10 && fp.residual_y < 1e-10);
        assert!(
            (rk.avg_x - fp.avg_x).abs() < 1e-6,
            "{} {}",
            rk.avg_x,
            fp.avg_x
        );
        assert!(
            (rk.avg_y - fp.avg_y).abs() < 1e-6,
            "{} {}",
            rk.avg_y,
            fp.avg_y
        );
    }

    #[test]
    fn frozen_incumbent_stays_put() {
        let g = synth::cycle(8).unwrap();
        let p = EpidemicParams::from_tau(0.8, 0.9).unwrap();
        let xs = single_sis_fixed_point(&g, 0.8, 1e-13).unwrap();
        let init = StatePair::seeded(&xs, 1e-3).unwrap();
        let cfg = IntegratorConfig {
            incumbent: Incumbent::Frozen,
            ..IntegratorConfig::to_equilibrium()
        };
        let r = bisis_integrate(&g, &p, None, &init, &cfg).unwrap();
        assert_eq!(r.state.x, xs);
        // On the frozen background the entrant sees a 2-regular graph scaled by 1 - x*.
        let y = 1.0 - xs[0] - 1.0 / (0.9 * 2.0);
        assert!((r.avg_y - y).abs() < 1e-8, "{} vs {}", r.avg_y, y);
    }

    #[test]
    fn oversized_step_is_halved() {
        let g = synth::complete(30).unwrap();
        let p = EpidemicParams::from_tau(2.0, 0.01).unwrap();
        let init = StatePair::new(vec![0.01; 30], vec![0.0; 30]).unwrap();
        let cfg = IntegratorConfig {
            dt: 0.2,
            ..IntegratorConfig::to_equilibrium()
        };
        let r = bisis_integrate(&g, &p, None, &init, &cfg).unwrap();
        assert!(r.dt < 0.2);
        assert!(r.converged);
        assert!((r.avg_x - (1.0 - 1.0 / 58.0)).abs() < 1e-8, "{r:?}");
    }
}
