//! Community plans, the critical community, survival margins and minimum budgets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::spectral::{
    pf_eigenpair, rank_one_updated_eigenvalue, Community, PowerOptions, ScaledOperator,
    SpectralPair,
};

/// Community formed by the entrant: influence rate `gamma`, participation
/// probabilities `u` and per-user recruiting costs `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPlan {
    gamma: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    budget_spent: f64,
}

impl CommunityPlan {
    pub fn new(gamma: f64, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        check_len(u.len(), w.len())?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if let Some(bad) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidArgument(format!(
                "u entry {bad} outside [0, 1]"
            )));
        }
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "cost {bad} must be positive"
            )));
        }
        let budget_spent = budget(gamma, &u, &w);
        Ok(CommunityPlan {
            gamma,
            u,
            w,
            budget_spent,
        })
    }

    /// No community at all.
    pub fn empty(w: Vec<f64>) -> Result<Self> {
        Self::new(0.0, vec![0.0; w.len()], w)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// `sqrt(gamma) * sum_i w_i u_i`.
    pub fn budget_spent(&self) -> f64 {
        self.budget_spent
    }

    pub fn community(&self) -> Community<'_> {
        Community::new(self.gamma, &self.u)
    }

    /// The equivalent plan `(gamma / c^2, c u)`, which has the same operator
    /// and the same budget.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {c}"
            )));
        }
        Self::new(
            self.gamma / (c * c),
            self.u.iter().map(|x| c * x).collect(),
            self.w.clone(),
        )
    }
}

pub(crate) fn budget(gamma: f64, u: &[f64], w: &[f64]) -> f64 {
    gamma.sqrt() * u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
}

/// Unit recruiting costs.
pub fn homogeneous_costs(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Costs drawn uniformly from `[0.5, 1.5]`.
pub fn heterogeneous_costs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.5..=1.5)).collect()
}

/// `1 - x*`, validated.
pub fn susceptible_scale(x_star: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = x_star.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!(
            "x* entry {bad} outside [0, 1)"
        )));
    }
    Ok(x_star.iter().map(|x| 1.0 - x).collect())
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalOptions {
    /// Largest participation probability of the critical community. The
    /// scale of `u` is otherwise free: the budget does not depend on it.
    pub u_max: f64,
    /// Budget the caller expects to spend. It must match the critical budget.
    pub budget: Option<f64>,
    pub gap_tol: f64,
    pub power: PowerOptions,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            u_max: 0.5,
            budget: None,
            gap_tol: 1e-9,
            power: PowerOptions::default(),
        }
    }
}

/// The community that puts the entrant exactly at its survival threshold.
#[derive(Debug, Clone)]
pub struct CriticalPair {
    pub plan: CommunityPlan,
    /// PF pair of `S (A + gamma u u^T)` at the critical plan.
    pub pf: SpectralPair,
    /// PF pair of `S A`.
    pub base: SpectralPair,
    /// `tau2 lambda - 1` measured by power iteration.
    pub threshold_gap: f64,
    /// The same eigenvalue from the rank-one closed form.
    pub closed_form_lambda: f64,
}

/// Relative slack when comparing a requested budget with the critical one.
const BUDGET_RTOL: f64 = 1e-9;

/// Builds the critical community: `u` proportional to `S^-1 v` (with `v` the
/// PF vector of `S A` and `S = diag(1 - x*)`) and
/// `gamma = (1/tau2 - lambda(S A)) / (u^T S u)`.
pub fn critical_pair(
    g: &Graph,
    x_star: &[f64],
    tau2: f64,
    w: &[f64],
    opts: &CriticalOptions,
) -> Result<CriticalPair> {
    let n = g.n();
    check_len(n, x_star.len())?;
    check_len(n, w.len())?;
    if !(tau2.is_finite() && tau2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau2 must be positive, got {tau2}"
        )));
    }
    if !(opts.u_max > 0.0 && opts.u_max <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "u_max must be in (0, 1], got {}",
            opts.u_max
        )));
    }
    let s = susceptible_scale(x_star)?;
    let base = pf_eigenpair(&ScaledOperator::new(g, &s)?, &opts.power)?;
    let value = tau2 * base.lambda;
    if value > 1.0 + opts.gap_tol {
        return Err(Error::AlreadySupercritical { value });
    }

    let raw: Vec<f64> = base.vector.iter().zip(&s).map(|(v, si)| v / si).collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let u: Vec<f64> = raw
        .iter()
        .map(|r| (opts.u_max * r / peak).min(opts.u_max))
        .collect();
    let usu: f64 = u.iter().zip(&s).map(|(ui, si)| ui * si * ui).sum();
    let gamma = ((1.0 / tau2 - base.lambda) / usu).max(0.0);
    let plan = CommunityPlan::new(gamma, u, w.to_vec())?;

    if let Some(requested) = opts.budget {
        let critical = plan.budget_spent();
        if (requested - critical).abs() > BUDGET_RTOL * critical.max(1e-300) {
            return Err(Error::InfeasibleBudget {
                requested,
                critical,
            });
        }
    }

    let closed_form_lambda = rank_one_updated_eigenvalue(&base, &s, plan.u(), gamma)?;
    let op = ScaledOperator::new(g, &s)?.with_community(plan.community())?;
    let pf = pf_eigenpair(&op, &opts.power)?;
    let threshold_gap = tau2 * pf.lambda - 1.0;
    if threshold_gap.abs() > opts.gap_tol {
        return Err(Error::NonConvergence {
            what: "critical threshold",
            iterations: pf.iterations,
            residual: threshold_gap.abs(),
        });
    }
    Ok(CriticalPair {
        plan,
        pf,
        base,
        threshold_gap,
        closed_form_lambda,
    })
}

/// `tau2 lambda(S (A + gamma u u^T)) - 1`; positive means the entrant survives.
pub fn survival_margin(g: &Graph, x_star: &[f64], tau2: f64, plan: &CommunityPlan) -> Result<f64> {
    survival_margin_with(g, x_star, tau2, plan, &PowerOptions::default())
}

pub fn survival_margin_with(
    g: &Graph,
    x_star: &[f64],
    tau2: f64,
    plan: &CommunityPlan,
    power: &PowerOptions,
) -> Result<f64> {
    check_len(g.n(), plan.u().len())?;
    let s = susceptible_scale(x_star)?;
    let op = ScaledOperator::new(g, &s)?.with_community(plan.community())?;
    Ok(tau2 * pf_eigenpair(&op, power)?.lambda - 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct BudgetSearch {
    /// Relative width of the final bracket.
    pub rtol: f64,
    pub max_doublings: u32,
    pub power: PowerOptions,
}

impl Default for BudgetSearch {
    fn default() -> Self {
        BudgetSearch {
            rtol: 1e-6,
            max_doublings: 200,
            power: PowerOptions::default(),
        }
    }
}

/// The plan spending `budget` along `direction` (rescaled to a maximum of 1),
/// with `gamma` set by the budget identity.
pub fn plan_along(direction: &[f64], w: &[f64], budget: f64) -> Result<CommunityPlan> {
    let peak = direction.iter().copied().fold(0.0, f64::max);
    if direction.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || peak == 0.0 {
        return Err(Error::InvalidArgument(
            "direction must be non-negative and nonzero".into(),
        ));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid budget {budget}")));
    }
    let u: Vec<f64> = direction.iter().map(|d| d / peak).collect();
    let cost: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    CommunityPlan::new((budget / cost).powi(2), u, w.to_vec())
}

/// Smallest budget that brings the entrant to its threshold when spent along
/// `direction`. Since only the product `gamma u u^T` matters and the budget
/// is `sqrt(gamma) sum w u`, the answer does not depend on the scale of
/// `direction`.
pub fn minimum_budget(
    g: &Graph,
    x_star: &[f64],
    tau2: f64,
    direction: &[f64],
    w: &[f64],
    search: &BudgetSearch,
) -> Result<f64> {
    check_len(g.n(), direction.len())?;
    check_len(g.n(), w.len())?;
    let margin = |c: f64| -> Result<f64> {
        let plan = plan_along(direction, w, c)?;
        survival_margin_with(g, x_star, tau2, &plan, &search.power)
    };
    if margin(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = plan_along(direction, w, 0.0)?
        .u()
        .iter()
        .zip(w)
        .map(|(a, b)| a * b)
        .sum::<f64>();
    let mut doublings = 0;
    while margin(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > search.max_doublings {
            return Err(Error::NonConvergence {
                what: "minimum budget bracket",
                iterations: doublings as usize,
                residual: hi,
            });
        }
    }
    while hi - lo > search.rtol * hi {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
