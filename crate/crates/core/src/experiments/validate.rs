use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Prepared, Scenario};
use crate::allocate::{local_search_from, solve_perturbation_lp, LocalSearchOptions};
use crate::baselines::{baseline_plan, degree_scores, Allocation};
use crate::dynamics::{
    bisis_integrate, equilibrium_residual, steady_state, IntegratorConfig, StatePair,
    SteadyStateConfig,
};
use crate::error::Result;
use crate::seeding::{critical_pair, CriticalOptions};
use crate::spectral::{
    dot, pf_eigenpair, s_inverse_orthogonality_check, PowerOptions, ScaledOperator, DENSE_LIMIT,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Invariant suite on the scenario's graph and parameters.
pub fn validate(prep: &Prepared, s: &Scenario) -> Result<Vec<Check>> {
    let g = prep.graph();
    let n = g.n();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    };

    let deg_sum: usize = g.degrees().iter().sum();
    out.push(check(
        "degree sum equals twice the edge count",
        deg_sum == 2 * g.num_edges(),
        format!("{deg_sum} vs {}", 2 * g.num_edges()),
    ));
    let symmetric = (0..n).all(|i| {
        g.neighbors(i)
            .iter()
            .all(|&j| g.has_edge(j as usize, i) && j as usize != i)
    });
    out.push(check(
        "adjacency symmetric without self-loops",
        symmetric,
        String::new(),
    ));

    let (z1, z2) = (random_vec(&mut rng), random_vec(&mut rng));
    let (a1, a2) = (g.matvec(&z1)?, g.matvec(&z2)?);
    let asym = (dot(&z1, &a2) - dot(&z2, &a1)).abs();
    out.push(check("z1'Az2 = z2'Az1", asym <= 1e-9, format!("{asym:e}")));
    let combo: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let lhs = g.matvec(&combo)?;
    let lin = lhs
        .iter()
        .zip(a1.iter().zip(&a2))
        .map(|(l, (p, q))| (l - (2.0 * p - 3.0 * q)).abs())
        .fold(0.0, f64::max);
    out.push(check("matvec is linear", lin <= 1e-9, format!("{lin:e}")));

    let s_vec: Vec<f64> = prep.x_star.iter().map(|x| 1.0 - x).collect();
    let (rx, _) = equilibrium_residual(
        g,
        &prep.params,
        None,
        &StatePair::new(prep.x_star.clone(), vec![0.0; n])?,
    )?;
    out.push(check(
        "incumbent fixed point residual",
        rx <= 1e-12,
        format!("{rx:e}"),
    ));

    let base = pf_eigenpair(&ScaledOperator::new(g, &s_vec)?, &PowerOptions::default())?;
    out.push(check(
        "PF vector of S A is positive",
        base.vector.iter().all(|&v| v > 0.0),
        format!("residual {:e}", base.residual),
    ));

    let opts = CriticalOptions {
        u_max: s.u_max,
        ..CriticalOptions::default()
    };
    let crit = critical_pair(g, &prep.x_star, s.tau2, &prep.w, &opts)?;
    out.push(check(
        "critical pair sits on the threshold",
        crit.threshold_gap.abs() <= 1e-8,
        format!("gap {:e}", crit.threshold_gap),
    ));
    let brauer = (crit.closed_form_lambda - crit.pf.lambda).abs();
    out.push(check(
        "rank-one closed form matches power iteration",
        brauer <= 1e-8,
        format!("{brauer:e}"),
    ));

    if n <= DENSE_LIMIT {
        let op = ScaledOperator::new(g, &s_vec)?.with_community(crit.plan.community())?;
        let r = s_inverse_orthogonality_check(&op)?;
        out.push(check(
            "eigenvectors are S^-1-orthogonal",
            r.max_cross <= 1e-8,
            format!("{:e}", r.max_cross),
        ));
    }

    let nu = &crit.pf.vector;
    let eps = s
        .epsilons
        .iter()
        .copied()
        .find(|&e| e > 0.0)
        .unwrap_or(0.05);
    let step = solve_perturbation_lp(nu, &prep.w, eps)?;
    let mut beaten = 0;
    for _ in 0..1000 {
        let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-eps..=eps)).collect();
        // Project onto sum w a = 0 by shifting, then clip; skip draws that leave the box.
        let shift = dot(&a, &prep.w) / dot(&prep.w, &prep.w);
        a.iter_mut().zip(&prep.w).for_each(|(x, w)| *x -= shift * w);
        if a.iter().any(|x| x.abs() > eps) {
            continue;
        }
        if dot(&a, nu) > step.objective + 1e-12 {
            beaten += 1;
        }
    }
    out.push(check(
        "LP beats random feasible steps",
        beaten == 0,
        format!("{beaten} better draws"),
    ));

    let ls = local_search_from(
        g,
        &prep.params,
        &prep.x_star,
        &prep.w,
        &LocalSearchOptions {
            clamp: s.clamp.into(),
            critical: opts,
            ..LocalSearchOptions::new(eps)
        },
    )?;
    out.push(check(
        "local search step is supercritical",
        ls.margin > 0.0 && ls.plan.u().iter().all(|u| (0.0..=1.0).contains(u)),
        format!("margin {:.6}", ls.margin),
    ));

    let deg = baseline_plan(
        &degree_scores(g),
        &prep.w,
        crit.plan.budget_spent(),
        crit.plan.gamma(),
        Allocation::Proportional,
    )?;
    let parity = (deg.budget_spent() - crit.plan.budget_spent()).abs() / crit.plan.budget_spent();
    out.push(check(
        "baseline spends the same budget",
        parity <= 1e-10,
        format!("{parity:e}"),
    ));

    let init = StatePair::seeded(&prep.x_star, s.y0)?;
    let fp = steady_state(
        g,
        &prep.params,
        Some(ls.plan.community()),
        &init,
        &SteadyStateConfig::default(),
    )?;
    out.push(check(
        "fixed-point equilibrium residual",
        fp.converged && fp.residual_x.max(fp.residual_y) <= 1e-6,
        format!("{:e}", fp.residual_x.max(fp.residual_y)),
    ));
    if n <= DENSE_LIMIT {
        let rk = bisis_integrate(
            g,
            &prep.params,
            Some(ls.plan.community()),
            &init,
            &IntegratorConfig::to_equilibrium(),
        )?;
        let diff = (rk.avg_y - fp.avg_y).abs().max((rk.avg_x - fp.avg_x).abs());
        out.push(check(
            "RK4 and fixed-point equilibria agree",
            rk.converged && diff <= 1e-5,
            format!("{diff:e}"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_passes() {
        let s = Scenario::default();
        let prep = Prepared::new(&s).unwrap();
        let checks = validate(&prep, &s).unwrap();
        assert!(checks.len() >= 12);
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
