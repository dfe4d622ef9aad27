//! Derived quantities checked against independent dense computations.

use nalgebra::{DMatrix, SymmetricEigen};

use bisis::baselines::evc_scores;
use bisis::dynamics::{
    bisis_integrate, single_sis_fixed_point, steady_state, EpidemicParams, Incumbent,
    IntegratorConfig, StatePair, SteadyStateConfig,
};
use bisis::graph::synth;
use bisis::seeding::{
    critical_pair, minimum_budget, plan_along, BudgetSearch, CommunityPlan, CriticalOptions,
};
use bisis::spectral::{pf_eigenpair, Community, PowerOptions, ScaledOperator};
use bisis::Graph;

/// Dense `S^1/2 (A + gamma u u^T) S^1/2`, built from the edge list.
fn dense(g: &Graph, s: &[f64], gamma: f64, u: &[f64]) -> DMatrix<f64> {
    let n = g.n();
    let mut b = DMatrix::from_fn(n, n, |i, j| gamma * u[i] * u[j]);
    for (i, j) in g.edges() {
        b[(i, j)] += 1.0;
        b[(j, i)] += 1.0;
    }
    let r = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        s.iter().map(|x| x.sqrt()),
    ));
    &r * b * &r
}

fn top_eigen(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    let e = SymmetricEigen::new(m);
    let k = e.eigenvalues.imax();
    let mut v: Vec<f64> = e.eigenvectors.column(k).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (e.eigenvalues[k], v)
}

#[test]
fn evc_matches_dense_eigenvector() {
    let g = synth::dolphins_like(3).unwrap();
    let n = g.n();
    let (lambda, v) = top_eigen(dense(&g, &vec![1.0; n], 0.0, &vec![0.0; n]));
    let evc = evc_scores(&g).unwrap();
    let norm = evc.mu.iter().map(|x| x * x).sum::<f64>().sqrt();
    for i in 0..n {
        assert!((evc.mu[i] / norm - v[i]).abs() < 1e-8, "node {i}");
    }
    let pf = pf_eigenpair(
        &ScaledOperator::new(&g, &vec![1.0; n]).unwrap(),
        &PowerOptions::default(),
    )
    .unwrap();
    assert!((pf.lambda - lambda).abs() < 1e-9);
}

#[test]
fn scaled_community_eigenvalue_matches_dense() {
    let g = synth::random_connected(30, 25, 5).unwrap();
    let n = g.n();
    let s: Vec<f64> = (0..n)
        .map(|i| 0.2 + 0.7 * ((i * 37 % 11) as f64 / 10.0))
        .collect();
    let u: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64) / 7.0).collect();
    for gamma in [0.0, 0.3, 4.0] {
        let (lambda, _) = top_eigen(dense(&g, &s, gamma, &u));
        let op = ScaledOperator::new(&g, &s)
            .unwrap()
            .with_community(Community::new(gamma, &u))
            .unwrap();
        let pf = pf_eigenpair(&op, &PowerOptions::default()).unwrap();
        assert!(
            (pf.lambda - lambda).abs() < 1e-9,
            "gamma {gamma}: {} vs {lambda}",
            pf.lambda
        );
    }
}

#[test]
fn bipartite_spectrum() {
    // K_{3,4}: lambda = sqrt(12), with power iteration needing its shift.
    let g = synth::complete_bipartite(3, 4).unwrap();
    let pf = pf_eigenpair(
        &ScaledOperator::new(&g, &[1.0; 7]).unwrap(),
        &PowerOptions::default(),
    )
    .unwrap();
    assert!((pf.lambda - 12f64.sqrt()).abs() < 1e-9);
}

#[test]
fn critical_gamma_matches_dense_bisection() {
    let g = synth::dolphins_like(1).unwrap();
    let n = g.n();
    let (tau1, tau2) = (0.8, 0.05);
    let x = single_sis_fixed_point(&g, tau1, 1e-13).unwrap();
    let s: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
    let w = vec![1.0; n];
    let crit = critical_pair(&g, &x, tau2, &w, &CriticalOptions::default()).unwrap();
    let u = crit.plan.u();

    // Bisection on gamma for tau2 lambda = 1 using dense eigenvalues.
    let lam = |gamma: f64| top_eigen(dense(&g, &s, gamma, u)).0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while tau2 * lam(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tau2 * lam(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    assert!(
        (crit.plan.gamma() - gamma).abs() < 1e-7 * gamma,
        "{} vs {gamma}",
        crit.plan.gamma()
    );
    // The critical direction is S^-1 v with v the PF vector of S A.
    let (_, v) = top_eigen(dense(&g, &s, 0.0, &vec![0.0; n]));
    // Eigenvector of S A is S^1/2 times the symmetric one.
    let d: Vec<f64> = (0..n).map(|i| v[i] * s[i].sqrt() / s[i]).collect();
    let peak = d.iter().cloned().fold(0.0, f64::max);
    for i in 0..n {
        assert!((u[i] - 0.5 * d[i] / peak).abs() < 1e-8);
    }
}

#[test]
fn minimum_budget_matches_dense_bisection() {
    let g = synth::random_connected(25, 30, 9).unwrap();
    let n = g.n();
    let (tau1, tau2) = (0.7, 0.1);
    let x = single_sis_fixed_point(&g, tau1, 1e-13).unwrap();
    let s: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
    let w: Vec<f64> = (0..n).map(|i| 0.5 + (i % 5) as f64 * 0.25).collect();
    let dir: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
    let c_min = minimum_budget(&g, &x, tau2, &dir, &w, &BudgetSearch::default()).unwrap();

    // gamma u u^T at budget C along dir is (C / sum w d)^2 d d^T.
    let wd: f64 = w.iter().zip(&dir).map(|(a, b)| a * b).sum();
    let lam = |c: f64| top_eigen(dense(&g, &s, (c / wd).powi(2), &dir)).0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while tau2 * lam(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tau2 * lam(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!(
        (c_min - oracle).abs() < 2e-6 * oracle,
        "{c_min} vs {oracle}"
    );
    let at = plan_along(&dir, &w, oracle).unwrap();
    assert!((at.budget_spent() - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn sis_closed_forms() {
    // Regular graphs: x = 1 - 1/(tau d).
    for (g, d) in [
        (synth::cycle(10).unwrap(), 2.0),
        (synth::complete(5).unwrap(), 4.0),
        (synth::complete_bipartite(3, 3).unwrap(), 3.0),
    ] {
        for tau in [0.6, 1.0, 3.0] {
            if tau * d <= 1.0 {
                continue;
            }
            let x = single_sis_fixed_point(&g, tau, 1e-14).unwrap();
            assert!(x
                .iter()
                .all(|&v| (v - (1.0 - 1.0 / (tau * d))).abs() < 1e-10));
        }
    }
    // Star with k leaves: centre c and leaf l solve c = tau k l (1 - c), l = tau c (1 - l).
    let k = 5.0;
    let tau = 0.9;
    let g = synth::star(5).unwrap();
    let x = single_sis_fixed_point(&g, tau, 1e-14).unwrap();
    let (c, l) = (x[0], x[1]);
    assert!((c - tau * k * l * (1.0 - c)).abs() < 1e-12);
    assert!((l - tau * c * (1.0 - l)).abs() < 1e-12);
    // Eliminating l: c = (tau^2 k - 1) / (tau + tau^2 k).
    let closed = (tau * tau * k - 1.0) / (tau + tau * tau * k);
    assert!((c - closed).abs() < 1e-10);
}

#[test]
fn frozen_entrant_on_complete_graph() {
    // K_n, uniform u = a: with x frozen at x*, y solves y = tau2 (s - y) ((n-1) + gamma a^2 n) y,
    // so y = s - 1 / (tau2 ((n-1) + gamma a^2 n)) when positive.
    let n = 8;
    let g = synth::complete(n).unwrap();
    let (tau1, tau2) = (0.5, 0.6);
    let p = EpidemicParams::from_tau(tau1, tau2).unwrap();
    let x = single_sis_fixed_point(&g, tau1, 1e-14).unwrap();
    let s = 1.0 - x[0];
    let (gamma, a) = (2.0, 0.5);
    let u = vec![a; n];
    let rate = (n as f64 - 1.0) + gamma * a * a * n as f64;
    let expect = s - 1.0 / (tau2 * rate);
    assert!(expect > 0.0);
    let init = StatePair::seeded(&x, 1e-3).unwrap();
    let cfg = SteadyStateConfig {
        incumbent: Incumbent::Frozen,
        ..SteadyStateConfig::default()
    };
    let r = steady_state(&g, &p, Some(Community::new(gamma, &u)), &init, &cfg).unwrap();
    assert!(r.state.y.iter().all(|&y| (y - expect).abs() < 1e-10));
    let rk = bisis_integrate(
        &g,
        &p,
        Some(Community::new(gamma, &u)),
        &init,
        &IntegratorConfig {
            incumbent: Incumbent::Frozen,
            ..IntegratorConfig::to_equilibrium()
        },
    )
    .unwrap();
    assert!(rk.state.y.iter().all(|&y| (y - expect).abs() < 1e-8));
}

#[test]
fn coupled_equilibrium_on_complete_graph() {
    // K_n with a uniform community: symmetric equilibria satisfy
    // 1 = tau1 (1-x-y)(n-1) when x > 0 and 1 = tau2 (1-x-y) r2 when y > 0.
    // Both cannot hold unless tau1 (n-1) = tau2 r2, so the product with the
    // larger effective rate takes the whole market: y = 1 - 1/(tau2 r2), x = 0.
    let n = 6;
    let g = synth::complete(n).unwrap();
    let (tau1, tau2) = (0.4, 0.3);
    let p = EpidemicParams::from_tau(tau1, tau2).unwrap();
    let x = single_sis_fixed_point(&g, tau1, 1e-14).unwrap();
    let u = vec![1.0; n];
    let gamma = 1.0;
    let r2 = (n as f64 - 1.0) + gamma * n as f64;
    assert!(tau2 * r2 > tau1 * (n as f64 - 1.0));
    let plan = CommunityPlan::new(gamma, u, vec![1.0; n]).unwrap();
    let init = StatePair::seeded(&x, 1e-3).unwrap();
    let r = steady_state(
        &g,
        &p,
        Some(plan.community()),
        &init,
        &SteadyStateConfig::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert!(r.avg_x < 1e-12);
    assert!((r.avg_y - (1.0 - 1.0 / (tau2 * r2))).abs() < 1e-9);
}
