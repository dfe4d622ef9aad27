//! Centrality-based community plans used as comparison baselines.

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::seeding::CommunityPlan;
use crate::spectral::{pf_eigenpair, PowerOptions, ScaledOperator, SpectralPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Degree,
    Eigenvector,
    NetShield,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Degree => "degree",
            Method::Eigenvector => "evc",
            Method::NetShield => "netshield",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(Method::Degree),
            "evc" | "eigenvector" => Ok(Method::Eigenvector),
            "netshield" => Ok(Method::NetShield),
            other => Err(Error::InvalidArgument(format!(
                "unknown baseline {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub mu: Vec<f64>,
    pub method: Method,
    /// NetShield's chosen nodes, in selection order.
    pub selected: Option<Vec<usize>>,
}

pub fn degree_scores(g: &Graph) -> CentralityScores {
    CentralityScores {
        mu: g.degrees().iter().map(|&d| d as f64).collect(),
        method: Method::Degree,
        selected: None,
    }
}

fn adjacency_pf(g: &Graph) -> Result<SpectralPair> {
    let ones = vec![1.0; g.n()];
    pf_eigenpair(&ScaledOperator::new(g, &ones)?, &PowerOptions::default())
}

/// PF eigenvector of `A` (unit norm, positive).
pub fn evc_scores(g: &Graph) -> Result<CentralityScores> {
    Ok(CentralityScores {
        mu: adjacency_pf(g)?.vector,
        method: Method::Eigenvector,
        selected: None,
    })
}

/// Shield value `sum_{i in S} 2 lambda v_i^2 - sum_{i, j in S} a_ij v_i v_j`.
pub fn shield_value(g: &Graph, lambda: f64, v: &[f64], set: &[usize]) -> f64 {
    let own: f64 = set.iter().map(|&i| 2.0 * lambda * v[i] * v[i]).sum();
    let mut pairs = 0.0;
    for &i in set {
        for &j in set {
            if g.has_edge(i, j) {
                pairs += v[i] * v[j];
            }
        }
    }
    own - pairs
}

/// Greedy NetShield order: the node with the largest marginal shield gain is
/// added each round (ties to the lowest id). Returns nodes with their gains.
pub fn netshield_order(g: &Graph, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let pf = adjacency_pf(g)?;
    let v = &pf.vector;
    let mut gain: Vec<f64> = v.iter().map(|x| 2.0 * pf.lambda * x * x).collect();
    let mut taken = vec![false; n];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if taken[j] {
                continue;
            }
            match best {
                None => best = Some(j),
                Some(b) if gain[j] > gain[b] + 1e-12 * gain[b].abs().max(1e-300) => best = Some(j),
                _ => {}
            }
        }
        let i = best.expect("k <= n leaves a candidate");
        taken[i] = true;
        order.push((i, gain[i]));
        for &j in g.neighbors(i) {
            let j = j as usize;
            gain[j] -= 2.0 * v[i] * v[j];
        }
    }
    Ok(order)
}

/// NetShield's `k` nodes, scored by their PF entries `v_i`. Marginal shield
/// gains can be exactly zero for selected nodes (e.g. a star's leaves once
/// the centre is taken), so they cannot serve as allocation weights.
pub fn netshield_scores(g: &Graph, k: usize) -> Result<CentralityScores> {
    let order = netshield_order(g, k)?;
    let v = adjacency_pf(g)?.vector;
    let mut mu = vec![0.0; g.n()];
    for &(i, _) in &order {
        mu[i] = v[i];
    }
    Ok(CentralityScores {
        mu,
        method: Method::NetShield,
        selected: Some(order.into_iter().map(|(i, _)| i).collect()),
    })
}

/// Default NetShield size, `ceil(0.05 n)`.
pub fn default_netshield_k(n: usize) -> usize {
    (n as f64 * 0.05).ceil().max(1.0) as usize
}

/// Smallest `k >= k_min` whose NetShield selection can absorb `budget` with
/// every `u_i <= 1` (that is, `sqrt(gamma) * sum_{selected} w_i >= budget`).
pub fn netshield_k_for_budget(
    g: &Graph,
    w: &[f64],
    budget: f64,
    gamma: f64,
    k_min: usize,
) -> Result<usize> {
    check_len(g.n(), w.len())?;
    let order = netshield_order(g, g.n())?;
    let need = budget / gamma.sqrt();
    let mut total = 0.0;
    for (idx, &(i, _)) in order.iter().enumerate() {
        total += w[i];
        if idx + 1 >= k_min && total >= need {
            return Ok(idx + 1);
        }
    }
    Err(Error::UnspendableBudget {
        surplus: gamma.sqrt() * (need - total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Allocation {
    /// `u_i = C mu_i / (sqrt(gamma) sum_j mu_j w_j)`, clamped at 1 with the
    /// excess redistributed over the unclamped nodes.
    #[default]
    Proportional,
    /// `u_i = C mu_i w_i / sum_j mu_j w_j`, clamped at 1 without redistribution.
    Literal,
}

pub fn baseline_plan(
    scores: &CentralityScores,
    w: &[f64],
    budget: f64,
    gamma: f64,
    allocation: Allocation,
) -> Result<CommunityPlan> {
    let n = scores.mu.len();
    check_len(n, w.len())?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid budget {budget}")));
    }
    let mu = &scores.mu;
    if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || mu.iter().all(|&m| m == 0.0) {
        return Err(Error::InvalidArgument(
            "scores must be non-negative and not all zero".into(),
        ));
    }

    let u = match allocation {
        Allocation::Literal => {
            let denom: f64 = mu.iter().zip(w).map(|(m, wi)| m * wi).sum();
            mu.iter()
                .zip(w)
                .map(|(m, wi)| (budget * m * wi / denom).min(1.0))
                .collect()
        }
        Allocation::Proportional => {
            let target = budget / gamma.sqrt();
            let mut u = vec![0.0; n];
            let mut clamped = vec![false; n];
            loop {
                let fixed: f64 = (0..n).filter(|&i| clamped[i]).map(|i| w[i]).sum();
                let remaining = target - fixed;
                let free: f64 = (0..n).filter(|&i| !clamped[i]).map(|i| mu[i] * w[i]).sum();
                if free == 0.0 {
                    if remaining > 1e-12 * target {
                        return Err(Error::UnspendableBudget {
                            surplus: gamma.sqrt() * remaining,
                        });
                    }
                    break;
                }
                let t = remaining / free;
                let mut changed = false;
                for i in 0..n {
                    if clamped[i] {
                        u[i] = 1.0;
                    } else {
                        u[i] = t * mu[i];
                        if u[i] > 1.0 {
                            clamped[i] = true;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            u
        }
    };
    CommunityPlan::new(gamma, u, w.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synth;

    #[test]
    fn degree_examples() {
        assert_eq!(degree_scores(&synth::complete(3).unwrap()).mu, vec![2.0; 3]);
        assert_eq!(
            degree_scores(&synth::star(4).unwrap()).mu,
            vec![4.0, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn evc_on_star_and_complete() {
        let s = evc_scores(&synth::star(4).unwrap()).unwrap();
        assert!((s.mu[0] / s.mu[1] - 2.0).abs() < 1e-9);
        let k = evc_scores(&synth::complete(5).unwrap()).unwrap();
        assert!(k.mu.iter().all(|&m| (m - k.mu[0]).abs() < 1e-12));
    }

    #[test]
    fn netshield_star() {
        let s = netshield_scores(&synth::star(4).unwrap(), 2).unwrap();
        assert_eq!(s.selected, Some(vec![0, 1]));
        assert_eq!(s.mu.iter().filter(|&&m| m > 0.0).count(), 2);
        let one = netshield_scores(&synth::star(4).unwrap(), 1).unwrap();
        assert_eq!(one.selected, Some(vec![0]));
        assert!(netshield_scores(&synth::star(4).unwrap(), 6).is_err());
        assert!(netshield_scores(&synth::star(4).unwrap(), 0).is_err());
    }

    #[test]
    fn proportional_plan_spends_budget() {
        let scores = CentralityScores {
            mu: vec![1.0; 4],
            method: Method::Degree,
            selected: None,
        };
        let p = baseline_plan(&scores, &[1.0; 4], 1.0, 4.0, Allocation::Proportional).unwrap();
        assert!(p.u().iter().all(|&u| (u - 0.125).abs() < 1e-15));
        assert!((p.budget_spent() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamping_redistributes() {
        let scores = CentralityScores {
            mu: vec![10.0, 1.0, 1.0, 0.0],
            method: Method::Degree,
            selected: None,
        };
        let p = baseline_plan(&scores, &[1.0; 4], 2.0, 1.0, Allocation::Proportional).unwrap();
        assert_eq!(p.u()[0], 1.0);
        assert!((p.u()[1] - 0.5).abs() < 1e-15);
        assert_eq!(p.u()[3], 0.0);
        assert!((p.budget_spent() - 2.0).abs() < 1e-12);
        assert!(matches!(
            baseline_plan(&scores, &[1.0; 4], 3.5, 1.0, Allocation::Proportional),
            Err(Error::UnspendableBudget { .. })
        ));
    }

    #[test]
    fn netshield_k_grows_to_fit_budget() {
        let g = synth::dolphins_like(1).unwrap();
        let w = vec![1.0; g.n()];
        let k = netshield_k_for_budget(&g, &w, 10.0, 1.0, 4).unwrap();
        assert_eq!(k, 10);
        let k = netshield_k_for_budget(&g, &w, 1.0, 1.0, 4).unwrap();
        assert_eq!(k, 4);
    }
}
