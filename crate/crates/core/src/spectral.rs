//! Perron-Frobenius eigenpairs of `S (A + gamma u u^T)` with `S = diag(s)`.
//!
//! Because `s > 0`, that operator is similar to the symmetric
//! `S^1/2 (A + gamma u u^T) S^1/2`. Power iteration runs on the symmetric form
//! (its Rayleigh quotient is accurate to the square of the residual) and the
//! reported residual is measured on the original operator.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;

/// Community term `gamma u u^T` added to the adjacency matrix.
#[derive(Debug, Clone, Copy)]
pub struct Community<'a> {
    pub gamma: f64,
    pub u: &'a [f64],
}

impl<'a> Community<'a> {
    pub fn new(gamma: f64, u: &'a [f64]) -> Self {
        Community { gamma, u }
    }

    pub(crate) fn is_trivial(&self) -> bool {
        self.gamma == 0.0 || self.u.iter().all(|&x| x == 0.0)
    }
}

/// Matrix-free `z -> s .* (A z + gamma u (u^T z))`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledOperator<'a> {
    graph: &'a Graph,
    scale: &'a [f64],
    community: Option<Community<'a>>,
}

impl<'a> ScaledOperator<'a> {
    /// `scale` is typically `1 - x` and must lie in `[0, 1]`.
    pub fn new(graph: &'a Graph, scale: &'a [f64]) -> Result<Self> {
        check_len(graph.n(), scale.len())?;
        if let Some(bad) = scale.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!(
                "scaling entry {bad} outside [0, 1]"
            )));
        }
        Ok(ScaledOperator {
            graph,
            scale,
            community: None,
        })
    }

    pub fn with_community(mut self, community: Community<'a>) -> Result<Self> {
        check_len(self.graph.n(), community.u.len())?;
        if !(community.gamma >= 0.0 && community.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be finite and non-negative, got {}",
                community.gamma
            )));
        }
        if community.u.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidArgument("u must be non-negative".into()));
        }
        self.community = Some(community);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn scale(&self) -> &'a [f64] {
        self.scale
    }

    pub fn community(&self) -> Option<Community<'a>> {
        self.community
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), z.len())?;
        let mut out = vec![0.0; self.n()];
        self.apply_unscaled(z, &mut out);
        for (o, s) in out.iter_mut().zip(self.scale) {
            *o *= s;
        }
        Ok(out)
    }

    /// `out = (A + gamma u u^T) z`.
    fn apply_unscaled(&self, z: &[f64], out: &mut [f64]) {
        self.graph.matvec_into(z, out);
        if let Some(c) = self.community {
            let k = c.gamma * dot(c.u, z);
            for (o, ui) in out.iter_mut().zip(c.u) {
                *o += k * ui;
            }
        }
    }

    /// Upper bound on the spectral radius (max row sum).
    fn gershgorin(&self) -> f64 {
        let extra = self.community.map(|c| {
            let total: f64 = c.u.iter().sum();
            (c.gamma, total)
        });
        (0..self.n())
            .map(|i| {
                let mut row = self.graph.degree(i) as f64;
                if let (Some((g, total)), Some(c)) = (extra, self.community) {
                    row += g * c.u[i] * total;
                }
                self.scale[i] * row
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    /// Stop when `||M v - lambda v||_2 <= tol` for the unit vector `v`.
    pub tol: f64,
    pub max_iter: usize,
    /// Reject zero scaling entries (which break irreducibility).
    pub strict: bool,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-10,
            max_iter: 100_000,
            strict: true,
        }
    }
}

/// Dominant eigenvalue with its unit-norm, positively oriented eigenvector.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn pf_eigenpair(op: &ScaledOperator, opts: &PowerOptions) -> Result<SpectralPair> {
    let n = op.n();
    if opts.strict {
        if let Some(i) = op.scale.iter().position(|&s| s <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling entry {i} is zero; the operator is reducible"
            )));
        }
    }
    let root: Vec<f64> = op.scale.iter().map(|s| s.sqrt()).collect();
    let bipartite_risk = op.graph.is_bipartite() && op.community.is_none_or(|c| c.is_trivial());
    let shift = if bipartite_risk {
        0.5 * op.gershgorin()
    } else {
        0.0
    };

    let mut z = vec![1.0 / (n as f64).sqrt(); n];
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        // w = S^1/2 B S^1/2 z
        for i in 0..n {
            tmp[i] = root[i] * z[i];
        }
        op.apply_unscaled(&tmp, &mut w);
        for i in 0..n {
            w[i] *= root[i];
        }
        let lambda = dot(&z, &w);

        // Residual of the original operator on v = S^1/2 z / ||S^1/2 z||.
        let vnorm = norm(&tmp);
        let mut r2 = 0.0;
        for i in 0..n {
            let d = root[i] * (w[i] - lambda * z[i]);
            r2 += d * d;
        }
        residual = r2.sqrt() / vnorm;
        if residual <= opts.tol {
            let mut vector: Vec<f64> = tmp.iter().map(|t| t / vnorm).collect();
            if vector.iter().sum::<f64>() < 0.0 {
                vector.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(SpectralPair {
                lambda,
                vector,
                residual,
                iterations: it,
            });
        }

        for i in 0..n {
            w[i] += shift * z[i];
        }
        let wn = norm(&w);
        if wn == 0.0 {
            return Err(Error::InvalidArgument(
                "operator annihilated the iterate".into(),
            ));
        }
        for i in 0..n {
            z[i] = w[i] / wn;
        }
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: opts.max_iter,
        residual,
    })
}

/// Closed-form PF eigenvalue of `S (A + gamma u u^T)` given the PF pair of
/// `S A`, valid when `u` is proportional to `S^-1 v`: the base eigenvalue plus
/// `gamma u^T S u`.
pub fn rank_one_updated_eigenvalue(
    base: &SpectralPair,
    scale: &[f64],
    u: &[f64],
    gamma: f64,
) -> Result<f64> {
    let n = base.vector.len();
    check_len(n, scale.len())?;
    check_len(n, u.len())?;
    let ratios: Vec<f64> = (0..n).map(|i| u[i] * scale[i] / base.vector[i]).collect();
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if hi > 0.0 {
        (hi - lo) / hi
    } else {
        f64::INFINITY
    };
    if spread > 1e-8 {
        return Err(Error::NotProportional { spread });
    }
    let usu: f64 = (0..n).map(|i| u[i] * scale[i] * u[i]).sum();
    Ok(base.lambda + gamma * usu)
}

/// Dense `S^1/2 (A + gamma u u^T) S^1/2`.
pub fn dense_symmetric_form(op: &ScaledOperator) -> DMatrix<f64> {
    let n = op.n();
    let root: Vec<f64> = op.scale.iter().map(|s| s.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for &j in op.graph.neighbors(i) {
            let j = j as usize;
            m[(i, j)] = root[i] * root[j];
        }
    }
    if let Some(c) = op.community {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += c.gamma * root[i] * c.u[i] * c.u[j] * root[j];
            }
        }
    }
    m
}

/// Largest dense problem accepted by [`s_inverse_orthogonality_check`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    /// `max_{k != j} |v_k^T S^-1 v_j|` over unit-norm right eigenvectors.
    pub max_cross: f64,
    /// Largest eigen-residual `||M v_k - lambda_k v_k||` among the vectors used.
    pub max_residual: f64,
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
}

/// Checks that the right eigenvectors of `S (A + gamma u u^T)` are mutually
/// orthogonal in the `S^-1` inner product, using a dense eigendecomposition.
pub fn s_inverse_orthogonality_check(op: &ScaledOperator) -> Result<OrthogonalityReport> {
    let n = op.n();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense check limited to {DENSE_LIMIT} nodes, got {n}"
        )));
    }
    if op.scale.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument("scaling must be positive".into()));
    }
    let eig = SymmetricEigen::new(dense_symmetric_form(op));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if n > 1 {
        let gap = eigenvalues[0] - eigenvalues[1];
        if gap <= 1e-10 * eigenvalues[0].abs().max(1.0) {
            return Err(Error::DegenerateEigenvalue { gap });
        }
    }

    let root: Vec<f64> = op.scale.iter().map(|s| s.sqrt()).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let v: Vec<f64> = (0..n).map(|i| root[i] * eig.eigenvectors[(i, k)]).collect();
            let nv = norm(&v);
            v.into_iter().map(|x| x / nv).collect()
        })
        .collect();

    let mut max_residual: f64 = 0.0;
    for (v, &lambda) in vectors.iter().zip(&eigenvalues) {
        let mv = op.apply(v)?;
        let r = mv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }

    let weighted: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(op.scale).map(|(x, s)| x / s).collect())
        .collect();
    let mut max_cross: f64 = 0.0;
    for k in 0..n {
        for j in (k + 1)..n {
            max_cross = max_cross.max(dot(&vectors[k], &weighted[j]).abs());
        }
    }
    Ok(OrthogonalityReport {
        max_cross,
        max_residual,
        eigenvalues,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
