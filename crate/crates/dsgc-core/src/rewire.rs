//! Graph rewiring: walk-based sign refinement and density augmentation.
//!
//! A walk is positive when every edge on it is positive, and negative
//! when exactly one edge is negative. The refinement step scores node
//! pairs by a length-weighted difference of positive and negative walk
//! counts and rewrites edge signs where the score clears a threshold.
//! The augmentation step then densifies both channels with matrix
//! powers of the refined adjacency.

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Violation sign-refinement parameters.
#[derive(Debug, Clone, Copy)]
pub struct VsrParams {
    /// Maximum walk length considered.
    pub l_max: usize,
    /// Score above which a pair becomes a positive edge.
    pub delta_plus: f64,
    /// Score below which a pair becomes a negative edge (negative value).
    pub delta_minus: f64,
    /// Restrict refinement to pairs that already share an edge.
    pub edges_only: bool,
}

impl Default for VsrParams {
    fn default() -> Self {
        Self {
            l_max: 3,
            delta_plus: 1.0,
            delta_minus: -1.0,
            edges_only: false,
        }
    }
}

impl VsrParams {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::InvalidParameter("l_max must be >= 1".into()));
        }
        if self.delta_plus <= 0.0 {
            return Err(Error::InvalidParameter("delta_plus must be > 0".into()));
        }
        if self.delta_minus >= 0.0 {
            return Err(Error::InvalidParameter("delta_minus must be < 0".into()));
        }
        Ok(())
    }
}

/// Density augmentation parameters.
#[derive(Debug, Clone, Copy)]
pub struct DaParams {
    /// Positive-walk length: pairs joined by an `m_plus`-length positive
    /// walk gain a positive edge.
    pub m_plus: usize,
    /// Negative augmentation extent: pairs joined by an
    /// `(m_minus+1)`-length negative walk gain a negative edge.
    pub m_minus: usize,
}

impl Default for DaParams {
    fn default() -> Self {
        Self {
            m_plus: 3,
            m_minus: 2,
        }
    }
}

impl DaParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_plus < 1 {
            return Err(Error::InvalidParameter("m_plus must be >= 1".into()));
        }
        Ok(())
    }
}

/// Difference of `l`-length positive and negative walk counts between
/// every node pair:
/// `(A+)^l - sum_a (A+)^a A- (A+)^(l-1-a)`.
pub fn walk_difference<S: Scalar>(g: &SignedGraph<S>, l: usize) -> Result<SparseMatrix<S>> {
    if l < 1 {
        return Err(Error::InvalidParameter("walk length must be >= 1".into()));
    }
    let pos_powers = powers(g.pos(), l);
    let mut out = pos_powers[l].clone();
    for a in 0..l {
        // (A+)^a A- (A+)^{l-1-a}
        let term = pos_powers[a].matmul(g.neg()).matmul(&pos_powers[l - 1 - a]);
        out = out.add(&term.scale(-S::one()));
    }
    Ok(out)
}

/// `[M^0, M^1, ..., M^l]` with `M^0 = I`.
fn powers<S: Scalar>(m: &SparseMatrix<S>, l: usize) -> Vec<SparseMatrix<S>> {
    let n = m.rows();
    let mut out = Vec::with_capacity(l + 1);
    out.push(SparseMatrix::identity_scaled(n, S::one()));
    for i in 1..=l {
        let next = out[i - 1].matmul(m);
        out.push(next);
    }
    out
}

/// Length weights for walk lengths `1..=l_max`: the first walk gets
/// weight 1, intermediate lengths `1/l!`, and the last length absorbs
/// the remainder so the tail weights sum to 1.
pub fn length_weights(l_max: usize) -> Vec<f64> {
    assert!(l_max >= 1);
    if l_max == 1 {
        return vec![1.0];
    }
    let mut w = vec![1.0];
    let mut factorial = 1.0f64;
    let mut tail_sum = 0.0;
    for l in 2..l_max {
        factorial *= l as f64;
        w.push(1.0 / factorial);
        tail_sum += 1.0 / factorial;
    }
    w.push(1.0 - tail_sum);
    w
}

/// Length-weighted non-noise scores over all walks up to `l_max`.
pub fn nonnoise_scores<S: Scalar>(g: &SignedGraph<S>, l_max: usize) -> Result<SparseMatrix<S>> {
    if l_max < 1 {
        return Err(Error::InvalidParameter("l_max must be >= 1".into()));
    }
    let weights = length_weights(l_max);
    let n = g.node_count();
    let mut gamma = SparseMatrix::zeros(n, n);
    for (l, &alpha) in weights.iter().enumerate() {
        let wd = walk_difference(g, l + 1)?;
        gamma = gamma.add(&wd.scale(S::from_f64_s(alpha)));
    }
    Ok(gamma)
}

/// Violation sign-refine: rewrite the sign of a pair to positive where
/// the score exceeds `delta_plus`, to negative where it is below
/// `delta_minus`, and keep the original entry otherwise. With
/// `edges_only`, only existing edges are eligible; otherwise every pair
/// with a nonzero score is.
pub fn violation_sign_refine<S: Scalar>(
    g: &SignedGraph<S>,
    params: &VsrParams,
) -> Result<SignedGraph<S>> {
    params.validate()?;
    let gamma = nonnoise_scores(g, params.l_max)?;
    let dp = S::from_f64_s(params.delta_plus);
    let dm = S::from_f64_s(params.delta_minus);
    let n = g.node_count();
    let mut edges: std::collections::BTreeMap<(usize, usize), i8> = g
        .edges()
        .into_iter()
        .map(|(u, v, s)| ((u, v), s))
        .collect();
    for (r, c, score) in gamma.iter() {
        if r >= c {
            continue;
        }
        if params.edges_only && !edges.contains_key(&(r, c)) {
            continue;
        }
        if score > dp {
            edges.insert((r, c), 1);
        } else if score < dm {
            edges.insert((r, c), -1);
        }
    }
    let list: Vec<(usize, usize, i8)> = edges.into_iter().map(|((u, v), s)| (u, v, s)).collect();
    Ok(SignedGraph::from_edges(n, &list, g.labels().map(<[usize]>::to_vec))?)
}

/// Density augmentation: positive channel becomes the support of
/// `(A+)^(m+)`, the negative channel the support of
/// `sum_a (A+)^a A- (A+)^(m- - a)`. Diagonals are dropped and entries
/// binarized. The two channels may overlap afterwards; they are kept
/// separately in the returned pair.
pub fn density_augment<S: Scalar>(
    g: &SignedGraph<S>,
    params: &DaParams,
) -> Result<RewiredChannels<S>> {
    params.validate()?;
    let pos_powers = powers(g.pos(), params.m_plus.max(params.m_minus));
    let pos_aug = pos_powers[params.m_plus].clone();
    let n = g.node_count();
    let mut neg_aug = SparseMatrix::zeros(n, n);
    for a in 0..=params.m_minus {
        let term = pos_powers[a]
            .matmul(g.neg())
            .matmul(&pos_powers[params.m_minus - a]);
        neg_aug = neg_aug.add(&term);
    }
    Ok(RewiredChannels {
        pos: binarize_off_diagonal(&pos_aug),
        neg: binarize_off_diagonal(&neg_aug),
    })
}

/// Augmented topology. Unlike [`SignedGraph`], the channels may overlap:
/// a pair reachable by both positive and negative walks stays in both.
#[derive(Debug, Clone)]
pub struct RewiredChannels<S> {
    pub pos: SparseMatrix<S>,
    pub neg: SparseMatrix<S>,
}

impl<S: Scalar> RewiredChannels<S> {
    pub fn from_graph(g: &SignedGraph<S>) -> Self {
        Self {
            pos: g.pos().clone(),
            neg: g.neg().clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.pos.rows()
    }
}

fn binarize_off_diagonal<S: Scalar>(m: &SparseMatrix<S>) -> SparseMatrix<S> {
    let triplets: Vec<(usize, usize, S)> = m
        .iter()
        .filter(|&(r, c, v)| r != c && v > S::zero())
        .map(|(r, c, _)| (r, c, S::one()))
        .collect();
    SparseMatrix::from_triplets(m.rows(), m.cols(), &triplets)
}
