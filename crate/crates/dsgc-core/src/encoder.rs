//! Clustering-oriented signed graph convolution.
//!
//! The encoder keeps two embedding branches. The positive branch
//! propagates along row-normalized positive adjacency powers and pulls
//! friendly nodes together. The negative branch propagates along walks
//! that traverse exactly one negative edge, with a minus sign that
//! pushes a node toward the antipodes of its enemy neighborhood. Layer
//! outputs are mixed by trainable per-layer weights and the two branches
//! are concatenated.

use rand::Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rewire::RewiredChannels;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Encoder ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Default: negative branch uses `(-A_bar^-)`.
    Dsgc,
    /// Adds `(A_bar^-)^2 Z0+` to the positive branch (the
    /// enemy-of-my-enemy aggregation).
    WithEef,
    /// Drops the minus sign on the negative branch propagation.
    NoMinus,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsgc" => Ok(Self::Dsgc),
            "with-eef" | "with_eef" => Ok(Self::WithEef),
            "no-minus" | "no_minus" => Ok(Self::NoMinus),
            other => Err(Error::InvalidParameter(format!("unknown variant {other}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dsgc => write!(f, "dsgc"),
            Self::WithEef => write!(f, "with-eef"),
            Self::NoMinus => write!(f, "no-minus"),
        }
    }
}

/// Row-normalized propagation matrices with self-loops, plus cached
/// transposes for backpropagation.
#[derive(Debug, Clone)]
pub struct PropagationMatrices<S> {
    pub pos: SparseMatrix<S>,
    pub neg: SparseMatrix<S>,
    pos_t: SparseMatrix<S>,
    neg_t: SparseMatrix<S>,
}

impl<S: Scalar> PropagationMatrices<S> {
    pub fn pos_t(&self) -> &SparseMatrix<S> {
        &self.pos_t
    }

    pub fn neg_t(&self) -> &SparseMatrix<S> {
        &self.neg_t
    }
}

/// Add `eps`-weighted self-loops to both channels and normalize each
/// row to sum to one. Rows whose self-looped degree is zero stay zero.
pub fn build_propagation<S: Scalar>(
    channels: &RewiredChannels<S>,
    eps_pos: S,
    eps_neg: S,
) -> Result<PropagationMatrices<S>> {
    if eps_pos < S::zero() || eps_neg < S::zero() {
        return Err(Error::InvalidParameter("self-loop weights must be >= 0".into()));
    }
    let pos = row_normalize(&with_self_loops(&channels.pos, eps_pos));
    let neg = row_normalize(&with_self_loops(&channels.neg, eps_neg));
    let pos_t = pos.transpose();
    let neg_t = neg.transpose();
    Ok(PropagationMatrices {
        pos,
        neg,
        pos_t,
        neg_t,
    })
}

fn with_self_loops<S: Scalar>(m: &SparseMatrix<S>, eps: S) -> SparseMatrix<S> {
    m.add(&SparseMatrix::identity_scaled(m.rows(), eps))
}

fn row_normalize<S: Scalar>(m: &SparseMatrix<S>) -> SparseMatrix<S> {
    let sums = m.row_sums();
    let factors: Vec<S> = sums
        .iter()
        .map(|&s| if s == S::zero() { S::zero() } else { S::one() / s })
        .collect();
    m.scale_rows(&factors)
}

/// All trainable encoder tensors plus structural hyperparameters.
#[derive(Debug, Clone)]
pub struct EncoderParams<S> {
    pub w0_pos: DenseMatrix<S>,
    pub w0_neg: DenseMatrix<S>,
    pub w1_pos: DenseMatrix<S>,
    pub w1_neg: DenseMatrix<S>,
    pub omega_pos: Vec<S>,
    pub omega_neg: Vec<S>,
    pub layers: usize,
    pub eps_pos: S,
    pub eps_neg: S,
}

impl<S: Scalar> EncoderParams<S> {
    /// Glorot-uniform weight matrices, uniform layer mixing weights.
    pub fn init<R: Rng>(
        input_dim: usize,
        hidden_dim: usize,
        layers: usize,
        eps_pos: S,
        eps_neg: S,
        rng: &mut R,
    ) -> Self {
        let mut glorot = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            DenseMatrix::from_fn(rows, cols, |_, _| {
                S::from_f64_s(rng.gen_range(-bound..bound))
            })
        };
        let w0_pos = glorot(input_dim, hidden_dim);
        let w1_pos = glorot(hidden_dim, hidden_dim);
        let w0_neg = glorot(input_dim, hidden_dim);
        let w1_neg = glorot(hidden_dim, hidden_dim);
        let omega = vec![S::one() / S::from_usize_s(layers + 1); layers + 1];
        Self {
            w0_pos,
            w0_neg,
            w1_pos,
            w1_neg,
            omega_pos: omega.clone(),
            omega_neg: omega,
            layers,
            eps_pos,
            eps_neg,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w0_pos.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0_pos.cols()
    }
}

/// Initial branch embeddings `relu(X W0) W1`.
pub fn initial_embeddings<S: Scalar>(
    x: &DenseMatrix<S>,
    params: &EncoderParams<S>,
) -> Result<(DenseMatrix<S>, DenseMatrix<S>)> {
    if x.cols() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature width {} vs encoder input {}",
            x.cols(),
            params.input_dim()
        )));
    }
    let relu = |m: &DenseMatrix<S>| m.map(|v| v.max(S::zero()));
    let z0_pos = relu(&x.matmul(&params.w0_pos)).matmul(&params.w1_pos);
    let z0_neg = relu(&x.matmul(&params.w0_neg)).matmul(&params.w1_neg);
    Ok((z0_pos, z0_neg))
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    pub variant: Variant,
    /// relu(X W0+) and the matching pre-activation sign masks.
    pub h_pos: DenseMatrix<S>,
    pub h_neg: DenseMatrix<S>,
    pub mask_pos: DenseMatrix<S>,
    pub mask_neg: DenseMatrix<S>,
    pub z0_pos: DenseMatrix<S>,
    pub z0_neg: DenseMatrix<S>,
    /// Per-layer branch outputs, lengths `L + 1`.
    pub z_pos_layers: Vec<DenseMatrix<S>>,
    pub z_neg_layers: Vec<DenseMatrix<S>>,
    pub z_pos: DenseMatrix<S>,
    pub z_neg: DenseMatrix<S>,
    /// Concatenated node representation, `|V| x 2d`.
    pub z: DenseMatrix<S>,
}

/// Full encoder forward pass.
pub fn forward<S: Scalar>(
    x: &DenseMatrix<S>,
    prop: &PropagationMatrices<S>,
    params: &EncoderParams<S>,
    variant: Variant,
) -> Result<ForwardCache<S>> {
    let n = x.rows();
    if prop.pos.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows vs {} propagation rows",
            prop.pos.rows()
        )));
    }
    let pre_pos = x.matmul(&params.w0_pos);
    let pre_neg = x.matmul(&params.w0_neg);
    let mask = |m: &DenseMatrix<S>| {
        m.map(|v| if v > S::zero() { S::one() } else { S::zero() })
    };
    let mask_pos = mask(&pre_pos);
    let mask_neg = mask(&pre_neg);
    let h_pos = pre_pos.map(|v| v.max(S::zero()));
    let h_neg = pre_neg.map(|v| v.max(S::zero()));
    let z0_pos = h_pos.matmul(&params.w1_pos);
    let z0_neg = h_neg.matmul(&params.w1_neg);

    let layers = params.layers;
    // positive branch: Z+(l) = P^l Z0+
    let mut z_pos_layers = Vec::with_capacity(layers + 1);
    z_pos_layers.push(z0_pos.clone());
    for l in 1..=layers {
        let prev = &z_pos_layers[l - 1];
        z_pos_layers.push(prop.pos.mul_dense(prev));
    }

    // negative branch: Z-(0) = Z0-, and for l >= 1 a sum over walks
    // carrying exactly one negative hop.
    let neg_sign = if variant == Variant::NoMinus {
        S::one()
    } else {
        -S::one()
    };
    // V_j = P^j Z0-
    let mut v_pows = Vec::with_capacity(layers.max(1));
    v_pows.push(z0_neg.clone());
    for j in 1..layers {
        let next = prop.pos.mul_dense(&v_pows[j - 1]);
        v_pows.push(next);
    }
    let mut z_neg_layers = Vec::with_capacity(layers + 1);
    z_neg_layers.push(z0_neg.clone());
    for l in 1..=layers {
        let mut acc = DenseMatrix::zeros(n, params.hidden_dim());
        for b in 0..l {
            let mut term = prop.neg.mul_dense(&v_pows[l - 1 - b]).scale(neg_sign);
            for _ in 0..b {
                term = prop.pos.mul_dense(&term);
            }
            acc.add_scaled_assign(&term, S::one());
        }
        z_neg_layers.push(acc);
    }

    let combine = |layers_out: &[DenseMatrix<S>], omega: &[S]| {
        let mut acc = DenseMatrix::zeros(n, params.hidden_dim());
        for (zl, &w) in layers_out.iter().zip(omega) {
            acc.add_scaled_assign(zl, w);
        }
        acc
    };
    let mut z_pos = combine(&z_pos_layers, &params.omega_pos);
    let z_neg = combine(&z_neg_layers, &params.omega_neg);

    if variant == Variant::WithEef {
        let eef = prop.neg.mul_dense(&prop.neg.mul_dense(&z0_pos));
        z_pos.add_scaled_assign(&eef, S::one());
    }

    let z = z_pos.hcat(&z_neg);
    Ok(ForwardCache {
        variant,
        h_pos,
        h_neg,
        mask_pos,
        mask_neg,
        z0_pos,
        z0_neg,
        z_pos_layers,
        z_neg_layers,
        z_pos,
        z_neg,
        z,
    })
}
