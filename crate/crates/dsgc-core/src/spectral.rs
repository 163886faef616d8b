//! Spectral clustering baselines for signed graphs, plus the k-means
//! routine they (and the experiment harness) share.
//!
//! Each baseline reduces to an eigenproblem on a dense symmetric
//! operator or a symmetric-definite pencil, followed by k-means on the
//! rows of the selected eigenvectors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::eigen::{generalized_symmetric_eigen, symmetric_eigen, EigenError};
use crate::error::{Error, Result};
use crate::graph::{degree_matrices, SignedGraph};
use crate::scalar::Scalar;

/// Which baseline operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    /// Signed adjacency itself; uses the *largest* eigenvectors.
    SymAdj,
    /// Simple normalized signed Laplacian `Dbar^-1 (D+ - D- - A)`.
    Lsns,
    /// Degree-normalized variant `Dbar^-1 (D+ - A)`.
    Ldns,
    /// Unnormalized `Dbar - A`.
    Lbar,
    /// Symmetric normalized `Dbar^-1/2 (Dbar - A) Dbar^-1/2`.
    Lsym,
    /// Balanced ratio cut `L+ + A-`.
    Brc,
    /// Balanced normalized cut `Dbar^-1/2 (L+ + A-) Dbar^-1/2`.
    Bnc,
    /// Signed pencil `(L+ + tau- D-) v = lambda (L- + tau+ D+) v`.
    Sponge,
    /// Degree-normalized pencil with `tau` shifts on both sides.
    SpongeSym,
}

impl std::str::FromStr for SpectralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "sym-adj" => Ok(Self::SymAdj),
            "lsns" => Ok(Self::Lsns),
            "ldns" => Ok(Self::Ldns),
            "lbar" => Ok(Self::Lbar),
            "lsym" => Ok(Self::Lsym),
            "brc" => Ok(Self::Brc),
            "bnc" => Ok(Self::Bnc),
            "sponge" => Ok(Self::Sponge),
            "sponge-sym" | "sponge_sym" => Ok(Self::SpongeSym),
            other => Err(Error::InvalidParameter(format!(
                "unknown spectral method {other}"
            ))),
        }
    }
}

impl std::fmt::Display for SpectralKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::SymAdj => "a",
            Self::Lsns => "lsns",
            Self::Ldns => "ldns",
            Self::Lbar => "lbar",
            Self::Lsym => "lsym",
            Self::Brc => "brc",
            Self::Bnc => "bnc",
            Self::Sponge => "sponge",
            Self::SpongeSym => "sponge-sym",
        };
        write!(f, "{s}")
    }
}

impl SpectralKind {
    pub const ALL: [SpectralKind; 9] = [
        Self::SymAdj,
        Self::Lsns,
        Self::Ldns,
        Self::Lbar,
        Self::Lsym,
        Self::Brc,
        Self::Bnc,
        Self::Sponge,
        Self::SpongeSym,
    ];
}

/// Eigenproblem a baseline reduces to.
#[derive(Debug, Clone)]
pub enum Operator<S> {
    /// Symmetric matrix; `largest` picks which end of the spectrum.
    Single {
        matrix: DenseMatrix<S>,
        largest: bool,
    },
    /// Symmetric-definite pencil `A v = lambda B v`, smallest end.
    Pencil {
        a: DenseMatrix<S>,
        b: DenseMatrix<S>,
    },
}

/// Shift factors for the two pencil baselines.
#[derive(Debug, Clone, Copy)]
pub struct TauShifts {
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl Default for TauShifts {
    fn default() -> Self {
        Self {
            tau_plus: 1.0,
            tau_minus: 1.0,
        }
    }
}

/// `x / sqrt(d)` with the convention that zero degrees stay untouched.
fn inv_sqrt<S: Scalar>(d: &[S]) -> Vec<S> {
    d.iter()
        .map(|&v| {
            if v == S::zero() {
                S::zero()
            } else {
                S::one() / v.sqrt()
            }
        })
        .collect()
}

fn scale_sym<S: Scalar>(m: &DenseMatrix<S>, f: &[S]) -> DenseMatrix<S> {
    DenseMatrix::from_fn(m.rows(), m.cols(), |r, c| f[r] * m.get(r, c) * f[c])
}

fn diag<S: Scalar>(d: &[S]) -> DenseMatrix<S> {
    let mut m = DenseMatrix::zeros(d.len(), d.len());
    for (i, &v) in d.iter().enumerate() {
        m.set(i, i, v);
    }
    m
}

/// Build the dense operator for a baseline.
pub fn build_operator<S: Scalar>(
    g: &SignedGraph<S>,
    kind: SpectralKind,
    taus: TauShifts,
) -> Result<Operator<S>> {
    let deg = degree_matrices(g);
    let ap = g.pos().to_dense();
    let an = g.neg().to_dense();
    let a = ap.sub(&an);
    let one = S::one;
    // clamping zero total degrees to one keeps the pencil mass matrices
    // invertible; the corresponding rows of the numerator are zero, so
    // isolated nodes just pick up eigenvalue zero.
    let bar_clamped: Vec<S> = deg
        .total
        .iter()
        .map(|&v| if v == S::zero() { one() } else { v })
        .collect();
    let op = match kind {
        SpectralKind::SymAdj => Operator::Single {
            matrix: a,
            largest: true,
        },
        SpectralKind::Lsns => {
            let m = diag(&deg.pos).sub(&diag(&deg.neg)).sub(&a);
            Operator::Pencil {
                a: m,
                b: diag(&bar_clamped),
            }
        }
        SpectralKind::Ldns => {
            let m = diag(&deg.pos).sub(&a);
            Operator::Pencil {
                a: m,
                b: diag(&bar_clamped),
            }
        }
        SpectralKind::Lbar => Operator::Single {
            matrix: diag(&deg.total).sub(&a),
            largest: false,
        },
        SpectralKind::Lsym => {
            let f = inv_sqrt(&deg.total);
            Operator::Single {
                matrix: scale_sym(&diag(&deg.total).sub(&a), &f),
                largest: false,
            }
        }
        SpectralKind::Brc => Operator::Single {
            matrix: diag(&deg.pos).sub(&ap).add(&an),
            largest: false,
        },
        SpectralKind::Bnc => {
            let f = inv_sqrt(&deg.total);
            Operator::Single {
                matrix: scale_sym(&diag(&deg.pos).sub(&ap).add(&an), &f),
                largest: false,
            }
        }
        SpectralKind::Sponge => {
            let tp = S::from_f64_s(taus.tau_plus);
            let tm = S::from_f64_s(taus.tau_minus);
            let lpos = diag(&deg.pos).sub(&ap);
            let lneg = diag(&deg.neg).sub(&an);
            let num = lpos.add(&diag(&deg.neg).scale(tm));
            let den = lneg.add(&diag(&deg.pos).scale(tp));
            Operator::Pencil { a: num, b: den }
        }
        SpectralKind::SpongeSym => {
            let tp = S::from_f64_s(taus.tau_plus);
            let tm = S::from_f64_s(taus.tau_minus);
            let fp = inv_sqrt(&deg.pos);
            let fn_ = inv_sqrt(&deg.neg);
            let n = g.node_count();
            let eye = DenseMatrix::identity(n);
            let lp_sym = eye.sub(&scale_sym(&ap, &fp));
            let ln_sym = eye.sub(&scale_sym(&an, &fn_));
            let num = lp_sym.add(&eye.scale(tm));
            let den = ln_sym.add(&eye.scale(tp));
            Operator::Pencil { a: num, b: den }
        }
    };
    Ok(op)
}

/// Solve the operator's eigenproblem and return the `k` selected
/// eigenvectors as columns.
pub fn spectral_embedding<S: Scalar>(
    g: &SignedGraph<S>,
    kind: SpectralKind,
    k: usize,
    taus: TauShifts,
) -> Result<DenseMatrix<S>> {
    let n = g.node_count();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 1..={n} eigenvectors, asked for {k}"
        )));
    }
    let decomposition = match build_operator(g, kind, taus)? {
        Operator::Single { matrix, largest } => {
            let eig = symmetric_eigen(&matrix)?;
            return Ok(select_columns(&eig.vectors, k, largest));
        }
        Operator::Pencil { a, b } => match generalized_symmetric_eigen(&a, &b) {
            Ok(eig) => eig,
            Err(EigenError::NotPositiveDefinite(..)) => {
                // singular mass matrix (isolated nodes); a tiny ridge
                // restores definiteness without moving the spectrum
                let n = b.rows();
                let mut trace = S::zero();
                for i in 0..n {
                    trace += b.get(i, i);
                }
                let ridge = (trace / S::from_usize_s(n.max(1)) + S::one())
                    * S::from_f64_s(1e-9);
                let mut b2 = b.clone();
                for i in 0..n {
                    b2.add_at(i, i, ridge);
                }
                generalized_symmetric_eigen(&a, &b2)?
            }
            Err(e) => return Err(e.into()),
        },
    };
    Ok(select_columns(&decomposition.vectors, k, false))
}

fn select_columns<S: Scalar>(vectors: &DenseMatrix<S>, k: usize, largest: bool) -> DenseMatrix<S> {
    let n = vectors.rows();
    let total = vectors.cols();
    DenseMatrix::from_fn(n, k, |r, c| {
        let col = if largest { total - 1 - c } else { c };
        vectors.get(r, col)
    })
}

/// k-means settings. Defaults match the experiment harness: 50 seeded
/// restarts of Lloyd's algorithm.
#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            restarts: 50,
            max_iter: 300,
            tol: 1e-8,
            seed,
        }
    }
}

/// Result of the best restart.
#[derive(Debug, Clone)]
pub struct KMeansResult<S> {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix<S>,
    pub inertia: f64,
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

/// Multi-restart Lloyd's algorithm with k-means++ seeding.
pub fn kmeans<S: Scalar>(points: &DenseMatrix<S>, cfg: &KMeansConfig) -> Result<KMeansResult<S>> {
    let n = points.rows();
    let d = points.cols();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::KMeans(format!("{} clusters for {n} points", cfg.k)));
    }
    if cfg.restarts == 0 {
        return Err(Error::KMeans("need at least one restart".into()));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KMeansResult<S>> = None;
    for _ in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let mut centroids = plus_plus_init(points, cfg.k, &mut rng);
        let mut labels = vec![0usize; n];
        for _ in 0..cfg.max_iter {
            // assignment step, lowest index wins ties
            for (i, lab) in labels.iter_mut().enumerate() {
                let p = points.row(i);
                let mut bi = 0usize;
                let mut bd = sq_dist(p, centroids.row(0));
                for c in 1..cfg.k {
                    let dd = sq_dist(p, centroids.row(c));
                    if dd < bd {
                        bd = dd;
                        bi = c;
                    }
                }
                *lab = bi;
            }
            // update step
            let mut sums: DenseMatrix<S> = DenseMatrix::zeros(cfg.k, d);
            let mut counts = vec![0usize; cfg.k];
            for (i, &lab) in labels.iter().enumerate() {
                counts[lab] += 1;
                let src = points.row(i);
                let dst = sums.row_mut(lab);
                for (a, &b) in dst.iter_mut().zip(src) {
                    *a += b;
                }
            }
            let mut shift = S::zero();
            for c in 0..cfg.k {
                if counts[c] == 0 {
                    // reseed an empty cluster at the point farthest
                    // from its current centroid
                    let far = (0..n)
                        .max_by(|&a, &b| {
                            let da = sq_dist(points.row(a), centroids.row(labels[a]));
                            let db = sq_dist(points.row(b), centroids.row(labels[b]));
                            da.partial_cmp(&db).unwrap()
                        })
                        .unwrap();
                    let src: Vec<S> = points.row(far).to_vec();
                    centroids.row_mut(c).copy_from_slice(&src);
                    labels[far] = c;
                    shift = shift.max(S::one());
                    continue;
                }
                let inv = S::one() / S::from_usize_s(counts[c]);
                let mut delta = S::zero();
                for j in 0..d {
                    let new: S = sums.get(c, j) * inv;
                    delta = delta.max((new - centroids.get(c, j)).abs());
                    centroids.set(c, j, new);
                }
                shift = shift.max(delta);
            }
            if shift.to_f64_s() < cfg.tol {
                break;
            }
        }
        let inertia: f64 = (0..n)
            .map(|i| sq_dist(points.row(i), centroids.row(labels[i])).to_f64_s())
            .sum();
        if best.as_ref().map_or(true, |b| inertia < b.inertia) {
            best = Some(KMeansResult {
                labels,
                centroids,
                inertia,
            });
        }
    }
    Ok(best.unwrap())
}

fn plus_plus_init<S: Scalar>(
    points: &DenseMatrix<S>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix<S> {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = DenseMatrix::zeros(k, d);
    let first = rng.gen_range(0..n);
    centroids
        .row_mut(0)
        .copy_from_slice(&points.row(first).to_vec());
    let mut dists: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)).to_f64_s())
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dists.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let row: Vec<S> = points.row(pick).to_vec();
        centroids.row_mut(c).copy_from_slice(&row);
        for (i, slot) in dists.iter_mut().enumerate() {
            let dd = sq_dist(points.row(i), centroids.row(c)).to_f64_s();
            if dd < *slot {
                *slot = dd;
            }
        }
    }
    centroids
}

/// End-to-end baseline: build the operator, take eigenvectors, k-means
/// their rows.
pub fn spectral_cluster<S: Scalar>(
    g: &SignedGraph<S>,
    kind: SpectralKind,
    k: usize,
    taus: TauShifts,
    seed: u64,
) -> Result<Vec<usize>> {
    let embedding = spectral_embedding(g, kind, k, taus)?;
    let res = kmeans(&embedding, &KMeansConfig::new(k, seed))?;
    Ok(res.labels)
}
