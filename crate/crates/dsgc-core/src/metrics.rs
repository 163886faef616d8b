//! External clustering metrics and embedding diagnostics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Joint label counts: `counts[p][t]` is the number of nodes predicted
/// into cluster `p` whose true class is `t`.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictions vs {} labels",
                pred.len(),
                truth.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::InvalidParameter("empty label vectors".into()));
        }
        let rp = pred.iter().max().unwrap() + 1;
        let rt = truth.iter().max().unwrap() + 1;
        let mut counts = vec![vec![0usize; rt]; rp];
        for (&p, &t) in pred.iter().zip(truth) {
            counts[p][t] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len(),
        })
    }

    pub fn pred_sizes(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn true_sizes(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols)
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }
}

/// Minimum-cost assignment on a square cost matrix; returns the column
/// chosen for each row. O(n^3) shortest-augmenting-path with potentials.
pub fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix not square");
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=n {
        ans[p[j] - 1] = j - 1;
    }
    ans
}

/// Best label permutation for the table: maps each predicted cluster to
/// a distinct true class (after square padding), maximizing agreement.
fn best_matching(table: &ContingencyTable) -> Vec<usize> {
    let rp = table.counts.len();
    let rt = table.counts.first().map_or(0, Vec::len);
    let dim = rp.max(rt);
    let cost: Vec<Vec<f64>> = (0..dim)
        .map(|p| {
            (0..dim)
                .map(|t| {
                    let c = if p < rp && t < rt { table.counts[p][t] } else { 0 };
                    -(c as f64)
                })
                .collect()
        })
        .collect();
    hungarian_min(&cost)
}

/// Clustering accuracy: fraction of nodes correct under the best
/// one-to-one relabeling of predicted clusters.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let matching = best_matching(&table);
    let rt = table.counts.first().map_or(0, Vec::len);
    let mut correct = 0usize;
    for (p, row) in table.counts.iter().enumerate() {
        let t = matching[p];
        if t < rt {
            correct += row[t];
        }
    }
    Ok(correct as f64 / table.n as f64)
}

/// Normalized mutual information with geometric-mean normalization and
/// natural logarithms. Two trivial identical partitions score 1; if
/// exactly one side is trivial the score is 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.n as f64;
    let a = table.pred_sizes();
    let b = table.true_sizes();
    let entropy = |sizes: &[usize]| -> f64 {
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let q = s as f64 / n;
                -q * q.ln()
            })
            .sum()
    };
    let hu = entropy(&a);
    let hv = entropy(&b);
    if hu == 0.0 && hv == 0.0 {
        return Ok(1.0);
    }
    if hu == 0.0 || hv == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (p, row) in table.counts.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * ((n * c) / (a[p] as f64 * b[t] as f64)).ln();
            }
        }
    }
    Ok((mi / (hu * hv).sqrt()).clamp(0.0, 1.0))
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index by pair counting. When the adjustment denominator
/// vanishes (both partitions trivial in the same way) the score is 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let index: f64 = table
        .counts
        .iter()
        .flatten()
        .map(|&c| choose2(c))
        .sum();
    let sum_a: f64 = table.pred_sizes().iter().map(|&s| choose2(s)).sum();
    let sum_b: f64 = table.true_sizes().iter().map(|&s| choose2(s)).sum();
    let total = choose2(table.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Macro-averaged F1 over true classes, after relabeling predictions
/// with the same matching used by [`accuracy`]. A class with zero
/// precision+recall contributes 0.
pub fn f1_macro(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let matching = best_matching(&table);
    let rt = table.counts.first().map_or(0, Vec::len);
    let mapped: Vec<usize> = pred.iter().map(|&p| matching[p]).collect();
    let mut score = 0.0;
    for class in 0..rt {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fnn = 0usize;
        for (&m, &t) in mapped.iter().zip(truth) {
            match (m == class, t == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fnn += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fnn;
        if denom > 0 {
            score += 2.0 * tp as f64 / denom as f64;
        }
    }
    Ok(score / rt as f64)
}

/// Separation ratio of an embedding against signed edge classes:
/// `(|E+|/|E-|) * (sum_{E-} <z_i,z_j>) / (sum_{E+} <z_i,z_j>)`.
/// Each unordered edge counts once. Training drives this down: enemies
/// end up less aligned than friends.
pub fn soen_channels<S: Scalar>(
    z: &DenseMatrix<S>,
    pos: &SparseMatrix<S>,
    neg: &SparseMatrix<S>,
) -> Result<f64> {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (which, m) in [pos, neg].into_iter().enumerate() {
        for (r, c, _) in m.iter() {
            if r < c {
                let dot: S = z
                    .row(r)
                    .iter()
                    .zip(z.row(c))
                    .map(|(&a, &b)| a * b)
                    .sum();
                sums[which] += dot.to_f64_s();
                counts[which] += 1;
            }
        }
    }
    if counts[0] == 0 {
        return Err(Error::EmptyEdgeClass("no positive edges".into()));
    }
    if counts[1] == 0 {
        return Err(Error::EmptyEdgeClass("no negative edges".into()));
    }
    if sums[0] == 0.0 {
        return Err(Error::NonFinite("zero positive-edge similarity mass".into()));
    }
    Ok((counts[0] as f64 / counts[1] as f64) * (sums[1] / sums[0]))
}

pub fn soen<S: Scalar>(z: &DenseMatrix<S>, g: &SignedGraph<S>) -> Result<f64> {
    soen_channels(z, g.pos(), g.neg())
}

/// Edges hidden for sign-prediction evaluation.
#[derive(Debug, Clone)]
pub struct MaskedEdgeSplit {
    /// Held-out edges as `(u, v, sign)`, `u < v`.
    pub masked: Vec<(usize, usize, i8)>,
    /// Edges that stay visible.
    pub kept: Vec<(usize, usize, i8)>,
}

/// Independently hide each edge with probability `p_mask`, seeded.
pub fn mask_edges<S: Scalar>(
    g: &SignedGraph<S>,
    p_mask: f64,
    seed: u64,
) -> Result<MaskedEdgeSplit> {
    if !(0.0..=1.0).contains(&p_mask) {
        return Err(Error::InvalidParameter(format!(
            "mask probability {p_mask} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masked = Vec::new();
    let mut kept = Vec::new();
    for edge in g.edges() {
        if rng.gen_bool(p_mask) {
            masked.push(edge);
        } else {
            kept.push(edge);
        }
    }
    Ok(MaskedEdgeSplit { masked, kept })
}

/// Sign-recovery AUC on held-out edges. Each masked edge is scored 1
/// when its endpoints share a predicted cluster and 0 otherwise;
/// positive signs are the positive class. Ties contribute half, i.e.
/// the result equals the balanced accuracy (TPR + TNR) / 2 of the
/// same-cluster rule and also the Mann-Whitney statistic of the binary
/// scores.
pub fn masked_auc(split: &MaskedEdgeSplit, pred: &[usize]) -> Result<f64> {
    let mut pos_same = 0usize;
    let mut pos_diff = 0usize;
    let mut neg_same = 0usize;
    let mut neg_diff = 0usize;
    for &(u, v, s) in &split.masked {
        if u >= pred.len() || v >= pred.len() {
            return Err(Error::DimensionMismatch(
                "masked edge endpoint outside prediction vector".into(),
            ));
        }
        let same = pred[u] == pred[v];
        match (s > 0, same) {
            (true, true) => pos_same += 1,
            (true, false) => pos_diff += 1,
            (false, true) => neg_same += 1,
            (false, false) => neg_diff += 1,
        }
    }
    let npos = pos_same + pos_diff;
    let nneg = neg_same + neg_diff;
    if npos == 0 {
        return Err(Error::EmptyEdgeClass("no masked positive edges".into()));
    }
    if nneg == 0 {
        return Err(Error::EmptyEdgeClass("no masked negative edges".into()));
    }
    let wins = (pos_same * neg_diff) as f64;
    let ties = (pos_same * neg_same + pos_diff * neg_diff) as f64;
    Ok((wins + 0.5 * ties) / (npos as f64 * nneg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accuracy_perfect_and_relabelled() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        let relabel = [2, 2, 0, 0, 1, 1];
        assert_eq!(accuracy(&relabel, &truth).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_small_hand_example() {
        // best matching fixes 3 of 4
        let pred = [0, 0, 1, 1];
        let truth = [0, 1, 1, 1];
        assert_abs_diff_eq!(accuracy(&pred, &truth).unwrap(), 0.75);
    }

    #[test]
    fn accuracy_more_predicted_clusters_than_classes() {
        let pred = [0, 1, 2, 2];
        let truth = [0, 0, 1, 1];
        assert_abs_diff_eq!(accuracy(&pred, &truth).unwrap(), 0.75);
    }

    #[test]
    fn hungarian_solves_classic_example() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let m = hungarian_min(&cost);
        let total: f64 = m.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_abs_diff_eq!(total, 5.0); // 1 + 2 + 2
    }

    #[test]
    fn nmi_bounds_and_edge_cases() {
        let truth = [0, 0, 1, 1];
        assert_eq!(nmi(&truth, &truth).unwrap(), 1.0);
        assert_eq!(nmi(&[1, 1, 0, 0], &truth).unwrap(), 1.0);
        // one side trivial
        assert_eq!(nmi(&[0, 0, 0, 0], &truth).unwrap(), 0.0);
        // both trivial
        assert_eq!(nmi(&[0, 0, 0, 0], &[1, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn nmi_half_informative() {
        // pred splits one true class, keeps the other
        let pred = [0, 0, 1, 2];
        let truth = [0, 0, 1, 1];
        let v = nmi(&pred, &truth).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn ari_values() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_abs_diff_eq!(ari(&truth, &truth).unwrap(), 1.0);
        assert_abs_diff_eq!(ari(&[2, 2, 0, 0, 1, 1], &truth).unwrap(), 1.0);
        // identical trivial partitions: adjustment denominator vanishes
        assert_abs_diff_eq!(ari(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
        // independent-looking split scores near zero or below
        let v = ari(&[0, 1, 0, 1, 0, 1], &truth).unwrap();
        assert!(v < 0.2, "ari {v}");
    }

    #[test]
    fn f1_macro_hand_example() {
        let pred = [0, 0, 0, 1];
        let truth = [0, 0, 1, 1];
        // class 0: f1 0.8, class 1: f1 2/3
        assert_abs_diff_eq!(
            f1_macro(&pred, &truth).unwrap(),
            (0.8 + 2.0 / 3.0) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn metrics_invariant_under_joint_permutation() {
        use rand::seq::SliceRandom;
        let pred = [0, 1, 0, 2, 1, 2, 0, 1];
        let truth = [0, 1, 1, 2, 1, 0, 0, 2];
        let base = (
            accuracy(&pred, &truth).unwrap(),
            nmi(&pred, &truth).unwrap(),
            ari(&pred, &truth).unwrap(),
            f1_macro(&pred, &truth).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let mut idx: Vec<usize> = (0..pred.len()).collect();
            idx.shuffle(&mut rng);
            let p: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
            let t: Vec<usize> = idx.iter().map(|&i| truth[i]).collect();
            assert_abs_diff_eq!(accuracy(&p, &t).unwrap(), base.0, epsilon = 1e-12);
            assert_abs_diff_eq!(nmi(&p, &t).unwrap(), base.1, epsilon = 1e-12);
            assert_abs_diff_eq!(ari(&p, &t).unwrap(), base.2, epsilon = 1e-12);
            assert_abs_diff_eq!(f1_macro(&p, &t).unwrap(), base.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn soen_hand_computed() {
        let z = DenseMatrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 2.0],
        ]);
        let g: SignedGraph<f64> =
            SignedGraph::from_edges(3, &[(0, 1, 1), (1, 2, -1)], None).unwrap();
        // |E+|/|E-| = 1; neg dot = 2, pos dot = 1
        assert_abs_diff_eq!(soen(&z, &g).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn soen_requires_both_classes() {
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        let g: SignedGraph<f64> = SignedGraph::from_edges(2, &[(0, 1, 1)], None).unwrap();
        assert!(matches!(soen(&z, &g), Err(Error::EmptyEdgeClass(_))));
    }

    #[test]
    fn mask_edges_deterministic_and_probability_extremes() {
        let edges: Vec<(usize, usize, i8)> = (0..10).map(|i| (i, i + 10, 1)).collect();
        let g: SignedGraph<f64> = SignedGraph::from_edges(20, &edges, None).unwrap();
        let all = mask_edges(&g, 1.0, 3).unwrap();
        assert_eq!(all.masked.len(), 10);
        assert!(all.kept.is_empty());
        let none = mask_edges(&g, 0.0, 3).unwrap();
        assert!(none.masked.is_empty());
        let a = mask_edges(&g, 0.5, 7).unwrap();
        let b = mask_edges(&g, 0.5, 7).unwrap();
        assert_eq!(a.masked, b.masked);
    }

    #[test]
    fn masked_auc_perfect_and_chance() {
        let pred = [0, 0, 1, 1];
        let perfect = MaskedEdgeSplit {
            masked: vec![(0, 1, 1), (2, 3, 1), (0, 2, -1), (1, 3, -1)],
            kept: vec![],
        };
        assert_abs_diff_eq!(masked_auc(&perfect, &pred).unwrap(), 1.0);
        let inverted = MaskedEdgeSplit {
            masked: vec![(0, 2, 1), (0, 1, -1)],
            kept: vec![],
        };
        assert_abs_diff_eq!(masked_auc(&inverted, &pred).unwrap(), 0.0);
        let uninformative = MaskedEdgeSplit {
            masked: vec![(0, 1, 1), (2, 3, -1)],
            kept: vec![],
        };
        assert_abs_diff_eq!(masked_auc(&uninformative, &pred).unwrap(), 0.5);
    }

    #[test]
    fn masked_auc_mixed_hand_value() {
        let pred = [0, 0, 1, 1];
        // pos: 1 same, 1 diff; neg: 1 same, 1 diff
        let split = MaskedEdgeSplit {
            masked: vec![(0, 1, 1), (0, 2, 1), (1, 3, -1), (2, 3, -1)],
            kept: vec![],
        };
        // wins = 1*1, ties = 1*1 + 1*1 => (1 + 0.5*2) / 4 = 0.5
        assert_abs_diff_eq!(masked_auc(&split, &pred).unwrap(), 0.5);
    }

    #[test]
    fn masked_auc_requires_both_signs() {
        let split = MaskedEdgeSplit {
            masked: vec![(0, 1, 1)],
            kept: vec![],
        };
        assert!(matches!(
            masked_auc(&split, &[0, 0]),
            Err(Error::EmptyEdgeClass(_))
        ));
    }
}
