//! File formats: signed edge lists, label files, time-series CSV, and
//! exported artifacts.

use std::fs;
use std::path::Path;

use dsgc_core::dense::DenseMatrix;
use dsgc_core::graph::{generate_ssbm, ingest_correlation, SignedGraph, SsbmParams};
use dsgc_core::rewire::RewiredChannels;

use crate::config::DatasetSpec;
use crate::Failure;

pub type Graph = SignedGraph<f64>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

/// Parse `u v s` lines; `#` starts a comment, blank lines are skipped.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize, i8)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let bad = || io_err(path, format!("line {}: expected `u v s`", lineno + 1));
        let u: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(bad)?;
        let v: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(bad)?;
        let s = match parts.next() {
            Some("+1") | Some("1") => 1i8,
            Some("-1") => -1i8,
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        edges.push((u, v, s));
    }
    Ok(edges)
}

pub fn write_edge_list(path: &Path, edges: &[(usize, usize, i8)]) -> Result<(), Failure> {
    let mut out = String::new();
    for &(u, v, s) in edges {
        let sign = if s > 0 { "+1" } else { "-1" };
        out.push_str(&format!("{u} {v} {sign}\n"));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Parse `node cluster` lines into a dense label vector.
pub fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut labels = vec![None; n];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || io_err(path, format!("line {}: expected `node cluster`", lineno + 1));
        let mut parts = line.split_whitespace();
        let node: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(bad)?;
        let cluster: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(bad)?;
        if node >= n {
            return Err(io_err(path, format!("node {node} out of range (n={n})")));
        }
        labels[node] = Some(cluster);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| io_err(path, format!("node {i} has no label"))))
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), Failure> {
    let mut out = String::new();
    for (node, &cluster) in labels.iter().enumerate() {
        out.push_str(&format!("{node} {cluster}\n"));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Time-series CSV: header names one node per column; each subsequent
/// row is one time point. Returned node-major (one row per node).
pub fn read_time_series(path: &Path) -> Result<(Vec<String>, DenseMatrix<f64>), Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let n = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    for record in reader.records() {
        let record = record.map_err(|e| io_err(path, e))?;
        if record.len() != n {
            return Err(io_err(path, "ragged time-series row"));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| io_err(path, format!("bad value {field:?}: {e}")))?;
            columns[c].push(v);
        }
    }
    if columns.iter().any(Vec::is_empty) {
        return Err(io_err(path, "no time points"));
    }
    Ok((names, DenseMatrix::from_rows(&columns)))
}

/// Materialize a dataset spec. SSBM specs regenerate per seed; file
/// datasets ignore the seed.
pub fn build_graph(spec: &DatasetSpec, seed: u64) -> Result<Graph, Failure> {
    match spec {
        DatasetSpec::Ssbm { n, k, p, eta } => generate_ssbm(&SsbmParams {
            n: *n,
            k: *k,
            p: *p,
            eta: *eta,
            seed,
        })
        .map_err(|e| Failure::Config(format!("ssbm: {e}"))),
        DatasetSpec::EdgeList { path, labels } => {
            let edges = read_edge_list(path)?;
            let n = edges
                .iter()
                .map(|&(u, v, _)| u.max(v) + 1)
                .max()
                .unwrap_or(0);
            let labels = labels
                .as_ref()
                .map(|l| read_labels(l, n))
                .transpose()?;
            SignedGraph::from_edges(n, &edges, labels)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        }
        DatasetSpec::TimeSeries { path, threshold } => {
            let (_, series) = read_time_series(path)?;
            ingest_correlation(&series, *threshold)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Channels as an edge list; overlapping pairs produce one `+1` and one
/// `-1` line.
pub fn channel_edges(channels: &RewiredChannels<f64>) -> Vec<(usize, usize, i8)> {
    let mut edges = Vec::new();
    for (r, c, _) in channels.pos.iter() {
        if r < c {
            edges.push((r, c, 1i8));
        }
    }
    for (r, c, _) in channels.neg.iter() {
        if r < c {
            edges.push((r, c, -1i8));
        }
    }
    edges.sort_unstable();
    edges
}

/// Cluster-sorted adjacency exports: a grayscale PNG (−1 → black,
/// 0 → mid gray, +1 → white) and a CSV grid of −1/0/+1.
pub fn export_sorted_adjacency(
    g: &Graph,
    labels: &[usize],
    png_path: Option<&Path>,
    csv_path: Option<&Path>,
) -> Result<(), Failure> {
    let n = g.node_count();
    if labels.len() != n {
        return Err(Failure::Config(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (labels[i], i));
    let a = g.signed_adjacency();
    let grid: Vec<Vec<i8>> = order
        .iter()
        .map(|&i| {
            order
                .iter()
                .map(|&j| {
                    let v = a.get(i, j);
                    if v > 0.0 {
                        1
                    } else if v < 0.0 {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    if let Some(path) = png_path {
        let mut img = image::GrayImage::new(n as u32, n as u32);
        for (r, row) in grid.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let shade = match v {
                    1 => 255u8,
                    -1 => 0u8,
                    _ => 128u8,
                };
                img.put_pixel(c as u32, r as u32, image::Luma([shade]));
            }
        }
        img.save(path).map_err(|e| io_err(path, e))?;
    }
    if let Some(path) = csv_path {
        let mut out = String::new();
        for row in &grid {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn write_embeddings(path: &Path, z: &DenseMatrix<f64>) -> Result<(), Failure> {
    let mut out = String::new();
    for r in 0..z.rows() {
        let line: Vec<String> = z.row(r).iter().map(|v| format!("{v:.9}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_assignment(
    path: &Path,
    assignment: &dsgc_core::cluster::AssignmentMatrix<f64>,
) -> Result<(), Failure> {
    let k = assignment.pi.cols();
    let mut out = String::from("node,cluster");
    for j in 0..k {
        out.push_str(&format!(",prob_{j}"));
    }
    out.push('\n');
    for (node, &cluster) in assignment.hard.iter().enumerate() {
        out.push_str(&format!("{node},{cluster}"));
        for &p in assignment.pi.row(node) {
            out.push_str(&format!(",{p:.9}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_loss_history(
    path: &Path,
    losses: &[dsgc_core::cluster::LossBreakdown<f64>],
    soen: &[f64],
) -> Result<(), Failure> {
    let mut out = String::from("epoch,cut,regu,total,soen\n");
    for (epoch, l) in losses.iter().enumerate() {
        let s = soen
            .get(epoch)
            .map(|v| format!("{v:.9}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{epoch},{:.9},{:.9},{:.9},{s}\n",
            l.cut, l.regu, l.total
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
