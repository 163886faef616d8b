//! Experiment execution: one (dataset, method, seed) job at a time,
//! with per-row failure isolation and deterministic output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dsgc_core::cluster::{train, TrainConfig, TrainOutput};
use dsgc_core::dense::DenseMatrix;
use dsgc_core::graph::{spectral_features, violation_ratio, SignedGraph};
use dsgc_core::metrics::{accuracy, ari, f1_macro, mask_edges, masked_auc, nmi, soen};
use dsgc_core::rewire::{density_augment, violation_sign_refine, RewiredChannels};
use dsgc_core::spectral::{spectral_embedding, KMeansConfig, SpectralKind, TauShifts, kmeans};

use crate::config::Config;
use crate::dataio::Graph;
use crate::Failure;

/// Fixed results header shared by `cluster` and `sweep`.
pub const RESULTS_HEADER: &str =
    "dataset,method,seed,acc,nmi,ari,f1,vr_before,vr_after,soen,auc,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral(SpectralKind),
    Dsgc,
}

impl std::str::FromStr for Method {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        if s == "dsgc" {
            return Ok(Self::Dsgc);
        }
        s.parse()
            .map(Self::Spectral)
            .map_err(|e| Failure::Config(format!("{e}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Spectral(k) => write!(f, "{k}"),
            Self::Dsgc => write!(f, "dsgc"),
        }
    }
}

/// One results row. `None` metrics render as empty CSV cells.
#[derive(Debug, Clone, Default)]
pub struct RowMetrics {
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub f1: Option<f64>,
    pub vr_before: Option<f64>,
    pub vr_after: Option<f64>,
    pub soen: Option<f64>,
    pub auc: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub seed: String,
    pub metrics: Result<RowMetrics, String>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        match &self.metrics {
            Ok(m) => format!(
                "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
                self.dataset,
                self.method,
                self.seed,
                cell(m.acc),
                cell(m.nmi),
                cell(m.ari),
                cell(m.f1),
                cell(m.vr_before),
                cell(m.vr_after),
                cell(m.soen),
                cell(m.auc),
                m.seconds,
            ),
            Err(_) => format!(
                "{},{},{},,,,,,,,,",
                self.dataset, self.method, self.seed
            ),
        }
    }
}

/// Artifacts a DSGC run leaves behind beyond the hard labels.
pub struct MethodOutput {
    pub pred: Vec<usize>,
    pub embeddings: DenseMatrix<f64>,
    pub training: Option<TrainOutput<f64>>,
    pub vr_after: Option<f64>,
}

fn core_err(e: dsgc_core::Error) -> String {
    e.to_string()
}

/// Resolve the cluster count: explicit config wins, else ground truth.
pub fn resolve_clusters(cfg: &Config, g: &Graph) -> Result<usize, Failure> {
    if let Some(k) = cfg.clusters {
        if k < 2 {
            return Err(Failure::Config("need at least 2 clusters".into()));
        }
        return Ok(k);
    }
    match g.labels() {
        Some(labels) => Ok(labels.iter().max().unwrap() + 1),
        None => Err(Failure::Config(
            "--clusters is required when the dataset has no labels".into(),
        )),
    }
}

/// Run one method on one graph. Baselines consume the graph as-is; the
/// DSGC pipeline applies sign refinement and density augmentation first
/// (unless ablated).
pub fn run_method(
    g: &Graph,
    method: Method,
    k: usize,
    seed: u64,
    cfg: &Config,
) -> Result<MethodOutput, String> {
    match method {
        Method::Spectral(kind) => {
            let embeddings =
                spectral_embedding(g, kind, k, TauShifts::default()).map_err(core_err)?;
            let res = kmeans(&embeddings, &KMeansConfig::new(k, seed)).map_err(core_err)?;
            Ok(MethodOutput {
                pred: res.labels,
                embeddings,
                training: None,
                vr_after: None,
            })
        }
        Method::Dsgc => {
            let refined = if cfg.rewiring.no_vsr {
                g.clone()
            } else {
                violation_sign_refine(g, &cfg.rewiring.vsr()).map_err(core_err)?
            };
            let vr_after = g
                .labels()
                .and_then(|l| violation_ratio(&refined, l).ok());
            let channels = if cfg.rewiring.no_da {
                RewiredChannels::from_graph(&refined)
            } else {
                density_augment(&refined, &cfg.rewiring.da()).map_err(core_err)?
            };
            let loss_channels = if cfg.training.loss_on_original {
                RewiredChannels::from_graph(g)
            } else {
                channels.clone()
            };
            let x = spectral_features(g, k).map_err(core_err)?;
            let variant = cfg
                .encoder
                .parsed_variant()
                .map_err(|e| e.to_string())?;
            let train_cfg = TrainConfig {
                clusters: k,
                layers: cfg.encoder.layers,
                hidden_dim: cfg.encoder.hidden_dim,
                eps_pos: cfg.encoder.eps_pos,
                eps_neg: cfg.encoder.eps_neg,
                variant,
                lambda: if cfg.training.no_regu {
                    0.0
                } else {
                    cfg.training.lambda
                },
                lr: cfg.training.lr,
                epochs: cfg.training.epochs,
                seed,
            };
            let out = train(&x, &channels, &loss_channels, &train_cfg).map_err(core_err)?;
            Ok(MethodOutput {
                pred: out.assignment.hard.clone(),
                embeddings: out.embeddings.clone(),
                training: Some(out),
                vr_after,
            })
        }
    }
}

/// One full results row: method run plus every applicable metric.
pub fn run_row(g: &Graph, method: Method, k: usize, seed: u64, cfg: &Config) -> ResultRow {
    let dataset = cfg
        .dataset
        .as_ref()
        .map(|d| d.id())
        .unwrap_or_else(|| "unknown".into());
    let vr_before = g.labels().and_then(|l| violation_ratio(g, l).ok());
    let start = Instant::now();
    let outcome = run_method(g, method, k, seed, cfg);
    let seconds = start.elapsed().as_secs_f64();
    let metrics = outcome.map(|out| {
        let mut m = RowMetrics {
            vr_before,
            vr_after: out.vr_after.or(vr_before),
            seconds,
            ..RowMetrics::default()
        };
        if let Some(truth) = g.labels() {
            m.acc = accuracy(&out.pred, truth).ok();
            m.nmi = nmi(&out.pred, truth).ok();
            m.ari = ari(&out.pred, truth).ok();
            m.f1 = f1_macro(&out.pred, truth).ok();
        }
        m.soen = soen(&out.embeddings, g).ok();
        if cfg.mask_prob > 0.0 {
            m.auc = mask_edges(g, cfg.mask_prob, seed)
                .ok()
                .and_then(|split| masked_auc(&split, &out.pred).ok());
        }
        m
    });
    ResultRow {
        dataset,
        method: method.to_string(),
        seed: seed.to_string(),
        metrics,
    }
}

/// Column-wise mean over the successful rows of one method.
pub fn summary_row(rows: &[ResultRow], dataset: &str, method: &str) -> ResultRow {
    let ok: Vec<&RowMetrics> = rows
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.metrics.as_ref().ok())
        .collect();
    let mean = |f: &dyn Fn(&RowMetrics) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = ok.iter().filter_map(|m| f(m)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let metrics = if ok.is_empty() {
        Err("no successful rows".into())
    } else {
        Ok(RowMetrics {
            acc: mean(&|m| m.acc),
            nmi: mean(&|m| m.nmi),
            ari: mean(&|m| m.ari),
            f1: mean(&|m| m.f1),
            vr_before: mean(&|m| m.vr_before),
            vr_after: mean(&|m| m.vr_after),
            soen: mean(&|m| m.soen),
            auc: mean(&|m| m.auc),
            seconds: ok.iter().map(|m| m.seconds).sum::<f64>() / ok.len() as f64,
        })
    };
    ResultRow {
        dataset: dataset.to_string(),
        method: method.to_string(),
        seed: "mean".into(),
        metrics,
    }
}

/// Full sweep over methods x seeds. Failures are reported per row; the
/// sweep only errors out when *every* row failed.
pub fn run_sweep(cfg: &Config, out: &mut dyn Write) -> Result<(), Failure> {
    cfg.validate()?;
    let spec = cfg.dataset.as_ref().unwrap();
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    writeln!(out, "{RESULTS_HEADER}").map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut rows = Vec::new();
    let mut any_ok = false;
    for &method in &methods {
        for &seed in &cfg.seeds {
            let row = match crate::dataio::build_graph(spec, seed) {
                Ok(g) => match resolve_clusters(cfg, &g) {
                    Ok(k) => run_row(&g, method, k, seed, cfg),
                    Err(e) => ResultRow {
                        dataset: spec.id(),
                        method: method.to_string(),
                        seed: seed.to_string(),
                        metrics: Err(e.to_string()),
                    },
                },
                Err(e) => ResultRow {
                    dataset: spec.id(),
                    method: method.to_string(),
                    seed: seed.to_string(),
                    metrics: Err(e.to_string()),
                },
            };
            if let Err(e) = &row.metrics {
                eprintln!("row failed ({} seed {seed}): {e}", row.method);
            } else {
                any_ok = true;
            }
            writeln!(out, "{}", row.to_csv_line())
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            rows.push(row);
        }
    }
    for &method in &methods {
        let summary = summary_row(&rows, &spec.id(), &method.to_string());
        writeln!(out, "{}", summary.to_csv_line())
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if !any_ok {
        return Err(Failure::Runtime("all rows failed".into()));
    }
    Ok(())
}

/// Insert `round(ratio * |E|)` negative edges between uniformly random
/// non-adjacent pairs. Deterministic per seed.
pub fn add_negative_edges(g: &Graph, ratio: f64, seed: u64) -> Result<Graph, Failure> {
    if !(0.0..0.5).contains(&ratio) {
        return Err(Failure::Config(format!("ratio {ratio} outside [0, 0.5)")));
    }
    let n = g.node_count();
    let (pos, neg) = g.edge_counts();
    let target = ((pos + neg) as f64 * ratio).round() as usize;
    let mut edges = g.edges();
    let mut present: std::collections::BTreeSet<(usize, usize)> =
        edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let free_pairs = n * (n - 1) / 2 - present.len();
    if target > free_pairs {
        return Err(Failure::Config(format!(
            "cannot place {target} new edges; only {free_pairs} free pairs"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = 0;
    while added < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if present.insert(pair) {
            edges.push((pair.0, pair.1, -1));
            added += 1;
        }
    }
    let labels = g.labels().map(<[usize]>::to_vec);
    SignedGraph::from_edges(n, &edges, labels)
        .map_err(|e| Failure::Runtime(format!("perturbed graph: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    Flip,
    AddNegative,
}

impl std::str::FromStr for PerturbMode {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        match s {
            "flip" => Ok(Self::Flip),
            "add-negative" | "add_negative" => Ok(Self::AddNegative),
            other => Err(Failure::Config(format!("unknown perturbation {other}"))),
        }
    }
}

/// Accuracy-vs-ratio curves for sign flips or negative-edge injection.
pub fn run_perturb(
    cfg: &Config,
    mode: PerturbMode,
    ratios: &[f64],
    out: &mut dyn Write,
) -> Result<(), Failure> {
    cfg.validate()?;
    let Some(crate::config::DatasetSpec::Ssbm { n, k, p, eta }) = cfg.dataset.clone() else {
        return Err(Failure::Config(
            "perturbation sweeps need a synthetic (SSBM) dataset".into(),
        ));
    };
    for &r in ratios {
        if !(0.0..0.5).contains(&r) {
            return Err(Failure::Config(format!("ratio {r} outside [0, 0.5)")));
        }
    }
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    writeln!(out, "ratio,method,seed,acc").map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut any_ok = false;
    for &ratio in ratios {
        let mut per_method: Vec<(Method, Vec<f64>)> =
            methods.iter().map(|&m| (m, Vec::new())).collect();
        for &seed in &cfg.seeds {
            let built = match mode {
                PerturbMode::Flip => crate::dataio::build_graph(
                    &crate::config::DatasetSpec::Ssbm {
                        n,
                        k,
                        p,
                        eta: ratio,
                    },
                    seed,
                ),
                PerturbMode::AddNegative => crate::dataio::build_graph(
                    &crate::config::DatasetSpec::Ssbm { n, k, p, eta },
                    seed,
                )
                .and_then(|g| add_negative_edges(&g, ratio, seed ^ 0x9e3779b9)),
            };
            let g = match built {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("perturb ratio {ratio} seed {seed}: {e}");
                    continue;
                }
            };
            let kc = resolve_clusters(cfg, &g)?;
            for (method, accs) in per_method.iter_mut() {
                match run_method(&g, *method, kc, seed, cfg) {
                    Ok(res) => {
                        let acc =
                            accuracy(&res.pred, g.labels().unwrap()).unwrap_or(f64::NAN);
                        writeln!(out, "{ratio},{method},{seed},{acc:.6}")
                            .map_err(|e| Failure::Runtime(e.to_string()))?;
                        accs.push(acc);
                        any_ok = true;
                    }
                    Err(e) => {
                        eprintln!("perturb {method} ratio {ratio} seed {seed}: {e}");
                        writeln!(out, "{ratio},{method},{seed},")
                            .map_err(|e| Failure::Runtime(e.to_string()))?;
                    }
                }
            }
        }
        for (method, accs) in &per_method {
            if !accs.is_empty() {
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                writeln!(out, "{ratio},{method},mean,{mean:.6}")
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
            }
        }
    }
    if !any_ok {
        return Err(Failure::Runtime("all rows failed".into()));
    }
    Ok(())
}

/// Sign-refinement gain study: each spectral baseline on the raw graph
/// vs the refined graph, with violation ratios before and after.
pub fn run_vsr_gain(cfg: &Config, out: &mut dyn Write) -> Result<(), Failure> {
    cfg.validate()?;
    let spec = cfg.dataset.as_ref().unwrap();
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    if methods.iter().any(|m| *m == Method::Dsgc) {
        return Err(Failure::Config(
            "the refinement gain study applies to spectral baselines only".into(),
        ));
    }
    writeln!(
        out,
        "dataset,method,seed,acc_before,acc_after,delta,vr_before,vr_after"
    )
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut any_ok = false;
    let mut deltas: Vec<(Method, Vec<(f64, f64)>)> =
        methods.iter().map(|&m| (m, Vec::new())).collect();
    for &seed in &cfg.seeds {
        let g = crate::dataio::build_graph(spec, seed)?;
        let truth = g
            .labels()
            .ok_or_else(|| Failure::Config("gain study needs ground-truth labels".into()))?
            .to_vec();
        let k = resolve_clusters(cfg, &g)?;
        let refined = violation_sign_refine(&g, &cfg.rewiring.vsr())
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        let vr_before = violation_ratio(&g, &truth).ok();
        let vr_after = violation_ratio(&refined, &truth).ok();
        for (method, collected) in deltas.iter_mut() {
            let before = run_method(&g, *method, k, seed, cfg)
                .and_then(|r| accuracy(&r.pred, &truth).map_err(core_err));
            let after = run_method(&refined, *method, k, seed, cfg)
                .and_then(|r| accuracy(&r.pred, &truth).map_err(core_err));
            match (before, after) {
                (Ok(b), Ok(a)) => {
                    writeln!(
                        out,
                        "{},{method},{seed},{b:.6},{a:.6},{:.6},{},{}",
                        spec.id(),
                        a - b,
                        cell(vr_before),
                        cell(vr_after),
                    )
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                    collected.push((b, a));
                    any_ok = true;
                }
                (b, a) => {
                    let err = b.err().or(a.err()).unwrap_or_default();
                    eprintln!("gain study {method} seed {seed}: {err}");
                    writeln!(out, "{},{method},{seed},,,,,", spec.id())
                        .map_err(|e| Failure::Runtime(e.to_string()))?;
                }
            }
        }
    }
    for (method, collected) in &deltas {
        if collected.is_empty() {
            continue;
        }
        let nm = collected.len() as f64;
        let b: f64 = collected.iter().map(|x| x.0).sum::<f64>() / nm;
        let a: f64 = collected.iter().map(|x| x.1).sum::<f64>() / nm;
        writeln!(
            out,
            "{},{method},mean,{b:.6},{a:.6},{:.6},,",
            spec.id(),
            a - b
        )
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if !any_ok {
        return Err(Failure::Runtime("all rows failed".into()));
    }
    Ok(())
}

/// Write artifacts from a single DSGC run into a directory.
pub fn write_artifacts(dir: &Path, out: &MethodOutput) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    crate::dataio::write_embeddings(&dir.join("embeddings.csv"), &out.embeddings)?;
    if let Some(training) = &out.training {
        crate::dataio::write_assignment(&dir.join("assignment.csv"), &training.assignment)?;
        crate::dataio::write_loss_history(
            &dir.join("loss_history.csv"),
            &training.loss_history,
            &training.soen_history,
        )?;
    }
    Ok(())
}
