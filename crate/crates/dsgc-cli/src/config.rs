//! Experiment configuration: JSON file plus CLI overrides.
//!
//! Every knob has a default, so a bare `--ssbm-n ... --clusters ...`
//! invocation works without a config file, and a config file works
//! without flags. Flags win over file values.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use dsgc_core::encoder::Variant;
use dsgc_core::rewire::{DaParams, VsrParams};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSpec {
    Ssbm {
        n: usize,
        k: usize,
        p: f64,
        eta: f64,
    },
    EdgeList {
        path: PathBuf,
        #[serde(default)]
        labels: Option<PathBuf>,
    },
    TimeSeries {
        path: PathBuf,
        threshold: f64,
    },
}

impl DatasetSpec {
    pub fn id(&self) -> String {
        match self {
            Self::Ssbm { n, k, p, eta } => format!("ssbm(n={n};k={k};p={p};eta={eta})"),
            Self::EdgeList { path, .. } | Self::TimeSeries { path, .. } => path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

fn default_methods() -> Vec<String> {
    vec!["dsgc".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewiringCfg {
    pub vsr_lmax: usize,
    pub vsr_delta_plus: f64,
    pub vsr_delta_minus: f64,
    pub vsr_edges_only: bool,
    pub da_mplus: usize,
    pub da_mminus: usize,
    pub no_vsr: bool,
    pub no_da: bool,
}

impl Default for RewiringCfg {
    fn default() -> Self {
        let vsr = VsrParams::default();
        let da = DaParams::default();
        Self {
            vsr_lmax: vsr.l_max,
            vsr_delta_plus: vsr.delta_plus,
            vsr_delta_minus: vsr.delta_minus,
            vsr_edges_only: vsr.edges_only,
            da_mplus: da.m_plus,
            da_mminus: da.m_minus,
            no_vsr: false,
            no_da: false,
        }
    }
}

impl RewiringCfg {
    pub fn vsr(&self) -> VsrParams {
        VsrParams {
            l_max: self.vsr_lmax,
            delta_plus: self.vsr_delta_plus,
            delta_minus: self.vsr_delta_minus,
            edges_only: self.vsr_edges_only,
        }
    }

    pub fn da(&self) -> DaParams {
        DaParams {
            m_plus: self.da_mplus,
            m_minus: self.da_mminus,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderCfg {
    pub layers: usize,
    pub hidden_dim: usize,
    pub eps_pos: f64,
    pub eps_neg: f64,
    pub variant: String,
}

impl Default for EncoderCfg {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden_dim: 32,
            eps_pos: 1.0,
            eps_neg: 1.0,
            variant: "dsgc".into(),
        }
    }
}

impl EncoderCfg {
    pub fn parsed_variant(&self) -> Result<Variant, Failure> {
        self.variant
            .parse()
            .map_err(|e| Failure::Config(format!("{e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingCfg {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    pub loss_on_original: bool,
    pub no_regu: bool,
}

impl Default for TrainingCfg {
    fn default() -> Self {
        Self {
            lambda: 0.03,
            lr: 0.01,
            epochs: 300,
            loss_on_original: false,
            no_regu: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dataset: Option<DatasetSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub clusters: Option<usize>,
    pub rewiring: RewiringCfg,
    pub encoder: EncoderCfg,
    pub training: TrainingCfg,
    pub mask_prob: f64,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &PathBuf) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.seeds.is_empty() {
            return Err(Failure::Config("seeds list must be nonempty".into()));
        }
        if self.methods.is_empty() {
            return Err(Failure::Config("method list must be nonempty".into()));
        }
        if !(0.0..1.0).contains(&self.mask_prob) {
            return Err(Failure::Config(format!(
                "mask_prob {} outside [0, 1)",
                self.mask_prob
            )));
        }
        match &self.dataset {
            None => return Err(Failure::Config("no dataset specified".into())),
            Some(DatasetSpec::EdgeList { path, labels }) => {
                if !path.exists() {
                    return Err(Failure::Config(format!("missing {}", path.display())));
                }
                if let Some(l) = labels {
                    if !l.exists() {
                        return Err(Failure::Config(format!("missing {}", l.display())));
                    }
                }
            }
            Some(DatasetSpec::TimeSeries { path, .. }) => {
                if !path.exists() {
                    return Err(Failure::Config(format!("missing {}", path.display())));
                }
            }
            Some(DatasetSpec::Ssbm { .. }) => {}
        }
        Ok(())
    }
}

/// Dataset selection flags shared by most subcommands.
#[derive(Debug, Clone, Args, Default)]
pub struct DatasetArgs {
    /// SSBM node count (with --ssbm-k/--ssbm-p/--ssbm-eta)
    #[arg(long)]
    pub ssbm_n: Option<usize>,
    /// SSBM cluster count
    #[arg(long)]
    pub ssbm_k: Option<usize>,
    /// SSBM edge probability
    #[arg(long)]
    pub ssbm_p: Option<f64>,
    /// SSBM sign-flip probability
    #[arg(long)]
    pub ssbm_eta: Option<f64>,
    /// Signed edge-list file (`u v s` per line)
    #[arg(long, conflicts_with = "ssbm_n")]
    pub edge_list: Option<PathBuf>,
    /// Ground-truth labels file (`node cluster` per line)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Time-series CSV (header of node names, one column per node)
    #[arg(long, conflicts_with_all = ["ssbm_n", "edge_list"])]
    pub time_series: Option<PathBuf>,
    /// Absolute correlation threshold for time-series ingestion
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl DatasetArgs {
    pub fn to_spec(&self) -> Result<Option<DatasetSpec>, Failure> {
        if let Some(path) = &self.time_series {
            return Ok(Some(DatasetSpec::TimeSeries {
                path: path.clone(),
                threshold: self.threshold.unwrap_or(0.5),
            }));
        }
        if let Some(path) = &self.edge_list {
            return Ok(Some(DatasetSpec::EdgeList {
                path: path.clone(),
                labels: self.labels.clone(),
            }));
        }
        if self.ssbm_n.is_some()
            || self.ssbm_k.is_some()
            || self.ssbm_p.is_some()
            || self.ssbm_eta.is_some()
        {
            let (Some(n), Some(k), Some(p)) = (self.ssbm_n, self.ssbm_k, self.ssbm_p) else {
                return Err(Failure::Config(
                    "--ssbm-n, --ssbm-k and --ssbm-p are all required for a synthetic dataset"
                        .into(),
                ));
            };
            return Ok(Some(DatasetSpec::Ssbm {
                n,
                k,
                p,
                eta: self.ssbm_eta.unwrap_or(0.0),
            }));
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct RewiringArgs {
    /// Maximum walk length for sign refinement
    #[arg(long)]
    pub vsr_lmax: Option<usize>,
    /// Positive refinement threshold
    #[arg(long)]
    pub vsr_delta_plus: Option<f64>,
    /// Negative refinement threshold
    #[arg(long, allow_hyphen_values = true)]
    pub vsr_delta_minus: Option<f64>,
    /// Refine existing edges only, never add new ones
    #[arg(long)]
    pub vsr_edges_only: bool,
    /// Positive-channel walk extent for density augmentation
    #[arg(long)]
    pub da_mplus: Option<usize>,
    /// Negative-channel walk extent for density augmentation
    #[arg(long)]
    pub da_mminus: Option<usize>,
    /// Skip sign refinement
    #[arg(long)]
    pub no_vsr: bool,
    /// Skip density augmentation
    #[arg(long)]
    pub no_da: bool,
}

#[derive(Debug, Clone, Args, Default)]
pub struct EncoderArgs {
    /// Propagation depth of the encoder
    #[arg(long)]
    pub layers: Option<usize>,
    /// Per-branch embedding width
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Positive-channel self-loop weight
    #[arg(long)]
    pub eps_pos: Option<f64>,
    /// Negative-channel self-loop weight
    #[arg(long)]
    pub eps_neg: Option<f64>,
    /// Encoder variant: dsgc, with-eef, or no-minus
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct TrainingArgs {
    /// Regularization strength
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Evaluate the loss on the raw input graph instead of the rewired one
    #[arg(long)]
    pub loss_on_original: bool,
    /// Drop the degree regularization term
    #[arg(long)]
    pub no_regu: bool,
}

/// Overlay CLI flags onto a (possibly file-loaded) config.
pub fn merge(
    mut cfg: Config,
    dataset: &DatasetArgs,
    rewiring: &RewiringArgs,
    encoder: &EncoderArgs,
    training: &TrainingArgs,
) -> Result<Config, Failure> {
    if let Some(spec) = dataset.to_spec()? {
        cfg.dataset = Some(spec);
    }
    let r = &mut cfg.rewiring;
    if let Some(v) = rewiring.vsr_lmax {
        r.vsr_lmax = v;
    }
    if let Some(v) = rewiring.vsr_delta_plus {
        r.vsr_delta_plus = v;
    }
    if let Some(v) = rewiring.vsr_delta_minus {
        r.vsr_delta_minus = v;
    }
    if rewiring.vsr_edges_only {
        r.vsr_edges_only = true;
    }
    if let Some(v) = rewiring.da_mplus {
        r.da_mplus = v;
    }
    if let Some(v) = rewiring.da_mminus {
        r.da_mminus = v;
    }
    if rewiring.no_vsr {
        r.no_vsr = true;
    }
    if rewiring.no_da {
        r.no_da = true;
    }
    let e = &mut cfg.encoder;
    if let Some(v) = encoder.layers {
        e.layers = v;
    }
    if let Some(v) = encoder.hidden_dim {
        e.hidden_dim = v;
    }
    if let Some(v) = encoder.eps_pos {
        e.eps_pos = v;
    }
    if let Some(v) = encoder.eps_neg {
        e.eps_neg = v;
    }
    if let Some(v) = &encoder.variant {
        e.variant = v.clone();
    }
    let t = &mut cfg.training;
    if let Some(v) = training.lambda {
        t.lambda = v;
    }
    if let Some(v) = training.lr {
        t.lr = v;
    }
    if let Some(v) = training.epochs {
        t.epochs = v;
    }
    if training.loss_on_original {
        t.loss_on_original = true;
    }
    if training.no_regu {
        t.no_regu = true;
    }
    Ok(cfg)
}
