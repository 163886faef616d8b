//! `dsgc`: experiment harness for the signed-graph clustering toolkit.

mod config;
mod dataio;
mod pipeline;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use dsgc_core::graph::{generate_ssbm, violation_ratio, SsbmParams};
use dsgc_core::rewire::{density_augment, violation_sign_refine, RewiredChannels};

use config::{merge, Config, DatasetArgs, EncoderArgs, RewiringArgs, TrainingArgs};
use pipeline::{
    resolve_clusters, run_perturb, run_row, run_sweep, run_vsr_gain, write_artifacts,
    Method, PerturbMode, RESULTS_HEADER,
};

/// Exit-code classification: config errors exit 1, whole-run failures
/// exit 2.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) | Self::Runtime(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "dsgc", about = "Signed-graph clustering experiments", version)]
struct Cli {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic signed block-model graph
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output edge-list path
        #[arg(long)]
        out: PathBuf,
        /// Optional ground-truth labels output
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Apply sign refinement and density augmentation to a graph
    Rewire {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        rewiring: RewiringArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rewired edge-list output
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster one dataset with one method and report metrics
    Cluster {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        rewiring: RewiringArgs,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long, default_value = "dsgc")]
        method: String,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Held-out edge fraction for sign-recovery AUC (0 disables)
        #[arg(long)]
        mask_prob: Option<f64>,
        /// Directory for embeddings / assignment / loss-history CSVs
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run methods x seeds and emit the results CSV
    Sweep {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        rewiring: RewiringArgs,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        training: TrainingArgs,
        /// Comma-separated method list
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Comma-separated seed list
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        mask_prob: Option<f64>,
        /// Results CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robustness curves under sign flips or negative-edge injection
    Perturb {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        rewiring: RewiringArgs,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        training: TrainingArgs,
        /// `flip` or `add-negative`
        #[arg(long)]
        mode: String,
        /// Comma-separated perturbation ratios in [0, 0.5)
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy gain of spectral baselines from sign refinement
    VsrGain {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        rewiring: RewiringArgs,
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the cluster-sorted adjacency matrix as PNG and CSV grid
    ExportAdjacency {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_png: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

fn base_config(path: &Option<PathBuf>) -> Result<Config, Failure> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn std::io::Write>, Failure> {
    match path {
        Some(p) => std::fs::File::create(p)
            .map(|f| Box::new(f) as Box<dyn std::io::Write>)
            .map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            n,
            k,
            p,
            eta,
            seed,
            out,
            labels_out,
        } => {
            let g: dataio::Graph = generate_ssbm(&SsbmParams { n, k, p, eta, seed })
                .map_err(|e| Failure::Config(e.to_string()))?;
            dataio::write_edge_list(&out, &g.edges())?;
            if let Some(path) = labels_out {
                dataio::write_labels(&path, g.labels().unwrap())?;
            }
            Ok(())
        }
        Command::Rewire {
            dataset,
            rewiring,
            seed,
            out,
        } => {
            let cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &rewiring,
                &EncoderArgs::default(),
                &TrainingArgs::default(),
            )?;
            let spec = cfg
                .dataset
                .clone()
                .ok_or_else(|| Failure::Config("no dataset specified".into()))?;
            let g = dataio::build_graph(&spec, seed)?;
            let refined = if cfg.rewiring.no_vsr {
                g.clone()
            } else {
                violation_sign_refine(&g, &cfg.rewiring.vsr())
                    .map_err(|e| Failure::Runtime(e.to_string()))?
            };
            if let Some(labels) = g.labels() {
                let before = violation_ratio(&g, labels).ok();
                let after = violation_ratio(&refined, labels).ok();
                let show = |v: Option<f64>| {
                    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "degenerate".into())
                };
                println!("vr_before={}", show(before));
                println!("vr_after={}", show(after));
            }
            let channels = if cfg.rewiring.no_da {
                RewiredChannels::from_graph(&refined)
            } else {
                density_augment(&refined, &cfg.rewiring.da())
                    .map_err(|e| Failure::Runtime(e.to_string()))?
            };
            dataio::write_edge_list(&out, &dataio::channel_edges(&channels))
        }
        Command::Cluster {
            dataset,
            rewiring,
            encoder,
            training,
            method,
            clusters,
            seed,
            mask_prob,
            out_dir,
        } => {
            let mut cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &rewiring,
                &encoder,
                &training,
            )?;
            if let Some(k) = clusters {
                cfg.clusters = Some(k);
            }
            if let Some(p) = mask_prob {
                cfg.mask_prob = p;
            }
            cfg.seeds = vec![seed];
            cfg.methods = vec![method.clone()];
            cfg.validate()?;
            let spec = cfg.dataset.clone().unwrap();
            let method: Method = method.parse()?;
            let g = dataio::build_graph(&spec, seed)?;
            let k = resolve_clusters(&cfg, &g)?;
            println!("{RESULTS_HEADER}");
            let row = run_row(&g, method, k, seed, &cfg);
            println!("{}", row.to_csv_line());
            if let Err(e) = &row.metrics {
                return Err(Failure::Runtime(e.clone()));
            }
            if let Some(dir) = out_dir.or(cfg.output_dir.clone()) {
                // rerun is cheap to avoid threading artifacts through
                // the row API; the run is deterministic per seed
                let out = pipeline::run_method(&g, method, k, seed, &cfg)
                    .map_err(Failure::Runtime)?;
                write_artifacts(&dir, &out)?;
            }
            Ok(())
        }
        Command::Sweep {
            dataset,
            rewiring,
            encoder,
            training,
            methods,
            seeds,
            clusters,
            mask_prob,
            out,
        } => {
            let mut cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &rewiring,
                &encoder,
                &training,
            )?;
            if !methods.is_empty() {
                cfg.methods = methods;
            }
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(k) = clusters {
                cfg.clusters = Some(k);
            }
            if let Some(p) = mask_prob {
                cfg.mask_prob = p;
            }
            let mut writer = open_out(&out)?;
            run_sweep(&cfg, &mut writer)
        }
        Command::Perturb {
            dataset,
            rewiring,
            encoder,
            training,
            mode,
            ratios,
            methods,
            seeds,
            clusters,
            out,
        } => {
            let mut cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &rewiring,
                &encoder,
                &training,
            )?;
            if !methods.is_empty() {
                cfg.methods = methods;
            }
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(k) = clusters {
                cfg.clusters = Some(k);
            }
            if ratios.is_empty() {
                return Err(Failure::Config("no perturbation ratios given".into()));
            }
            let mode: PerturbMode = mode.parse()?;
            let mut writer = open_out(&out)?;
            run_perturb(&cfg, mode, &ratios, &mut writer)
        }
        Command::VsrGain {
            dataset,
            rewiring,
            methods,
            seeds,
            clusters,
            out,
        } => {
            let mut cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &rewiring,
                &EncoderArgs::default(),
                &TrainingArgs::default(),
            )?;
            if !methods.is_empty() {
                cfg.methods = methods;
            } else {
                cfg.methods = dsgc_core::spectral::SpectralKind::ALL
                    .iter()
                    .map(|k| k.to_string())
                    .collect();
            }
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(k) = clusters {
                cfg.clusters = Some(k);
            }
            let mut writer = open_out(&out)?;
            run_vsr_gain(&cfg, &mut writer)
        }
        Command::ExportAdjacency {
            dataset,
            seed,
            out_png,
            out_csv,
        } => {
            let cfg = merge(
                base_config(&cli.config)?,
                &dataset,
                &RewiringArgs::default(),
                &EncoderArgs::default(),
                &TrainingArgs::default(),
            )?;
            let spec = cfg
                .dataset
                .clone()
                .ok_or_else(|| Failure::Config("no dataset specified".into()))?;
            let g = dataio::build_graph(&spec, seed)?;
            let labels = g
                .labels()
                .ok_or_else(|| Failure::Config("adjacency export needs labels".into()))?
                .to_vec();
            if out_png.is_none() && out_csv.is_none() {
                return Err(Failure::Config("need --out-png and/or --out-csv".into()));
            }
            dataio::export_sorted_adjacency(&g, &labels, out_png.as_deref(), out_csv.as_deref())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path too
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            std::process::exit(1);
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("run failed: {m}");
            std::process::exit(2);
        }
    }
}
