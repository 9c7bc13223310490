//! Batch experiment driver: one host family swept over a k-grid, a fixed
//! extraction pipeline, per-trial seeds derived from a single master seed,
//! and an append-only CSV of re-verified results. Fits log-log slopes of
//! the per-k median minor order against two growth models.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dense::{self, DenseError, DenseParams};
use crate::graph::{self, Graph, GraphError, VertexSet};
use crate::growth::{self, GrowthError, GrowthParams};
use crate::minor::{self, MinorCertificate, MinorViolation};
use crate::percolation::{self, PercolationError, PercolationParams};
use crate::seeds;
use crate::sprinkling::{self, SprinklingExit, SprinklingInstance};
use crate::tree::{self, RootedTree, TreeError};

pub const CSV_HEADER: &str = "k,trial,seed,pipeline,exit_kind,minor_order,upper_bound,wall_ms";
const SALT_SPRINKLE_P1: u64 = 0x70_0001;
const SALT_SPRINKLE_EXTRACT: u64 = 0x70_0002;
/// Hosts are keyed on k alone so different master seeds rerun the same
/// sweep with fresh coins.
const HOST_SALT: u64 = 0x70_00F0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("bad config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Percolation(#[from] PercolationError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("k = {k} trial {trial}: {reason}")]
    Verification { k: u32, trial: u32, reason: String },
    #[error("fit: {0}")]
    Fit(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Host graph family, instantiated per grid point k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HostFamily {
    /// K_{k+1}: the tightest min-degree-k host.
    Complete,
    /// `copies` disjoint K_{k+1} blocks.
    CliqueUnion { copies: u32 },
    /// K_{k,k}.
    Bipartite,
    /// k-regular graph on 2*ceil((k+1)/2) + k vertices, built once per k.
    RandomRegular,
    /// Fixed host from an edge-list file; must have min degree >= k.
    File { path: PathBuf },
}

impl HostFamily {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let bad = || {
            ExperimentError::Config(format!(
                "unknown family {text:?}; expected complete, clique-union[:copies], \
                 bipartite, random-regular, or file:<path>"
            ))
        };
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(HostFamily::File {
                path: PathBuf::from(path),
            });
        }
        if let Some(copies) = text.strip_prefix("clique-union:") {
            let copies: u32 = copies.parse().map_err(|_| bad())?;
            if copies == 0 {
                return Err(ExperimentError::Config(
                    "clique-union needs >= 1 copy".into(),
                ));
            }
            return Ok(HostFamily::CliqueUnion { copies });
        }
        match text {
            "complete" => Ok(HostFamily::Complete),
            "clique-union" => Ok(HostFamily::CliqueUnion { copies: 3 }),
            "bipartite" | "complete-bipartite" => Ok(HostFamily::Bipartite),
            "random-regular" => Ok(HostFamily::RandomRegular),
            _ => Err(bad()),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            HostFamily::Complete => "complete".into(),
            HostFamily::CliqueUnion { copies } => format!("clique-union:{copies}"),
            HostFamily::Bipartite => "bipartite".into(),
            HostFamily::RandomRegular => "random-regular".into(),
            HostFamily::File { path } => format!("file:{}", path.display()),
        }
    }

    /// Instantiate the host for grid point k. Deterministic in (family, k).
    pub fn host(&self, k: u32) -> Result<Graph, ExperimentError> {
        if k == 0 {
            return Err(ExperimentError::Config("k must be positive".into()));
        }
        let g = match self {
            HostFamily::Complete => graph::complete(k + 1),
            HostFamily::CliqueUnion { copies } => graph::clique_union(*copies, k + 1),
            HostFamily::Bipartite => graph::complete_bipartite(k, k),
            HostFamily::RandomRegular => {
                // keep n*d even and comfortably above d
                let n = 2 * k.div_ceil(2) + k.max(2);
                let n = if (n * k).is_multiple_of(2) { n } else { n + 1 };
                let (g, _) = graph::random_regular(n, k, seeds::mix2(HOST_SALT, k as u64))?;
                g
            }
            HostFamily::File { path } => graph::load_edge_list(path)?,
        };
        let min_degree = g.min_degree()?;
        if min_degree < k {
            return Err(ExperimentError::Config(format!(
                "host {} has min degree {min_degree} < k = {k}",
                self.tag()
            )));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    TreeGrowth,
    Dense,
    SprinklingOnly,
}

impl Pipeline {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        match text {
            "tree-growth" => Ok(Pipeline::TreeGrowth),
            "dense" => Ok(Pipeline::Dense),
            "sprinkling-only" => Ok(Pipeline::SprinklingOnly),
            _ => Err(ExperimentError::Config(format!(
                "unknown pipeline {text:?}; expected tree-growth, dense, or sprinkling-only"
            ))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Pipeline::TreeGrowth => "tree-growth",
            Pipeline::Dense => "dense",
            Pipeline::SprinklingOnly => "sprinkling-only",
        }
    }
}

/// Whether rows carry measured wall times. The default zeroes them so a
/// rerun with the same master seed writes a byte-identical CSV; measured
/// timings are an explicit opt-in that gives up that guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Timing {
    Zeroed,
    Measured,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: HostFamily,
    /// strictly increasing k grid
    pub ks: Vec<u32>,
    pub nu: f64,
    pub epsilon: f64,
    pub pipeline: Pipeline,
    pub trials: u32,
    pub master_seed: u64,
    pub delta: Option<f64>,
    pub star_cap: Option<u32>,
    pub seed_tree: Option<u32>,
    pub out_dir: PathBuf,
    pub timing: Timing,
    /// also emit a whitespace-separated per-k summary table
    pub gnuplot: bool,
}

impl ExperimentConfig {
    pub fn new(family: HostFamily, ks: Vec<u32>, pipeline: Pipeline, out_dir: PathBuf) -> Self {
        ExperimentConfig {
            family,
            ks,
            nu: 0.9,
            epsilon: 0.2,
            pipeline,
            trials: 1,
            master_seed: 1,
            delta: None,
            star_cap: None,
            seed_tree: None,
            out_dir,
            timing: Timing::Zeroed,
            gnuplot: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.ks.is_empty() {
            return bad("k grid is empty".into());
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "k grid must be strictly increasing, got {:?}",
                self.ks
            ));
        }
        if self.ks[0] == 0 {
            return bad("k must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return bad(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            ));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad(format!("nu must lie in (0, 1], got {}", self.nu));
        }
        Ok(())
    }

    /// Set one flat `key = value` pair; shared by the config-file parser
    /// and command-line overrides.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let bad = |what: &str| ExperimentError::Config(format!("bad {what}: {value:?}"));
        match key {
            "family" => self.family = HostFamily::parse(value)?,
            "k" => {
                let ks: Result<Vec<u32>, _> =
                    value.split(',').map(|t| t.trim().parse::<u32>()).collect();
                self.ks = ks.map_err(|_| bad("k list"))?;
            }
            "nu" => self.nu = value.parse().map_err(|_| bad("nu"))?,
            "epsilon" => self.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
            "pipeline" => self.pipeline = Pipeline::parse(value)?,
            "trials" => self.trials = value.parse().map_err(|_| bad("trials"))?,
            "seed" => self.master_seed = value.parse().map_err(|_| bad("seed"))?,
            "delta" => self.delta = Some(value.parse().map_err(|_| bad("delta"))?),
            "star-cap" => self.star_cap = Some(value.parse().map_err(|_| bad("star-cap"))?),
            "seed-tree" => self.seed_tree = Some(value.parse().map_err(|_| bad("seed-tree"))?),
            "out" => self.out_dir = PathBuf::from(value),
            "timing" => {
                self.timing = match value {
                    "zeroed" => Timing::Zeroed,
                    "measured" => Timing::Measured,
                    _ => return Err(bad("timing (zeroed|measured)")),
                }
            }
            "gnuplot" => self.gnuplot = value.parse().map_err(|_| bad("gnuplot (true|false)"))?,
            _ => {
                return Err(ExperimentError::Config(format!(
                    "unknown config key {key:?}"
                )));
            }
        }
        Ok(())
    }

    /// Flat `key = value` file, one pair per line, `#` comments.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let shown = path.display().to_string();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = ExperimentConfig::new(
            HostFamily::Complete,
            vec![100],
            Pipeline::Dense,
            PathBuf::from("."),
        );
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ExperimentError::Parse {
                path: shown.clone(),
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            cfg.apply_kv(key.trim(), value.trim())
                .map_err(|e| ExperimentError::Parse {
                    path: shown.clone(),
                    line: i + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(cfg)
    }
}

/// One completed, re-verified trial. `stage_digest` is a stable 64-bit
/// fold of the pipeline's stage trace; it is not part of the CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub k: u32,
    pub trial: u32,
    pub seed: u64,
    pub pipeline: &'static str,
    pub exit_kind: &'static str,
    pub minor_order: u32,
    pub upper_bound: u32,
    pub wall_ms: u64,
    pub stage_digest: String,
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k,
            self.trial,
            self.seed,
            self.pipeline,
            self.exit_kind,
            self.minor_order,
            self.upper_bound,
            self.wall_ms
        )
    }
}

fn fold(h: u64, x: u64) -> u64 {
    seeds::mix2(h, x)
}

fn digest_to_hex(h: u64) -> String {
    format!("{h:016x}")
}

struct TrialRun {
    certificate: MinorCertificate,
    realized: Graph,
    exit_kind: &'static str,
    stage_digest: String,
}

/// Percolate once at p1, span the largest component with a BFS tree,
/// carve it into sqrt(k)-sized pieces, and contract at the leftover rate.
/// Hosts whose first round leaves no piece-sized component degrade to an
/// order-1 certificate.
fn run_sprinkling_only(
    g: &Graph,
    k: u32,
    epsilon: f64,
    seed: u64,
) -> Result<TrialRun, ExperimentError> {
    let perc = PercolationParams::new(k, epsilon)?;
    let base = percolation::percolate(g, perc.p1, seeds::mix2(seed, SALT_SPRINKLE_P1));
    let comps = base.components();
    let giant = comps.first().expect("host is nonempty");

    let degrade = |base: Graph, h: u64| {
        let certificate = MinorCertificate::new(vec![VertexSet::singleton(0)]);
        assert!(minor::is_valid_minor(&base, &certificate));
        TrialRun {
            certificate,
            realized: base,
            exit_kind: "tiny_giant",
            stage_digest: digest_to_hex(h),
        }
    };
    let mut h = fold(0x5150, giant.len() as u64);

    // BFS spanning tree of the giant in the round-one graph
    let root = giant.min().expect("component is nonempty");
    let mut tree = RootedTree::new(root);
    let mut queue = vec![root];
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for &w in base.neighbors(u) {
            if tree.add_leaf(u, w).is_ok() {
                queue.push(w);
            }
        }
    }
    let part = match tree::tree_partition(&tree, k as u64) {
        Ok(p) => p,
        Err(TreeError::Undersized { .. }) => return Ok(degrade(base, h)),
        Err(e) => unreachable!("partitioning a BFS tree: {e}"),
    };
    let span: Vec<u32> = tree.vertices().collect();
    let local = |v: u32| span.binary_search(&v).unwrap() as u32;
    let pieces: Vec<VertexSet> = part
        .pieces
        .iter()
        .map(|p| VertexSet::from_unsorted(p.iter().map(local).collect()))
        .collect();
    let forest_edges: Vec<(u32, u32)> = tree.edges().map(|(a, b)| (local(a), local(b))).collect();
    let mut cross: Vec<(u32, u32)> = Vec::new();
    for &u in &span {
        for &w in g.neighbors(u) {
            if w > u && span.binary_search(&w).is_ok() {
                cross.push((local(u), local(w)));
            }
        }
    }
    let sqrt_k = (k as f64).sqrt();
    let b2 = pieces
        .iter()
        .map(|p| p.len() as f64 / sqrt_k)
        .fold(1.0f64, f64::max);
    let c1 = (cross.len() as f64 / (k as f64 * span.len() as f64)).max(1e-12);
    let c2 = perc.p2 * k as f64;
    h = fold(h, span.len() as u64);
    h = fold(h, pieces.len() as u64);
    h = fold(h, cross.len() as u64);

    let inst = SprinklingInstance::new(
        span.len() as u32,
        k,
        1.0,
        b2,
        c1,
        c2,
        pieces,
        forest_edges,
        cross,
    )
    .expect("BFS-tree partition yields a valid contraction instance");
    let out = sprinkling::extract(&inst, seeds::mix2(seed, SALT_SPRINKLE_EXTRACT));
    h = fold(h, out.h_order as u64);

    let certificate = MinorCertificate::new(
        out.certificate
            .branch_sets
            .iter()
            .map(|set| VertexSet::from_unsorted(set.iter().map(|v| span[v as usize]).collect()))
            .collect(),
    );
    let realized_edges: Vec<(u32, u32)> = out
        .realized
        .edges()
        .map(|(a, b)| (span[a as usize], span[b as usize]))
        .collect();
    let realized = Graph::from_edges(g.n(), &realized_edges).expect("span edges stay valid");
    let exit_kind = match out.exit {
        SprinklingExit::Completed => "contracted",
        SprinklingExit::HypothesisViolated => "all_pruned",
    };
    Ok(TrialRun {
        certificate,
        realized,
        exit_kind,
        stage_digest: digest_to_hex(h),
    })
}

/// One trial with its artifacts kept; `run_experiment` drops everything
/// but the record.
#[derive(Debug)]
pub struct SingleOutcome {
    pub record: ExperimentRecord,
    pub certificate: MinorCertificate,
    pub realized: Graph,
}

/// Run trial `trial` of grid point `k` under `cfg`, keeping the
/// certificate and the realized graph it was verified against.
pub fn run_single(
    cfg: &ExperimentConfig,
    k: u32,
    trial: u32,
) -> Result<SingleOutcome, ExperimentError> {
    let host = cfg.family.host(k)?;
    let seed = seeds::mix3(cfg.master_seed, k as u64, trial as u64);
    run_trial_full(cfg, &host, k, trial, seed)
}

fn run_trial(
    cfg: &ExperimentConfig,
    host: &Graph,
    k: u32,
    trial: u32,
    seed: u64,
) -> Result<ExperimentRecord, ExperimentError> {
    Ok(run_trial_full(cfg, host, k, trial, seed)?.record)
}

fn run_trial_full(
    cfg: &ExperimentConfig,
    host: &Graph,
    k: u32,
    trial: u32,
    seed: u64,
) -> Result<SingleOutcome, ExperimentError> {
    let start = Instant::now();
    let run = match cfg.pipeline {
        Pipeline::TreeGrowth => {
            let params = GrowthParams::with_overrides(
                k,
                cfg.epsilon,
                cfg.delta,
                cfg.star_cap,
                cfg.seed_tree,
            )?;
            let out = growth::run(host, &params, seed)?;
            let mut h = fold(0x6707, out.steps as u64);
            for t in &out.trace {
                for x in [t.step, t.tree, t.frontier, t.discarded, t.bad] {
                    h = fold(h, x as u64);
                }
            }
            TrialRun {
                certificate: out.certificate,
                realized: out.realized,
                exit_kind: out.exit.tag(),
                stage_digest: digest_to_hex(h),
            }
        }
        Pipeline::Dense => {
            let params = DenseParams::new(k, host.n(), cfg.nu, cfg.epsilon)?;
            let out = dense::run_dense(host, &params, seed)?;
            let mut h = fold(0xDE45, out.witness_size as u64);
            for s in &out.stages {
                h = fold(h, s.stage.len() as u64);
                h = fold(h, s.pass as u64);
                h = fold(h, s.measured.to_bits());
            }
            TrialRun {
                certificate: out.certificate,
                realized: out.realized,
                exit_kind: out.exit.tag(),
                stage_digest: digest_to_hex(h),
            }
        }
        Pipeline::SprinklingOnly => run_sprinkling_only(host, k, cfg.epsilon, seed)?,
    };

    // independent re-check: no record exists unless its certificate verifies
    let fail = |reason: String| ExperimentError::Verification { k, trial, reason };
    if let Some(v) =
        minor::verify_minor(&run.realized, &run.certificate).map_err(|e| fail(e.to_string()))?
    {
        return Err(fail(format!("{v:?}")));
    }
    let minor_order = run.certificate.order();
    let upper_bound = minor::hadwiger_upper(&run.realized);
    if minor_order == 0 || minor_order > upper_bound {
        return Err(fail(format!(
            "order {minor_order} outside [1, {upper_bound}]"
        )));
    }
    let wall_ms = match cfg.timing {
        Timing::Zeroed => 0,
        Timing::Measured => start.elapsed().as_millis() as u64,
    };
    Ok(SingleOutcome {
        record: ExperimentRecord {
            k,
            trial,
            seed,
            pipeline: cfg.pipeline.tag(),
            exit_kind: run.exit_kind,
            minor_order,
            upper_bound,
            wall_ms,
            stage_digest: run.stage_digest,
        },
        certificate: run.certificate,
        realized: run.realized,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub records: Vec<ExperimentRecord>,
    pub csv_path: PathBuf,
    pub gnuplot_path: Option<PathBuf>,
    /// present iff the grid has >= 3 k-points
    pub fit: Option<ScalingFit>,
}

/// Sweep the grid. Trials within a k-point run on the worker pool with
/// precomputed seeds; rows are written in (k, trial) order and flushed
/// after every k-point, so an interrupted sweep leaves a usable prefix.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let csv_path = cfg.out_dir.join("results.csv");
    let mut file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    writeln!(file, "{CSV_HEADER}").map_err(io_err(&csv_path))?;

    let mut records = Vec::with_capacity(cfg.ks.len() * cfg.trials as usize);
    for &k in &cfg.ks {
        let host = cfg.family.host(k)?;
        let trial_seeds: Vec<u64> = (0..cfg.trials)
            .map(|i| seeds::mix3(cfg.master_seed, k as u64, i as u64))
            .collect();
        let runs: Vec<Result<ExperimentRecord, ExperimentError>> = trial_seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| run_trial(cfg, &host, k, i as u32, s))
            .collect();
        let mut chunk = String::new();
        for run in runs {
            let rec = run?;
            chunk.push_str(&rec.csv_row());
            chunk.push('\n');
            records.push(rec);
        }
        file.write_all(chunk.as_bytes())
            .map_err(io_err(&csv_path))?;
        file.flush().map_err(io_err(&csv_path))?;
    }
    drop(file);

    let fit = if distinct_ks(&records) >= 3 {
        Some(fit_scaling(&records)?)
    } else {
        None
    };
    let gnuplot_path = if cfg.gnuplot {
        let path = cfg.out_dir.join("results.dat");
        write_gnuplot(&records, &path)?;
        Some(path)
    } else {
        None
    };
    Ok(ExperimentSummary {
        records,
        csv_path,
        gnuplot_path,
        fit,
    })
}

fn distinct_ks(records: &[ExperimentRecord]) -> usize {
    let mut ks: Vec<u32> = records.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.len()
}

/// Per-k order statistics: median and Tukey hinges of the minor orders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPointStat {
    pub k: u32,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub trials: u32,
}

/// Least-squares slopes of ln(median order) against two regressors:
/// ln k, and ln(k / ln k). Residuals are in grid order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<KPointStat>,
    pub slope_log_k: f64,
    pub stderr_log_k: f64,
    pub residuals_log_k: Vec<f64>,
    pub slope_log_ratio: f64,
    pub stderr_log_ratio: f64,
    pub residuals_log_ratio: Vec<f64>,
}

fn median_of(sorted: &[u32]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

fn hinges(sorted: &[u32]) -> (f64, f64, f64) {
    let n = sorted.len();
    let med = median_of(sorted);
    if n == 1 {
        return (med, med, med);
    }
    let half = n / 2;
    let q1 = median_of(&sorted[..half]);
    let q3 = median_of(&sorted[n - half..]);
    (q1, med, q3)
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, Vec<f64>), ExperimentError> {
    let n = xs.len();
    let nf = n as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::Fit("regressor is constant".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = (n as i64 - 2).max(1) as f64;
    let stderr = (rss / dof / sxx).sqrt();
    Ok((slope, stderr, residuals))
}

/// Median minor order per k, fitted on a log-log scale. Requires at
/// least three distinct k values and k >= 2 throughout.
/// Group records by k (ascending) and take order statistics of the
/// minor orders at each grid point.
pub fn per_k_stats(records: &[ExperimentRecord]) -> Vec<KPointStat> {
    let mut by_k: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for r in records {
        by_k.entry(r.k).or_default().push(r.minor_order);
    }
    let mut points = Vec::with_capacity(by_k.len());
    for (&k, orders) in &mut by_k {
        orders.sort_unstable();
        let (q1, median, q3) = hinges(orders);
        points.push(KPointStat {
            k,
            median,
            q1,
            q3,
            trials: orders.len() as u32,
        });
    }
    points
}

pub fn fit_scaling(records: &[ExperimentRecord]) -> Result<ScalingFit, ExperimentError> {
    let points = per_k_stats(records);
    if points.len() < 3 {
        return Err(ExperimentError::Fit(format!(
            "need >= 3 distinct k values, got {}",
            points.len()
        )));
    }
    if points.first().map(|p| p.k) < Some(2) {
        return Err(ExperimentError::Fit("scaling fits need k >= 2".into()));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
    let xs_k: Vec<f64> = points.iter().map(|p| (p.k as f64).ln()).collect();
    let xs_ratio: Vec<f64> = points
        .iter()
        .map(|p| (p.k as f64 / (p.k as f64).ln()).ln())
        .collect();
    let (slope_log_k, stderr_log_k, residuals_log_k) = ols(&xs_k, &ys)?;
    let (slope_log_ratio, stderr_log_ratio, residuals_log_ratio) = ols(&xs_ratio, &ys)?;
    Ok(ScalingFit {
        points,
        slope_log_k,
        stderr_log_k,
        residuals_log_k,
        slope_log_ratio,
        stderr_log_ratio,
        residuals_log_ratio,
    })
}

/// Parse a results CSV back into records (stage digests are not stored).
pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let err = |line: usize, msg: String| ExperimentError::Parse {
        path: shown.clone(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => return Err(err(1, format!("bad header {h:?}"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(err(
                i + 1,
                format!("expected 8 columns, got {}", cols.len()),
            ));
        }
        let parse_u32 = |j: usize, what: &str| {
            cols[j]
                .parse::<u32>()
                .map_err(|_| err(i + 1, format!("bad {what}: {:?}", cols[j])))
        };
        let pipeline = Pipeline::parse(cols[3]).map_err(|e| err(i + 1, e.to_string()))?;
        records.push(ExperimentRecord {
            k: parse_u32(0, "k")?,
            trial: parse_u32(1, "trial")?,
            seed: cols[2]
                .parse::<u64>()
                .map_err(|_| err(i + 1, format!("bad seed: {:?}", cols[2])))?,
            pipeline: pipeline.tag(),
            exit_kind: exit_kind_from(cols[4])
                .ok_or_else(|| err(i + 1, format!("unknown exit kind {:?}", cols[4])))?,
            minor_order: parse_u32(5, "minor_order")?,
            upper_bound: parse_u32(6, "upper_bound")?,
            wall_ms: cols[7]
                .parse::<u64>()
                .map_err(|_| err(i + 1, format!("bad wall_ms: {:?}", cols[7])))?,
            stage_digest: String::new(),
        });
    }
    Ok(records)
}

fn exit_kind_from(tag: &str) -> Option<&'static str> {
    const KNOWN: [&str; 10] = [
        "dense_tree",
        "dense_layer",
        "stalled",
        "init_fail",
        "tiny_giant",
        "completed",
        "giant_absent",
        "expander_floor",
        "contracted",
        "all_pruned",
    ];
    KNOWN.iter().find(|&&t| t == tag).copied()
}

/// Refit from a results CSV. Grouping, ordering, and arithmetic match
/// `fit_scaling` on the in-memory records bit for bit.
pub fn fit_from_csv(path: &Path) -> Result<ScalingFit, ExperimentError> {
    fit_scaling(&read_csv(path)?)
}

fn write_gnuplot(records: &[ExperimentRecord], path: &Path) -> Result<(), ExperimentError> {
    let mut text = String::from("# k median q1 q3 trials\n");
    for p in per_k_stats(records) {
        text.push_str(&format!(
            "{} {} {} {} {}\n",
            p.k, p.median, p.q1, p.q3, p.trials
        ));
    }
    fs::write(path, text).map_err(io_err(path))
}

fn describe(v: &MinorViolation) -> String {
    match v {
        MinorViolation::Overlap { a, b, vertex } => {
            format!("branch sets {a} and {b} both contain vertex {vertex}")
        }
        MinorViolation::Disconnected { set } => {
            format!("branch set {set} is empty or disconnected")
        }
        MinorViolation::MissingAdjacency { a, b } => {
            format!("no edge joins branch sets {a} and {b}")
        }
    }
}

/// Check a certificate file against a graph file. Returns the process
/// exit code: 0 valid, 1 invalid (the violation is printed), 2 unreadable
/// input.
pub fn verify_file(graph_path: &Path, cert_path: &Path) -> i32 {
    let g = match graph::load_edge_list(graph_path) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cert = match minor::load_certificate(cert_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match minor::verify_minor(&g, &cert) {
        Ok(None) => {
            println!("valid: complete minor of order {}", cert.order());
            0
        }
        Ok(Some(v)) => {
            println!("invalid: {}", describe(&v));
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("minorperc-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn base_config(tag: &str) -> ExperimentConfig {
        ExperimentConfig::new(
            HostFamily::Complete,
            vec![100],
            Pipeline::SprinklingOnly,
            scratch(tag),
        )
    }

    #[test]
    fn config_file_parses_and_overrides_defaults() {
        let dir = scratch("cfg");
        let path = dir.join("exp.cfg");
        fs::write(
            &path,
            "# sweep\nfamily = clique-union:3\nk = 100, 200, 400\nepsilon = 6.0\n\
             pipeline = tree-growth\ntrials = 20\nseed = 7\ndelta = 0.18\nstar-cap = 3\n\
             seed-tree = 21\nout = sweep-out\ntiming = measured\ngnuplot = true\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.family, HostFamily::CliqueUnion { copies: 3 });
        assert_eq!(cfg.ks, vec![100, 200, 400]);
        assert_eq!(cfg.epsilon, 6.0);
        assert_eq!(cfg.pipeline, Pipeline::TreeGrowth);
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.delta, Some(0.18));
        assert_eq!(cfg.star_cap, Some(3));
        assert_eq!(cfg.seed_tree, Some(21));
        assert_eq!(cfg.out_dir, PathBuf::from("sweep-out"));
        assert_eq!(cfg.timing, Timing::Measured);
        assert!(cfg.gnuplot);

        fs::write(&path, "trials = 0\n").unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert!(cfg.validate().is_err());
        fs::write(&path, "bogus = 1\n").unwrap();
        assert!(ExperimentConfig::from_file(&path).is_err());
        fs::write(&path, "no equals sign\n").unwrap();
        assert!(ExperimentConfig::from_file(&path).is_err());

        let mut cfg = base_config("cfg2");
        cfg.ks = vec![100, 100];
        assert!(cfg.validate().is_err());
        cfg.ks = vec![200, 100];
        assert!(cfg.validate().is_err());
        cfg.ks = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_trial_emits_one_verified_row() {
        let cfg = base_config("single");
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.records.len(), 1);
        let rec = &summary.records[0];
        assert_eq!((rec.k, rec.trial), (100, 0));
        assert!(rec.minor_order >= 1);
        assert!(rec.minor_order <= rec.upper_bound);
        assert!(summary.fit.is_none());

        let text = fs::read_to_string(&summary.csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], rec.csv_row());
    }

    #[test]
    fn rerun_with_same_master_seed_is_byte_identical() {
        let mut a = base_config("bytes-a");
        a.ks = vec![50, 100];
        a.trials = 3;
        let mut b = a.clone();
        b.out_dir = scratch("bytes-b");
        let sa = run_experiment(&a).unwrap();
        let sb = run_experiment(&b).unwrap();
        assert_eq!(
            fs::read(&sa.csv_path).unwrap(),
            fs::read(&sb.csv_path).unwrap()
        );

        let mut c = a.clone();
        c.out_dir = scratch("bytes-c");
        c.master_seed = 2;
        let sc = run_experiment(&c).unwrap();
        assert_ne!(
            fs::read(&sa.csv_path).unwrap(),
            fs::read(&sc.csv_path).unwrap()
        );
    }

    #[test]
    fn rows_cover_every_trial_including_degraded_runs() {
        // k = 9 on K_10: the first round keeps ~11% of edges, so the BFS
        // tree regularly misses the sqrt(k) piece floor and degrades
        let mut cfg = base_config("degraded");
        cfg.ks = vec![9];
        cfg.trials = 30;
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.records.len(), 30);
        assert!(summary.records.iter().any(|r| r.exit_kind == "tiny_giant"));
        for r in &summary.records {
            assert!(r.minor_order >= 1);
        }
        let text = fs::read_to_string(&summary.csv_path).unwrap();
        assert_eq!(text.lines().count(), 31);
        // degraded rows must survive a CSV round trip
        let back = read_csv(&summary.csv_path).unwrap();
        assert_eq!(back.len(), summary.records.len());
        for (b, r) in back.iter().zip(&summary.records) {
            assert_eq!(b.csv_row(), r.csv_row());
        }
    }

    #[test]
    fn sprinkling_only_contracts_a_complete_host() {
        let host = graph::complete(101);
        let run = run_sprinkling_only(&host, 100, 1.0, 11).unwrap();
        assert_eq!(run.exit_kind, "contracted");
        assert!(minor::is_valid_minor(&run.realized, &run.certificate));
        assert!(run.certificate.order() >= 2);
    }

    #[test]
    fn synthetic_square_root_records_fit_slope_half() {
        // medians lie exactly on order = 2*sqrt(k)
        let mut records = Vec::new();
        for &k in &[100u32, 400, 900, 1600] {
            let order = 2 * seeds::isqrt(k as u64) as u32;
            for trial in 0..3 {
                records.push(ExperimentRecord {
                    k,
                    trial,
                    seed: 0,
                    pipeline: "dense",
                    exit_kind: "completed",
                    minor_order: order,
                    upper_bound: order,
                    wall_ms: 0,
                    stage_digest: String::new(),
                });
            }
        }
        let fit = fit_scaling(&records).unwrap();
        assert!(
            (fit.slope_log_k - 0.5).abs() < 1e-9,
            "slope {}",
            fit.slope_log_k
        );
        assert!(fit.stderr_log_k < 1e-9);
        assert!(fit.residuals_log_k.iter().all(|r| r.abs() < 1e-9));
        assert_eq!(fit.points.len(), 4);
        assert_eq!(fit.points[0].trials, 3);

        for r in &mut records {
            r.minor_order = 7;
        }
        let fit = fit_scaling(&records).unwrap();
        assert_eq!(fit.slope_log_k, 0.0);
        assert_eq!(fit.slope_log_ratio, 0.0);

        let two_points: Vec<ExperimentRecord> =
            records.iter().filter(|r| r.k <= 400).cloned().collect();
        assert!(matches!(
            fit_scaling(&two_points),
            Err(ExperimentError::Fit(_))
        ));
    }

    #[test]
    fn quartiles_are_tukey_hinges() {
        assert_eq!(hinges(&[1]), (1.0, 1.0, 1.0));
        assert_eq!(hinges(&[1, 3]), (1.0, 2.0, 3.0));
        assert_eq!(hinges(&[1, 2, 9]), (1.0, 2.0, 9.0));
        assert_eq!(hinges(&[1, 2, 3, 10]), (1.5, 2.5, 6.5));
        assert_eq!(hinges(&[1, 2, 3, 4, 5, 6, 7]), (2.0, 4.0, 6.0));
    }

    #[test]
    fn csv_round_trip_reproduces_the_fit_bit_for_bit() {
        let mut cfg = base_config("roundtrip");
        cfg.ks = vec![25, 64, 100];
        cfg.trials = 5;
        cfg.epsilon = 1.0;
        cfg.gnuplot = true;
        let summary = run_experiment(&cfg).unwrap();
        let in_memory = summary.fit.expect("three k-points");
        let refit = fit_from_csv(&summary.csv_path).unwrap();
        assert_eq!(refit.slope_log_k.to_bits(), in_memory.slope_log_k.to_bits());
        assert_eq!(
            refit.stderr_log_k.to_bits(),
            in_memory.stderr_log_k.to_bits()
        );
        assert_eq!(
            refit.slope_log_ratio.to_bits(),
            in_memory.slope_log_ratio.to_bits()
        );
        assert_eq!(refit.points, in_memory.points);
        for (a, b) in refit.residuals_log_k.iter().zip(&in_memory.residuals_log_k) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let parsed = read_csv(&summary.csv_path).unwrap();
        assert_eq!(parsed.len(), summary.records.len());
        for (a, b) in parsed.iter().zip(&summary.records) {
            assert_eq!(a.csv_row(), b.csv_row());
        }

        let dat = fs::read_to_string(summary.gnuplot_path.unwrap()).unwrap();
        assert!(dat.starts_with("# k median q1 q3 trials\n"));
        assert_eq!(dat.lines().count(), 4);
    }

    #[test]
    fn verify_file_distinguishes_valid_broken_and_garbage() {
        let dir = scratch("verify");
        let gpath = dir.join("g.txt");
        let cpath = dir.join("c.txt");
        let g = graph::complete(5);
        graph::save_edge_list(&g, &gpath).unwrap();
        let cert = minor::dense_minor(&g, 3);
        minor::save_certificate(&cert, &cpath).unwrap();
        assert_eq!(verify_file(&gpath, &cpath), 0);

        let overlapping = MinorCertificate::new(vec![
            VertexSet::from_unsorted(vec![0, 1]),
            VertexSet::from_unsorted(vec![1, 2]),
        ]);
        minor::save_certificate(&overlapping, &cpath).unwrap();
        assert_eq!(verify_file(&gpath, &cpath), 1);

        fs::write(&cpath, "not a certificate\n").unwrap();
        assert_eq!(verify_file(&gpath, &cpath), 2);
        assert_eq!(verify_file(&dir.join("missing.txt"), &cpath), 2);
    }

    #[test]
    fn hosts_are_deterministic_and_respect_min_degree() {
        let fam = HostFamily::parse("random-regular").unwrap();
        let a = fam.host(10).unwrap();
        let b = fam.host(10).unwrap();
        assert_eq!(a.n(), b.n());
        assert_eq!(a.m(), b.m());
        assert_eq!(a.min_degree().unwrap(), 10);

        assert_eq!(
            HostFamily::parse("complete").unwrap().host(4).unwrap().n(),
            5
        );
        assert_eq!(
            HostFamily::parse("clique-union:2")
                .unwrap()
                .host(4)
                .unwrap()
                .n(),
            10
        );
        assert_eq!(
            HostFamily::parse("bipartite").unwrap().host(4).unwrap().n(),
            8
        );
        assert!(HostFamily::parse("moebius").is_err());

        let dir = scratch("hostfile");
        let path = dir.join("host.txt");
        graph::save_edge_list(&graph::complete(6), &path).unwrap();
        let fam = HostFamily::parse(&format!("file:{}", path.display())).unwrap();
        assert_eq!(fam.host(5).unwrap().n(), 6);
        assert!(fam.host(6).is_err());
    }
}
