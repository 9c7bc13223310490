use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use minorperc::bounds;
use minorperc::dense;
use minorperc::experiment::{self, ExperimentConfig, HostFamily, Pipeline};
use minorperc::graph::{self, Graph};
use minorperc::growth::GrowthParams;
use minorperc::minor;
use minorperc::percolation::{self, PercolationParams};
use minorperc::seeds;

#[derive(Parser)]
#[command(
    name = "minorperc",
    version,
    about = "Complete-minor extraction from percolated min-degree-k graphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct HostArgs {
    /// complete, clique-union[:copies], bipartite, random-regular, or file:<path>
    #[arg(long, default_value = "complete")]
    family: String,
    /// minimum-degree parameter; hosts are sized from it
    #[arg(long)]
    k: u32,
}

impl HostArgs {
    fn host(&self) -> Result<Graph, experiment::ExperimentError> {
        HostFamily::parse(&self.family)?.host(self.k)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a host graph as an edge list
    Generate {
        #[command(flatten)]
        host: HostArgs,
        /// output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep each host edge with probability p = (1+epsilon)/k
    Percolate {
        #[command(flatten)]
        host: HostArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// expose in two rounds (p1, then the leftover rate on the rest)
        #[arg(long)]
        two_round: bool,
        /// output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one extraction trial and report the certificate
    FindMinor {
        #[command(flatten)]
        host: HostArgs,
        #[arg(long)]
        epsilon: f64,
        /// dense pipeline degree ratio: requires k >= nu * n(host)
        #[arg(long, default_value_t = 0.9)]
        nu: f64,
        /// tree-growth, dense, or sprinkling-only
        #[arg(long, default_value = "dense")]
        pipeline: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// tree-growth reservoir density override
        #[arg(long)]
        delta: Option<f64>,
        /// tree-growth per-vertex adoption cap override
        #[arg(long)]
        star_cap: Option<u32>,
        /// tree-growth seed-tree size override
        #[arg(long)]
        seed_tree: Option<u32>,
        /// write the branch-set certificate here
        #[arg(long)]
        out: Option<PathBuf>,
        /// write the realized graph the certificate verifies against
        #[arg(long)]
        realized: Option<PathBuf>,
    },
    /// Check a certificate file against a graph file
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Sweep a k grid and write results.csv under --out
    Experiment {
        /// flat key = value file; command-line flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        family: Option<String>,
        /// comma-separated strictly increasing grid, e.g. 100,200,400
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        pipeline: Option<String>,
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        star_cap: Option<u32>,
        #[arg(long)]
        seed_tree: Option<u32>,
        /// record measured wall times (gives up byte-identical reruns)
        #[arg(long)]
        measure: bool,
        /// also write a per-k summary table, results.dat
        #[arg(long)]
        gnuplot: bool,
    },
    /// Print two-round rates, tail bounds, and derived pipeline constants
    Bounds {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        epsilon: f64,
        /// also derive the dense-stage constants for this degree ratio
        #[arg(long)]
        nu: Option<f64>,
    },
}

fn edge_list_text(g: &Graph) -> String {
    let mut text = format!("{} {}\n", g.n(), g.m());
    for (u, v) in g.edges() {
        writeln!(text, "{u} {v}").unwrap();
    }
    text
}

fn emit_graph(g: &Graph, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => {
            graph::save_edge_list(g, path).map_err(|e| e.to_string())?;
            eprintln!(
                "wrote {} ({} vertices, {} edges)",
                path.display(),
                g.n(),
                g.m()
            );
            Ok(())
        }
        None => {
            print!("{}", edge_list_text(g));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Generate { host, out } => {
            let g = host.host().map_err(|e| e.to_string())?;
            emit_graph(&g, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Percolate {
            host,
            epsilon,
            seed,
            two_round,
            out,
        } => {
            let g = host.host().map_err(|e| e.to_string())?;
            let params = PercolationParams::new(host.k, epsilon).map_err(|e| e.to_string())?;
            let kept = if two_round {
                let base = percolation::percolate(&g, params.p1, seed);
                let first = base.m();
                let full = percolation::sprinkle(&base, &g, params.p2, seeds::mix2(seed, 0xB16))
                    .map_err(|e| e.to_string())?;
                eprintln!(
                    "round one kept {first} edges at p1 = {:.6}; sprinkling at p2 = {:.6} added {}",
                    params.p1,
                    params.p2,
                    full.m() - first
                );
                full
            } else {
                percolation::percolate(&g, params.p, seed)
            };
            eprintln!("kept {} of {} edges (p = {:.6})", kept.m(), g.m(), params.p);
            emit_graph(&kept, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::FindMinor {
            host,
            epsilon,
            nu,
            pipeline,
            seed,
            delta,
            star_cap,
            seed_tree,
            out,
            realized,
        } => {
            let family = HostFamily::parse(&host.family).map_err(|e| e.to_string())?;
            let mut cfg = ExperimentConfig::new(
                family,
                vec![host.k],
                Pipeline::parse(&pipeline).map_err(|e| e.to_string())?,
                PathBuf::from("."),
            );
            cfg.epsilon = epsilon;
            cfg.nu = nu;
            cfg.master_seed = seed;
            cfg.delta = delta;
            cfg.star_cap = star_cap;
            cfg.seed_tree = seed_tree;
            let single = experiment::run_single(&cfg, host.k, 0).map_err(|e| e.to_string())?;
            let rec = &single.record;
            println!(
                "pipeline {} exit {} minor_order {} upper_bound {}",
                rec.pipeline, rec.exit_kind, rec.minor_order, rec.upper_bound
            );
            if let Some(path) = out {
                minor::save_certificate(&single.certificate, &path).map_err(|e| e.to_string())?;
                eprintln!("certificate -> {}", path.display());
            }
            if let Some(path) = realized {
                graph::save_edge_list(&single.realized, &path).map_err(|e| e.to_string())?;
                eprintln!("realized graph -> {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { graph, cert } => {
            Ok(ExitCode::from(experiment::verify_file(&graph, &cert) as u8))
        }
        Cmd::Experiment {
            config,
            family,
            k,
            epsilon,
            nu,
            pipeline,
            trials,
            seed,
            out,
            delta,
            star_cap,
            seed_tree,
            measure,
            gnuplot,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path).map_err(|e| e.to_string())?,
                None => ExperimentConfig::new(
                    HostFamily::Complete,
                    vec![100],
                    Pipeline::Dense,
                    PathBuf::from("results"),
                ),
            };
            let mut set = |key: &str, value: Option<String>| -> Result<(), String> {
                if let Some(v) = value {
                    cfg.apply_kv(key, &v).map_err(|e| e.to_string())?;
                }
                Ok(())
            };
            set("family", family)?;
            set("k", k)?;
            set("epsilon", epsilon.map(|v| v.to_string()))?;
            set("nu", nu.map(|v| v.to_string()))?;
            set("pipeline", pipeline)?;
            set("trials", trials.map(|v| v.to_string()))?;
            set("seed", seed.map(|v| v.to_string()))?;
            set("out", out.map(|v| v.display().to_string()))?;
            set("delta", delta.map(|v| v.to_string()))?;
            set("star-cap", star_cap.map(|v| v.to_string()))?;
            set("seed-tree", seed_tree.map(|v| v.to_string()))?;
            if measure {
                set("timing", Some("measured".into()))?;
            }
            if gnuplot {
                set("gnuplot", Some("true".into()))?;
            }
            let summary = experiment::run_experiment(&cfg).map_err(|e| e.to_string())?;
            println!(
                "wrote {} ({} rows)",
                summary.csv_path.display(),
                summary.records.len()
            );
            if let Some(path) = &summary.gnuplot_path {
                println!("wrote {}", path.display());
            }
            for p in experiment::per_k_stats(&summary.records) {
                println!(
                    "k {:>6}: median {:>7.1} [q1 {:.1}, q3 {:.1}] over {} trials",
                    p.k, p.median, p.q1, p.q3, p.trials
                );
            }
            if let Some(fit) = &summary.fit {
                println!(
                    "slope vs ln k: {:.4} +/- {:.4}; vs ln(k/ln k): {:.4} +/- {:.4}",
                    fit.slope_log_k, fit.stderr_log_k, fit.slope_log_ratio, fit.stderr_log_ratio
                );
            } else {
                println!("slope fit skipped: needs >= 3 distinct k values");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bounds { k, epsilon, nu } => {
            let params = PercolationParams::new(k, epsilon).map_err(|e| e.to_string())?;
            println!("k {k}");
            println!("epsilon {epsilon}");
            println!("p  {:.9}", params.p);
            println!("p1 {:.9}", params.p1);
            println!("p2 {:.9}", params.p2);
            match bounds::trial_failure_rate(epsilon, k) {
                Ok(t) => println!(
                    "fresh-vertex failure: exact {:.6}, bound {:.6} (raw {:.6})",
                    t.exact, t.bound, t.bound_raw
                ),
                Err(e) => println!("fresh-vertex failure: n/a ({e})"),
            }
            match GrowthParams::new(k, epsilon) {
                Ok(gp) => {
                    let n = ((1.0 - 3.0 * gp.delta) * k as f64).floor() as u64;
                    println!(
                        "growth defaults: delta {:.6}, adoption cap {}, seed tree {}",
                        gp.delta, gp.star_cap, gp.seed_tree_size
                    );
                    match bounds::restricted_binomial_lower(n, params.p1, gp.star_cap) {
                        Ok(rep) => println!(
                            "capped offspring mean: exact {:.6}, bound {:.6}, target {:.6}",
                            rep.exact,
                            rep.bound,
                            1.0 + epsilon / 4.0
                        ),
                        Err(e) => println!("capped offspring mean: n/a ({e})"),
                    }
                }
                Err(e) => println!("growth defaults: n/a ({e})"),
            }
            if let Some(nu) = nu {
                let dc = dense::derive_constants(nu, epsilon).map_err(|e| e.to_string())?;
                println!("dense c1 {:.9}", dc.c1);
                println!("dense c2 {:.9}", dc.c2);
                println!("dense c3 {:.9}", 1.0 + dc.c2 * epsilon / 4.0);
                println!("dense c3' {:.9}", 1.0 + dc.c2 * epsilon / 5.0);
                println!("dense c4 {:.9}", 1.0 + dc.c2 * epsilon / 8.0);
                println!(
                    "dense beta {:e} (feasible at this scale: {})",
                    dc.beta, dc.beta_feasible
                );
                println!("dense shedding fraction {:.6}", dense::MU_SPARSITY);
                println!(
                    "dense degree cap {:.3}",
                    2.0 / (1.0 / dense::MU_SPARSITY).ln()
                );
                println!("dense expansion target {:.3}", dense::GAMMA_TARGET);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
