//! Command-line driver: population generation, single-sample simulation and
//! estimation, and the Monte Carlo experiment suites, all emitting
//! fixed-schema CSV under the chosen output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rds_core::estimators::estimate_report;
use rds_core::graph::{sbm_sample, Graph};
use rds_core::montecarlo::config::ExperimentConfig;
use rds_core::montecarlo::mse::{mse_csv, run_mse};
use rds_core::montecarlo::pgf_scan::{pgf_csv, run_pgf_scan};
use rds_core::montecarlo::power::{power_csv, run_power, PowerFeature};
use rds_core::montecarlo::qq::{qq_csv, realized_lambda2, run_qq};
use rds_core::montecarlo::surrogate::surrogate_population;
use rds_core::rng::derive_rng;
use rds_core::tree::{galton_watson, m_tree, GwStop, ReferralTree};
use rds_core::walk::{tp_walk, tp_walk_without_replacement, RootInit, WalkSample};

#[derive(Parser)]
#[command(name = "rds", about = "Network-driven sampling laboratory", version)]
struct Cli {
    /// Master seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON experiment configuration; missing fields keep their defaults.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Output directory for generated artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Restore the published problem sizes instead of desk-scale defaults.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a population graph with node features.
    GraphGen(GraphGenArgs),
    /// Draw one referral tree and walk, writing the sample as CSV.
    Simulate(SampleArgs),
    /// Simulate one sample and print the full estimator report.
    Estimate(SampleArgs),
    /// Simulate one sample and print the bias test verdict.
    TestBias(SampleArgs),
    /// Q-Q normality study over the eigenvalue grid and four designs.
    Qq,
    /// Power of the bias test across scenarios and sample sizes.
    Power(PowerArgs),
    /// Estimator MSE sweep with crossover points.
    Mse,
    /// Convexity scan of the tree distance generating function.
    PgfScan,
}

#[derive(Args)]
struct GraphGenArgs {
    /// Target second eigenvalue of the blockmodel kernel.
    #[arg(long, default_value_t = 0.5, conflicts_with = "surrogate")]
    lambda2: f64,
    /// Generate the degree-heterogeneous benchmark population instead.
    #[arg(long)]
    surrogate: bool,
}

#[derive(Args, Clone)]
struct SampleArgs {
    /// Edge-list file `i j w` (generated on the fly when omitted).
    #[arg(long, requires = "features")]
    graph: Option<PathBuf>,
    /// Feature file `node,y` matching the graph.
    #[arg(long, requires = "graph")]
    features: Option<PathBuf>,
    /// Target second eigenvalue when generating the population.
    #[arg(long, default_value_t = 0.5)]
    lambda2: f64,
    /// Referral tree shape.
    #[arg(long, value_enum, default_value_t = TreeKind::Mtree)]
    tree: TreeKind,
    /// Offspring count per respondent for the m-tree.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Sample without replacement (field-style referrals).
    #[arg(long)]
    without_replacement: bool,
}

#[derive(Args)]
struct PowerArgs {
    /// Scenario ids to run (1 analytic, 2 iid, 3 walk, 4 plug-in).
    #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4])]
    scenarios: Vec<u8>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeKind {
    /// Complete m-ary referral tree.
    Mtree,
    /// Galton-Watson tree, offspring uniform on {1, 2, 3}.
    Gw,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("rayon pool")?;
    }

    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if cli.paper_scale {
        cfg = cfg.paper_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    match &cli.command {
        Command::GraphGen(args) => graph_gen(args, &cfg, &out_dir),
        Command::Simulate(args) => {
            let (g, y) = load_population(args, &cfg)?;
            let sample = draw_sample(args, &g, &cfg)?;
            let csv = sample.to_csv(&y, &g)?;
            write_artifact(&out_dir, "sample.csv", &csv)?;
            println!("sample.csv: {} respondents", sample.len());
            Ok(())
        }
        Command::Estimate(args) => {
            let (g, y) = load_population(args, &cfg)?;
            let sample = draw_sample(args, &g, &cfg)?;
            let report = estimate_report(&sample, &g, &y, true, cfg.alpha)?;
            let json = report.to_json();
            write_artifact(&out_dir, "estimate.json", &json)?;
            println!("{json}");
            Ok(())
        }
        Command::TestBias(args) => {
            let (g, y) = load_population(args, &cfg)?;
            let sample = draw_sample(args, &g, &cfg)?;
            let report = estimate_report(&sample, &g, &y, true, cfg.alpha)?;
            let verdict = serde_json::json!({
                "n": report.n,
                "bias_hat": report.bias_hat,
                "sigma_hat_sq": report.sigma_hat_sq,
                "z": report.z,
                "alpha": cfg.alpha,
                "reject": report.reject,
            });
            let json = serde_json::to_string_pretty(&verdict)?;
            write_artifact(&out_dir, "test_bias.json", &json)?;
            println!("{json}");
            Ok(())
        }
        Command::Qq => {
            let out = run_qq(&cfg)?;
            write_artifact(&out_dir, "qq.csv", &qq_csv(&out.rows))?;
            let json = serde_json::to_string_pretty(&out.summaries)?;
            write_artifact(&out_dir, "qq_summary.json", &json)?;
            println!("qq.csv: {} scenarios, {} rows", out.summaries.len(), out.rows.len());
            Ok(())
        }
        Command::Power(args) => {
            let pop = surrogate_population(cfg.population, cfg.seed)?;
            let mut rows = Vec::new();
            for (name, y) in [
                ("uncorrelated", &pop.y_uncorrelated),
                ("degree", &pop.y_degree),
            ] {
                rows.extend(run_power(
                    &pop.graph,
                    y,
                    name,
                    PowerFeature::BiasFeature,
                    &args.scenarios,
                    &cfg,
                )?);
            }
            write_artifact(&out_dir, "power.csv", &power_csv(&rows))?;
            println!("power.csv: {} rows", rows.len());
            Ok(())
        }
        Command::Mse => {
            let pop = surrogate_population(cfg.population, cfg.seed)?;
            let mut rows = Vec::new();
            for (name, y) in [
                ("uncorrelated", &pop.y_uncorrelated),
                ("degree", &pop.y_degree),
            ] {
                let out = run_mse(&pop.graph, y, name, &cfg)?;
                println!("{name}: crossover {}", out.crossover.label());
                rows.extend(out.rows);
            }
            write_artifact(&out_dir, "mse.csv", &mse_csv(&rows))?;
            println!("mse.csv: {} rows", rows.len());
            Ok(())
        }
        Command::PgfScan => {
            let out = run_pgf_scan(&cfg)?;
            write_artifact(&out_dir, "pgf.csv", &pgf_csv(&out.rows))?;
            let nonconvex = out
                .summaries
                .iter()
                .filter(|s| !s.nonconvex_intervals.is_empty())
                .count();
            println!(
                "pgf.csv: {} trees, {nonconvex} with a nonconvex region",
                out.summaries.len()
            );
            Ok(())
        }
    }
}

fn graph_gen(args: &GraphGenArgs, cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    if args.surrogate {
        let pop = surrogate_population(cfg.population, cfg.seed)?;
        write_artifact(out_dir, "edges.txt", &edge_list(&pop.graph))?;
        write_artifact(
            out_dir,
            "features.csv",
            &feature_csv(&pop.y_uncorrelated),
        )?;
        write_artifact(out_dir, "features_degree.csv", &feature_csv(&pop.y_degree))?;
        println!(
            "surrogate population: {} nodes ({} isolated dropped)",
            pop.graph.n(),
            pop.dropped_nodes
        );
    } else {
        let (p, r) = cfg.sbm_rates(args.lambda2);
        let mut rng = derive_rng(cfg.seed, &[1, 0, u64::MAX]);
        let (build, blocks) = sbm_sample(cfg.population, p, r, &mut rng)?;
        let y: Vec<f64> = blocks.iter().map(|&b| b as f64).collect();
        let realized = realized_lambda2(&build.graph, 300);
        write_artifact(out_dir, "edges.txt", &edge_list(&build.graph))?;
        write_artifact(out_dir, "features.csv", &feature_csv(&y))?;
        println!(
            "blockmodel population: {} nodes, lambda2 target {} realized {realized:.4}",
            build.graph.n(),
            args.lambda2
        );
    }
    Ok(())
}

/// Load the graph and feature files, or generate a blockmodel population.
fn load_population(args: &SampleArgs, cfg: &ExperimentConfig) -> Result<(Graph, Vec<f64>)> {
    match (&args.graph, &args.features) {
        (Some(gpath), Some(fpath)) => {
            let build = Graph::from_edge_list_file(gpath)?;
            let y = read_features(fpath, build.graph.n())?;
            Ok((build.graph, y))
        }
        _ => {
            let (p, r) = cfg.sbm_rates(args.lambda2);
            let mut rng = derive_rng(cfg.seed, &[1, 0, u64::MAX]);
            let (build, blocks) = sbm_sample(cfg.population, p, r, &mut rng)?;
            let y = blocks.iter().map(|&b| b as f64).collect();
            Ok((build.graph, y))
        }
    }
}

fn draw_sample(args: &SampleArgs, g: &Graph, cfg: &ExperimentConfig) -> Result<WalkSample> {
    let mut rng = derive_rng(cfg.seed, &[2, 0]);
    let tree: ReferralTree = match args.tree {
        TreeKind::Mtree => m_tree(args.m, cfg.waves)?,
        TreeKind::Gw => galton_watson(
            &[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            GwStop::MaxWave(cfg.waves),
            &mut rng,
        )?,
    };
    if tree.len() >= g.n() {
        bail!(
            "referral tree of {} nodes cannot be sampled from {} nodes",
            tree.len(),
            g.n()
        );
    }
    let sample = if args.without_replacement {
        tp_walk_without_replacement(g, &tree, RootInit::Stationary, &mut rng)?
    } else {
        tp_walk(g, &tree, RootInit::Stationary, &mut rng)?
    };
    Ok(sample)
}

/// Serialize the upper-triangle adjacency as `i j w` lines.
fn edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for i in 0..g.n() {
        for &(j, w) in g.neighbors(i) {
            if i < j {
                out.push_str(&format!("{i} {j} {w}\n"));
            }
        }
    }
    out
}

fn feature_csv(y: &[f64]) -> String {
    let mut out = String::from("node,y\n");
    for (i, v) in y.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

/// Parse `node,y` lines (header optional) into a dense feature vector.
fn read_features(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut y = vec![f64::NAN; n];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("node")) {
            continue;
        }
        let (node, value) = line
            .split_once(',')
            .with_context(|| format!("line {}: expected 'node,y'", idx + 1))?;
        let node: usize = node.trim().parse().context("node id")?;
        if node >= n {
            bail!("feature node {node} outside graph of {n} nodes");
        }
        y[node] = value.trim().parse().context("feature value")?;
    }
    Ok(y)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
