//! `pomcpe` — run seeded planning experiments on the benchmark domains.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pomcpe::domains::hallway::{adjacency_listing, render_map, HallwayModel};
use pomcpe::harness::{
    grid_search, run_batch, summary_path, validate_command, write_grid, write_results, DomainSpec,
    PlannerSpec, RunConfig, StartSpec,
};
use pomcpe::planner::{EntropyCombine, PlannerKind};

#[derive(Parser)]
#[command(
    name = "pomcpe",
    about = "Online POMDP planning benchmarks: UCB1 and entropy-guided tree search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded episodes and write per-episode CSV results.
    Run(RunArgs),
    /// Sweep planner hyperparameters and write the ranked table.
    Gridsearch(GridArgs),
    /// Run the built-in oracle cross-checks; exits nonzero on failure.
    Validate,
    /// Print or write a domain map and its adjacency listing.
    DumpDomain(DumpArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON file with a full run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    domain: Option<DomainKind>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    /// Start variant for the hallway: standard or modified.
    #[arg(long, value_enum)]
    start: Option<StartKind>,
    /// Listening accuracy for the tiger domain.
    #[arg(long)]
    listen_accuracy: Option<f64>,
    #[arg(long, value_enum)]
    planner: Option<PlannerKindArg>,
    /// UCB1 exploration constant.
    #[arg(long)]
    c: Option<f64>,
    /// Entropy-bonus scale (entropy planner only).
    #[arg(long)]
    e: Option<f64>,
    /// Particle throughput required before entropy back-propagation.
    #[arg(long)]
    k_threshold: Option<u64>,
    /// Simulations per planning step.
    #[arg(long)]
    sims: Option<u64>,
    /// Wall-clock milliseconds per planning step (overrides --sims).
    #[arg(long)]
    time_ms: Option<u64>,
    /// Root filter size.
    #[arg(long)]
    particles: Option<u64>,
    /// Trajectory depth cutoff epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// How the entropy term combines immediate and stored reductions.
    #[arg(long, value_enum)]
    entropy_combine: Option<CombineKind>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; a .summary.json sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated UCB1 constants to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    c_grid: Vec<f64>,
    /// Comma-separated entropy scales to sweep (ignored for pomcp).
    #[arg(long, value_delimiter = ',')]
    e_grid: Vec<f64>,
    /// Episodes per grid cell.
    #[arg(long, default_value_t = 100)]
    episodes_per_cell: u64,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, value_enum, default_value = "hallway")]
    domain: DomainKind,
    #[arg(long, default_value_t = 1)]
    k1: usize,
    #[arg(long, default_value_t = 1)]
    k2: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainKind {
    Tiger,
    Hallway,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartKind {
    Standard,
    Modified,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerKindArg {
    Pomcp,
    Pomcpe,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineKind {
    Sum,
    Max,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            let out = run_batch(&cfg).map_err(|e| e.to_string())?;
            print_stats(&cfg, &out.stats);
            if !out.failures.is_empty() {
                eprintln!("{} episode(s) failed and were excluded:", out.failures.len());
                for failure in &out.failures {
                    eprintln!("  seed {}: {}", failure.seed, failure.message);
                }
            }
            if let Some(path) = cfg.out.clone() {
                let path = Path::new(&path);
                write_results(&out.rows, &out.failures, &out.stats, &cfg, path)
                    .map_err(|e| e.to_string())?;
                println!("wrote {} and {}", path.display(), summary_path(path).display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gridsearch(args) => {
            let cfg = build_config(&args.run)?;
            let cells = grid_search(&cfg, &args.c_grid, &args.e_grid, args.episodes_per_cell)
                .map_err(|e| e.to_string())?;
            println!("rank c e mean_discounted mean_cumulative success_rate");
            for (rank, cell) in cells.iter().enumerate() {
                println!(
                    "{} {} {} {} {} {}",
                    rank + 1,
                    cell.c,
                    cell.e,
                    display_opt(cell.stats.mean_discounted),
                    display_opt(cell.stats.mean_cumulative),
                    display_opt(cell.stats.success_rate),
                );
            }
            if let Some(path) = cfg.out.clone() {
                let path = Path::new(&path);
                write_grid(&cells, path).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let report = validate_command();
            for check in &report.checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {}: {}", check.name, check.detail);
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::DumpDomain(args) => {
            let text = match args.domain {
                DomainKind::Tiger => {
                    "tiger: 2 hidden states (plus an absorbing done state), 3 actions, 2 observations\n"
                        .to_string()
                }
                DomainKind::Hallway => {
                    let model = HallwayModel::new(args.k1, args.k2, StartSpec::Standard.into());
                    let layout = model.layout();
                    format!(
                        "# long hallway k1={} k2={}: {} rooms, {} states, {} observations\n\n{}\n{}",
                        args.k1,
                        args.k2,
                        layout.num_rooms(),
                        layout.num_states(),
                        pomcpe::domains::hallway::NUM_OBSERVATIONS,
                        render_map(layout),
                        adjacency_listing(layout),
                    )
                }
            };
            match args.out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn display_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

fn print_stats(cfg: &RunConfig, stats: &pomcpe::harness::BatchStats) {
    println!(
        "{} episodes | mean discounted {} | mean cumulative {} | success rate {}",
        stats.episodes,
        display_opt(stats.mean_discounted),
        display_opt(stats.mean_cumulative),
        display_opt(stats.success_rate),
    );
    if let Some(path) = &cfg.out {
        let _ = path;
    }
}

/// Start from the config file when given, then let every present CLI flag
/// override the corresponding field.
fn build_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut cfg: Option<RunConfig> = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            Some(serde_json::from_str(&body).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        None => None,
    };

    if let Some(domain) = args.domain {
        let domain = match domain {
            DomainKind::Tiger => {
                let mut params = pomcpe::domains::tiger::TigerParams::default();
                if let Some(acc) = args.listen_accuracy {
                    params.listen_accuracy = acc;
                }
                DomainSpec::Tiger { params }
            }
            DomainKind::Hallway => DomainSpec::Hallway {
                k1: args.k1.unwrap_or(1),
                k2: args.k2.unwrap_or(1),
                start: match args.start {
                    Some(StartKind::Modified) => StartSpec::Modified,
                    _ => StartSpec::Standard,
                },
            },
        };
        let planner = match args.planner {
            Some(PlannerKindArg::Pomcpe) => PlannerSpec::pomcpe(100.0, 500.0),
            _ => PlannerSpec::pomcp(50.0),
        };
        cfg = Some(match cfg {
            Some(mut existing) => {
                existing.domain = domain;
                existing
            }
            None => RunConfig {
                domain,
                planner,
                episodes: 100,
                max_steps: 200,
                base_seed: 0,
                out: None,
            },
        });
    }

    let mut cfg = cfg.ok_or("either --config or --domain is required")?;

    if let Some(kind) = args.planner {
        cfg.planner.kind = match kind {
            PlannerKindArg::Pomcp => PlannerKind::Pomcp,
            PlannerKindArg::Pomcpe => PlannerKind::Pomcpe,
        };
    }
    if let Some(k1) = args.k1 {
        if let DomainSpec::Hallway { k1: slot, .. } = &mut cfg.domain {
            *slot = k1;
        }
    }
    if let Some(k2) = args.k2 {
        if let DomainSpec::Hallway { k2: slot, .. } = &mut cfg.domain {
            *slot = k2;
        }
    }
    if let Some(start) = args.start {
        if let DomainSpec::Hallway { start: slot, .. } = &mut cfg.domain {
            *slot = match start {
                StartKind::Standard => StartSpec::Standard,
                StartKind::Modified => StartSpec::Modified,
            };
        }
    }
    if let Some(c) = args.c {
        cfg.planner.c = c;
    }
    if let Some(e) = args.e {
        cfg.planner.e = e;
    }
    if let Some(k) = args.k_threshold {
        cfg.planner.k_threshold = k;
    }
    if let Some(sims) = args.sims {
        cfg.planner.sims = sims;
    }
    if args.time_ms.is_some() {
        cfg.planner.time_ms = args.time_ms;
    }
    if let Some(particles) = args.particles {
        cfg.planner.particles = particles;
    }
    if let Some(eps) = args.epsilon {
        cfg.planner.epsilon = eps;
    }
    if let Some(combine) = args.entropy_combine {
        cfg.planner.entropy_combine = match combine {
            CombineKind::Sum => EntropyCombine::Sum,
            CombineKind::Max => EntropyCombine::Max,
        };
    }
    if let Some(episodes) = args.episodes {
        cfg.episodes = episodes;
    }
    if let Some(max_steps) = args.max_steps {
        cfg.max_steps = max_steps;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    Ok(cfg)
}
