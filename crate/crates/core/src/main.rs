use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use simherd::analysis::calibrate::{calibrate, CalibrationConfig};
use simherd::analysis::sa::{run_sensitivity, SaConfig};
use simherd::analysis::{output, BaseSequence, EaConfig, Lattice, MutationBounds, SobolProblem};
use simherd::bench::{append_row, run_bench, BenchModel};
use simherd::client::{ServerSession, ADDR_ENV};
use simherd::server::{self, RunningServer, Server, ServerConfig};

#[derive(Parser)]
#[command(
    name = "simherd",
    version,
    about = "Headless agent-based simulation server and experiment driver"
)]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the workspace server.
    Serve(ServeArgs),
    /// Time randomized model runs and append a CSV row.
    Bench(BenchArgs),
    /// Sobol' sensitivity analysis of Wolf Sheep Predation.
    Sa(SaArgs),
    /// Evolutionary calibration of Wolf Sheep Predation.
    Calibrate(CalibrateArgs),
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = server::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value_t = server::default_workers())]
    workers: usize,
    #[arg(long, default_value_t = server::DEFAULT_MAX_WORKSPACES)]
    max_workspaces: usize,
}

#[derive(clap::Args)]
struct Connect {
    /// `addr:host:port` of a running server or path to a simherd binary.
    /// Without it (and without SIMHERD_SERVER_ADDR) an in-process server is used.
    #[arg(long)]
    server: Option<String>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// wolf-sheep or fire
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    #[arg(long, default_value_t = server::default_workers())]
    workers: usize,
    #[arg(long, default_value_t = 100)]
    ticks: i64,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    #[command(flatten)]
    connect: Connect,
}

#[derive(clap::Args)]
struct SaArgs {
    /// Comma separated base sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    ticks: Option<i64>,
    /// Use seeded uniform base points instead of the Sobol' sequence.
    #[arg(long)]
    uniform_seed: Option<i64>,
    /// JSON file with `sample_sizes`, `workers`, `ticks` and `problem`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    connect: Connect,
}

#[derive(clap::Args)]
struct CalibrateArgs {
    /// JSON file with EA settings (`population_size`, `generations`, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gen: Option<usize>,
    #[arg(long)]
    ticks: Option<i64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<i64>,
    /// Mutate genes within [step, max] instead of [min, max].
    #[arg(long)]
    listing_compat_mutation: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    connect: Connect,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SaFile {
    sample_sizes: Option<Vec<usize>>,
    workers: Option<usize>,
    ticks: Option<i64>,
    problem: Option<SobolProblem>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CalibrateFile {
    population_size: Option<usize>,
    generations: Option<usize>,
    cxpb: Option<f64>,
    mutpb: Option<f64>,
    indpb: Option<f64>,
    tournament_size: Option<usize>,
    hall_of_fame_size: Option<usize>,
    lattices: Option<Vec<Lattice>>,
    seed: Option<i64>,
    mutation_bounds: Option<MutationBounds>,
    ticks: Option<i64>,
    workers: Option<usize>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .parse_env("RUST_LOG")
        .init();
    let result = match cli.cmd {
        Cmd::Serve(a) => serve(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Sa(a) => sa(a),
        Cmd::Calibrate(a) => calibrate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let config = ServerConfig {
        host: a.host,
        port: a.port,
        workers: a.workers,
        max_workspaces: a.max_workspaces,
    };
    let server = Server::bind(&config)
        .map_err(|e| Failure::Usage(format!("cannot bind {}:{}: {e}", config.host, config.port)))?;
    let handle = server.shutdown_handle();
    ctrlc::set_handler(move || handle.shutdown())?;
    let mut stdout = std::io::stdout();
    writeln!(stdout, "listening {}", server.local_addr())?;
    stdout.flush()?;
    server.run();
    Ok(())
}

/// A session plus the in-process server backing it, if any.
struct Backend {
    session: ServerSession,
    local: Option<RunningServer>,
}

impl Backend {
    fn open(connect: &Connect, workers: usize) -> Result<Backend, Failure> {
        let env_set = std::env::var(ADDR_ENV).is_ok_and(|v| !v.trim().is_empty());
        if connect.server.is_some() || env_set {
            let locator = connect.server.as_deref().unwrap_or_default();
            return Ok(Backend {
                session: ServerSession::start(locator)?,
                local: None,
            });
        }
        let running = Server::bind(&ServerConfig {
            port: 0,
            workers,
            ..ServerConfig::default()
        })?
        .spawn();
        Ok(Backend {
            session: ServerSession::connect(&running.addr.to_string())?,
            local: Some(running),
        })
    }

    fn close(self) {
        let _ = self.session.stop();
        if let Some(server) = self.local {
            server.stop();
        }
    }
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let model = BenchModel::parse(&a.model).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown model '{}' (expected wolf-sheep or fire)",
            a.model
        ))
    })?;
    if a.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let backend = Backend::open(&a.connect, a.workers)?;
    let elapsed = run_bench(&backend.session, model, a.runs, a.workers, a.ticks);
    backend.close();
    let line = append_row(&a.out, model, a.runs, elapsed?)?;
    println!("{line}");
    Ok(())
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Failure::Usage(format!("{}: field '{field}': {}", path.display(), e.inner()))
    })
}

fn sa(a: SaArgs) -> Result<(), Failure> {
    let file: SaFile = match &a.config {
        Some(p) => read_config(p)?,
        None => SaFile::default(),
    };
    let defaults = SaConfig::default();
    let config = SaConfig {
        sample_sizes: a.sizes.or(file.sample_sizes).unwrap_or(defaults.sample_sizes),
        workers: a.workers.or(file.workers).unwrap_or(defaults.workers),
        ticks: a.ticks.or(file.ticks).unwrap_or(defaults.ticks),
        base: a
            .uniform_seed
            .map_or(BaseSequence::default(), |seed| BaseSequence::Uniform { seed }),
        problem: file.problem,
    };
    if config.sample_sizes.is_empty() || config.sample_sizes.contains(&0) {
        return Err(Failure::Usage("sample sizes must be positive".into()));
    }
    if config.workers == 0 {
        return Err(Failure::Usage("workers must be at least 1".into()));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let backend = Backend::open(&a.connect, config.workers)?;
    let result = run_sensitivity(&backend.session, &config);
    backend.close();
    let (problem, runs) = result?;
    output::write_sensitivity(&a.out_dir, &problem, &runs)?;
    for run in &runs {
        println!(
            "N={} evaluations={} S1={:?} ST={:?}",
            run.sample_size, run.evaluations, run.result.s1, run.result.st
        );
    }
    println!(
        "total evaluations {}",
        runs.iter().map(|r| r.evaluations).sum::<usize>()
    );
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<(), Failure> {
    let file: CalibrateFile = match &a.config {
        Some(p) => read_config(p)?,
        None => CalibrateFile::default(),
    };
    let d = EaConfig::default();
    let ea = EaConfig {
        population_size: a.pop.or(file.population_size).unwrap_or(20),
        generations: a.gen.or(file.generations).unwrap_or(10),
        cxpb: file.cxpb.unwrap_or(d.cxpb),
        mutpb: file.mutpb.unwrap_or(d.mutpb),
        indpb: file.indpb.unwrap_or(d.indpb),
        tournament_size: file.tournament_size.unwrap_or(d.tournament_size),
        hall_of_fame_size: file.hall_of_fame_size.unwrap_or(d.hall_of_fame_size),
        lattices: file.lattices.unwrap_or_default(),
        seed: a.seed.or(file.seed).unwrap_or(d.seed),
        mutation_bounds: if a.listing_compat_mutation {
            MutationBounds::ListingCompat
        } else {
            file.mutation_bounds.unwrap_or_default()
        },
    };
    // Lattices are filled from the model when omitted.
    let mut check = ea.clone();
    if check.lattices.is_empty() {
        check.lattices.push(Lattice::new(0, 1, 1));
    }
    check.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let config = CalibrationConfig {
        ea,
        ticks: a.ticks.or(file.ticks).unwrap_or(500),
        workers: a.workers.or(file.workers).unwrap_or_else(server::default_workers),
    };
    if config.workers == 0 {
        return Err(Failure::Usage("workers must be at least 1".into()));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let backend = Backend::open(&a.connect, config.workers)?;
    let result = calibrate(&backend.session, &config);
    backend.close();
    let cal = result?;
    output::write_calibration(&a.out_dir, &cal.gene_names, &cal.outcome)?;
    for g in &cal.outcome.log {
        println!("gen {} max {} mean {}", g.gen, g.max, g.mean);
    }
    if let Some(best) = cal.outcome.hall_of_fame.first() {
        println!(
            "best {:?} fitness {}",
            best.genes,
            best.fitness.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
