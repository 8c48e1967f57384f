use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmt_bulk_cli::{run_suite, Cache, CliError, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "rmt-bulk", version, about = "Run the rmt-bulk verification suites")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Potential such as "k4=1,k2=-0.5"; defaults to x^{2m} for each m.
    #[arg(long)]
    potential: Option<String>,
    /// Matrix sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Potential degrees 2m, given as m, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    jmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Worker threads for per-(m, N) work.
    #[arg(long)]
    jobs: Option<usize>,
    /// Appendix L mesh as "NE,NI".
    #[arg(long, value_delimiter = ',', num_args = 2)]
    l_mesh: Option<Vec<usize>>,
    /// Appendix H mesh as "NE03,NI03,NE36".
    #[arg(long, value_delimiter = ',', num_args = 3)]
    h_mesh: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites listed in the config (or --suites).
    Run {
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
        #[command(flatten)]
        o: Overrides,
    },
    Recurrence(Overrides),
    Kernel(Overrides),
    Limits(Overrides),
    Dets(Overrides),
    Riccati(Overrides),
    Appendix(Overrides),
    Universality(Overrides),
    /// Inspect or maintain the recurrence-table cache.
    Cache {
        #[command(subcommand)]
        op: CacheOp,
        #[arg(long, global = true)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheOp {
    List,
    Purge,
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn base_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::from_json_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply(mut c: RunConfig, o: Overrides) -> RunConfig {
    if o.potential.is_some() {
        c.potential = o.potential;
    }
    if let Some(n) = o.n {
        c.n = n;
    }
    if let Some(m) = o.m {
        c.m = m;
    }
    if let Some(b) = o.precision_bits {
        c.precision_bits = b;
    }
    if o.jmax.is_some() {
        c.jmax = o.jmax;
    }
    if let Some(p) = o.out {
        c.output_dir = p;
    }
    if o.cache_dir.is_some() {
        c.cache_dir = o.cache_dir;
    }
    if let Some(j) = o.jobs {
        c.jobs = j;
    }
    if let Some(l) = o.l_mesh {
        c.mesh.l_ne = Some(l[0]);
        c.mesh.l_ni = Some(l[1]);
    }
    if let Some(h) = o.h_mesh {
        c.mesh.h_ne03 = Some(h[0]);
        c.mesh.h_ni03 = Some(h[1]);
        c.mesh.h_ne36 = Some(h[2]);
    }
    c
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let single = |s: Suite, o: Overrides| -> Result<RunConfig, CliError> {
        let mut c = apply(base_config(&cli.config)?, o);
        c.suites = vec![s];
        Ok(c)
    };
    let config = match cli.command {
        Command::Cache { op, cache_dir } => {
            let dir = match cache_dir {
                Some(d) => d,
                None => base_config(&cli.config)?.cache_dir(),
            };
            return cache_command(&Cache::new(dir), op);
        }
        Command::Run { suites, o } => {
            let mut c = apply(base_config(&cli.config)?, o);
            if let Some(list) = suites {
                c.suites = list.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            }
            c
        }
        Command::Recurrence(o) => single(Suite::Recurrence, o)?,
        Command::Kernel(o) => single(Suite::Kernel, o)?,
        Command::Limits(o) => single(Suite::Limits, o)?,
        Command::Dets(o) => single(Suite::Dets, o)?,
        Command::Riccati(o) => single(Suite::Riccati, o)?,
        Command::Appendix(o) => single(Suite::Appendix, o)?,
        Command::Universality(o) => single(Suite::Universality, o)?,
    };
    let manifest = run_suite(&config)?;
    for s in &manifest.suites {
        println!("{}: {} ({:.1}s) {}", s.suite, if s.pass { "pass" } else { "FAIL" }, s.seconds, s.detail);
    }
    println!("manifest: {}", config.output_dir.join("manifest.json").display());
    let failing = manifest.failing();
    if failing.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for s in failing {
            eprintln!("suite {s} failed");
        }
        Ok(ExitCode::from(1))
    }
}

fn cache_command(cache: &Cache, op: CacheOp) -> Result<ExitCode, CliError> {
    match op {
        CacheOp::List => {
            let entries = cache.list()?;
            println!("file,coeffs,jmax,precision_bits");
            for e in entries {
                println!("{},\"{}\",{},{}", e.file, e.coeffs, e.jmax, e.precision_bits);
            }
            Ok(ExitCode::SUCCESS)
        }
        CacheOp::Purge => {
            let n = cache.purge()?;
            println!("removed {n} entries from {}", cache.dir().display());
            Ok(ExitCode::SUCCESS)
        }
        CacheOp::Verify { seed } => {
            let rep = cache.verify(seed)?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            for q in &rep.quarantined {
                eprintln!("corrupt cache entry {q} quarantined");
            }
            Ok(if rep.quarantined.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rmt-bulk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
