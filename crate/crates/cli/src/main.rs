use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use signseg::limit::DEFAULT_REPLICATES;
use signseg::sim::{hill_columns, run_preset, write_reports_csv, Preset};
use signseg::{
    load_csv, save_table, segment, simulate_limit, sn_statistic, transpose_guard, DataMatrix, NoncentralSpec,
    SegmenterConfig, StatKind, TableCache, TableSource,
};

const QUANTILE_LEVELS: [f64; 6] = [0.80, 0.90, 0.95, 0.99, 0.995, 0.999];

/// Robust change-point tests and segmentation for high-dimensional data.
#[derive(Parser)]
#[command(name = "signseg", version)]
struct Cli {
    /// Seed for every random stream, including simulated null tables.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory caching simulated null tables.
    #[arg(long, global = true, env = "SIGNSEG_TABLE_DIR")]
    table_dir: Option<PathBuf>,
    /// Monte Carlo replicates per null table used for p-values.
    #[arg(long, global = true, default_value_t = DEFAULT_REPLICATES)]
    table_replicates: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, one row per time point.
    #[arg(long)]
    data: PathBuf,
    /// The first CSV row is a header.
    #[arg(long)]
    header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the null table for window length n and print its quantiles.
    Quantiles {
        #[arg(long)]
        n: usize,
        #[arg(long = "B", default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        /// Output table file (default: the table directory, if set).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Signal level of a noncentral table.
        #[arg(long)]
        c: Option<f64>,
        /// Change fraction of a noncentral table.
        #[arg(long, requires = "c")]
        bstar: Option<f64>,
    },
    /// Test one series for a single change point.
    Test {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long, default_value = "sign")]
        kind: StatKind,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        /// Print a JSON object instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Estimate multiple change points.
    Segment {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long, default_value_t = 0.001)]
        zeta_p: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
        alpha: f64,
        #[arg(long, default_value = "sign")]
        kind: StatKind,
        /// Output prefix; writes PREFIX.csv and PREFIX.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a preset simulation grid.
    Simulate {
        /// table2, table3, table4 or powercurve.
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        /// CSV report (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Hill tail-index estimates for every column.
    Hill {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<signseg::Error> for Failure {
    fn from(e: signseg::Error) -> Self {
        let code = match &e {
            signseg::Error::Io { source, .. }
                if !matches!(
                    source.kind(),
                    io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied | io::ErrorKind::IsADirectory
                ) =>
            {
                1
            }
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, msg: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| signseg::Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn read_data(input: &DataArgs) -> Result<DataMatrix, Failure> {
    let d = load_csv(&input.data, input.header)?;
    Ok(transpose_guard(d, true).0)
}

fn tables(cli: &Cli) -> Result<TableCache, Failure> {
    if cli.table_replicates == 0 {
        return Err(Failure::usage("--table-replicates must be positive"));
    }
    if cli.table_dir.is_none() {
        log::warn!("no table directory set; null tables are simulated in memory and discarded");
    }
    Ok(TableCache::new(cli.table_dir.clone(), cli.table_replicates, cli.seed))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_quantiles(cli: &Cli, n: usize, replicates: usize, out: Option<&Path>, c: Option<f64>, bstar: Option<f64>) -> Outcome {
    if n < 8 {
        return Err(Failure::usage(format!("n must be ≥ 8, got {n}")));
    }
    if replicates == 0 {
        return Err(Failure::usage("--B must be positive"));
    }
    let spec = c.map(|c| NoncentralSpec::new(c, bstar.unwrap_or(0.5))).transpose()?;
    let table = match (spec, out, &cli.table_dir) {
        (None, None, Some(dir)) => {
            let cache = TableCache::new(Some(dir.clone()), replicates, cli.seed);
            let t = cache.table(n)?;
            eprintln!("table: {}", cache.path_for(n).expect("directory set").display());
            (*t).clone()
        }
        _ => {
            let stream = TableCache::in_memory(replicates, cli.seed).stream_for(n);
            let t = simulate_limit(n, replicates, stream, spec)?;
            if let Some(path) = out {
                save_table(&t, path)?;
                eprintln!("table: {}", path.display());
            }
            t
        }
    };
    let mut w = io::stdout().lock();
    write!(w, "n,B,seed,c,bstar")?;
    for g in QUANTILE_LEVELS {
        write!(w, ",q{}", g * 100.0)?;
    }
    writeln!(w)?;
    write!(
        w,
        "{n},{replicates},{},{},{}",
        cli.seed,
        fmt_opt(spec.map(|s| s.c)),
        fmt_opt(spec.map(|s| s.bstar))
    )?;
    for g in QUANTILE_LEVELS {
        write!(w, ",{:.4}", table.quantile(g))?;
    }
    writeln!(w)?;
    Ok(())
}

fn cmd_test(cli: &Cli, input: &DataArgs, kind: StatKind, level: f64, json: bool) -> Outcome {
    if !(level > 0.0 && level < 1.0) {
        return Err(Failure::usage(format!("--level must lie in (0, 1), got {level}")));
    }
    let d = read_data(input)?;
    let res = sn_statistic(&d, 1, d.n(), kind)?;
    let table = tables(cli)?.table(d.n())?;
    let p = table.p_value(res.stat)?;
    let reject = p <= level;
    let mut w = io::stdout().lock();
    if json {
        let v = serde_json::json!({
            "n": d.n(),
            "p": d.p(),
            "kind": kind,
            "statistic": res.stat,
            "argmax_k": res.argmax_k,
            "p_value": p,
            "level": level,
            "reject": reject,
            "degenerate": res.degenerate,
            "table_replicates": table.replicates,
            "seed": table.seed,
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&v).map_err(io::Error::other)?)?;
    } else {
        writeln!(w, "n: {}\np: {}\nkind: {kind}", d.n(), d.p())?;
        writeln!(w, "statistic: {}\nargmax_k: {}\np_value: {p}", res.stat, res.argmax_k)?;
        writeln!(w, "decision: {} at level {level}", if reject { "reject" } else { "accept" })?;
    }
    Ok(())
}

fn cmd_segment(cli: &Cli, input: &DataArgs, cfg: SegmenterConfig, out: Option<&Path>) -> Outcome {
    cfg.validate().map_err(Failure::from)?;
    let d = read_data(input)?;
    let res = segment(&d, &cfg, &tables(cli)?)?;
    if let Some(prefix) = out {
        let csv_path = prefix.with_extension("csv");
        let json_path = prefix.with_extension("json");
        res.write_csv(create(&csv_path)?)?;
        let mut w = create(&json_path)?;
        serde_json::to_writer_pretty(&mut w, &res.to_json(&cfg, d.n(), d.p())).map_err(io::Error::other)?;
        writeln!(w)?;
        w.flush()?;
    }
    let mut w = io::stdout().lock();
    writeln!(w, "n: {}  p: {}  kind: {}  zeta_p: {}  alpha: {:.6}", d.n(), d.p(), cfg.kind, cfg.zeta_p, cfg.alpha)?;
    writeln!(w, "change points: {}", res.m_hat)?;
    for det in &res.detections {
        writeln!(
            w,
            "  k = {:>5}  interval [{}, {}]  statistic {:.3}  p-value {:.3e}",
            det.location, det.interval.0, det.interval.1, det.stat, det.p_value
        )?;
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, preset: &str, replicates: usize, out: Option<&Path>, json: Option<&Path>) -> Outcome {
    let preset: Preset = preset.parse()?;
    if replicates == 0 {
        return Err(Failure::usage("--replicates must be positive"));
    }
    let reports = run_preset(preset, replicates, cli.seed, &tables(cli)?)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_reports_csv(&reports, &mut w)?;
            w.flush()?;
        }
        None => write_reports_csv(&reports, io::stdout().lock())?,
    }
    if let Some(path) = json {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &reports).map_err(io::Error::other)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_hill(input: &DataArgs, k: usize, out: Option<&Path>) -> Outcome {
    let d = read_data(input)?;
    let est = hill_columns(&d, k)?;
    let mut w: Box<dyn Write> = match out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(w, "column,k,left,right,left_defined,right_defined")?;
    for (j, h) in est.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            j + 1,
            h.k,
            fmt_opt(h.left),
            fmt_opt(h.right),
            h.left.is_some(),
            h.right.is_some()
        )?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure { code: 1, msg: e.to_string() })?;
    }
    match &cli.command {
        Command::Quantiles { n, replicates, out, c, bstar } => {
            cmd_quantiles(cli, *n, *replicates, out.as_deref(), *c, *bstar)
        }
        Command::Test { input, kind, level, json } => cmd_test(cli, input, *kind, *level, *json),
        Command::Segment { input, zeta_p, alpha, kind, out } => {
            let cfg = SegmenterConfig { zeta_p: *zeta_p, alpha: *alpha, kind: *kind };
            cmd_segment(cli, input, cfg, out.as_deref())
        }
        Command::Simulate { preset, replicates, out, json } => {
            cmd_simulate(cli, preset, *replicates, out.as_deref(), json.as_deref())
        }
        Command::Hill { input, k, out } => cmd_hill(input, *k, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(1),
    }
}
