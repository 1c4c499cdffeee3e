use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tcamhd::config::{ExperimentConfig, Task};
use tcamhd::datasets::{item_memory_seed, Encoded};
use tcamhd::explorer::{self, DesignPoint, PointKey, DEFAULT_TRIALS};
use tcamhd::io::model::{ModelFile, SeedInfo};
use tcamhd::io::{self, write_atomic};
use tcamhd::report::{self, Header};
use tcamhd::{Error, Result};
use tcamhd_core::hwmodel::{default_catalog, millivolts, Catalog, HwTable, RramShift, Technology};
use tcamhd_core::BlockConfig;

#[derive(Parser)]
#[command(name = "tcamhd", version, about = "Hyperdimensional computing on error-prone TCAM blocks")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Omit timestamps so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode the training data and write a model file.
    Train {
        #[arg(long)]
        dimension: Option<usize>,
    },
    /// Evaluate a model on the configured test data.
    Eval(EvalArgs),
    /// Run the configured design-space sweep.
    Sweep,
    /// Recompute the Pareto front of a results CSV.
    Pareto {
        #[arg(long)]
        input: PathBuf,
        /// Accuracy-loss budget (fraction) for the energy-savings ratio.
        #[arg(long, default_value_t = 0.005)]
        budget: f64,
    },
    /// Inspect hardware tables.
    Hwmodel {
        #[arg(value_enum)]
        action: HwAction,
        #[command(flatten)]
        select: TableSelect,
    },
    /// Write derived artifacts.
    Export {
        #[arg(value_enum)]
        what: ExportWhat,
        /// Block sizes for `precision` (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = [7usize, 15])]
        block_sizes: Vec<usize>,
        /// Precisions for `precision` (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = [7usize, 15])]
        precisions: Vec<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HwAction {
    Validate,
    Confusion,
    Errorprob,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportWhat {
    /// The built-in hardware tables.
    Catalog,
    /// Encoded test queries as hypervector CSV.
    Vectors,
    /// Noise-free loss for each (block size, precision) pair.
    Precision,
}

#[derive(Args)]
struct TableSelect {
    /// Table file (default: built-in tables).
    #[arg(long)]
    tables: Option<PathBuf>,
    #[arg(long)]
    technology: Option<Technology>,
    #[arg(long)]
    voltage: Option<f64>,
    #[arg(long)]
    block_size: Option<usize>,
    /// Block precision; defaults to the table's.
    #[arg(long)]
    precision: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    precision: Option<usize>,
    /// Hardware technology; noise-free when absent.
    #[arg(long)]
    technology: Option<Technology>,
    #[arg(long, default_value_t = 0.7)]
    voltage: f64,
    #[arg(long, default_value_t = 1)]
    replicas: u32,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Apply the deterministic +1 distance shift instead of a table.
    #[arg(long, conflicts_with = "technology")]
    rram_shift: bool,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
        if let Some(sw) = cfg.sweep.as_mut() {
            sw.seed = s;
        }
    }
    if let Some(o) = &cli.output {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(cli: &Cli, cfg: Option<&ExperimentConfig>, default: &str) -> PathBuf {
    cli.output
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from(default))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_train(cli: &Cli, dimension: Option<usize>) -> Result<()> {
    let mut cfg = load_config(cli)?;
    if let Some(d) = dimension {
        cfg.dimension = d;
    }
    let start = Instant::now();
    let task = cfg.load_task()?;
    let enc = task.encode(&cfg, cfg.dimension)?;
    let seed = SeedInfo {
        master: cfg.seed,
        item_memory: item_memory_seed(cfg.seed),
        tie_break: "uniform random bit per tied component, stream derived from the master seed".into(),
    };
    let mut model = ModelFile::from_memory(&enc.am, task.name(), seed, cfg.hash());
    match task {
        Task::Language(_) => model.ngram = Some(cfg.ngram),
        Task::Mnist(_) => model.threshold = Some(cfg.threshold),
        Task::Csv(..) => {}
    }
    let out = output_path(cli, Some(&cfg), "model.json");
    write_atomic(&out, model.to_json().as_bytes())?;
    println!(
        "classes: {}  dimension: {}  wall time: {:.2} s  -> {}",
        enc.am.len(),
        enc.am.dimension(),
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let cfg = load_config(cli)?;
    let model = ModelFile::load(&a.model)?;
    if model.dimension != cfg.dimension {
        return Err(Error::Config(format!(
            "model {} has dimension {}, configuration has {}",
            a.model.display(),
            model.dimension,
            cfg.dimension
        )));
    }
    let am = model.to_memory()?;
    let task = cfg.load_task()?;
    let Encoded { am: trained, test } = task.encode(&cfg, cfg.dimension)?;
    if trained.classes().iter().map(|c| &c.0).ne(am.classes().iter().map(|c| &c.0)) {
        return Err(Error::Config("model classes differ from the configured dataset".into()));
    }
    let ideal = explorer::ideal_accuracy(&am, &test)?;
    let n = a.block_size.unwrap_or(cfg.dimension.min(15).max(2));
    let p = a.precision.unwrap_or(n);
    let bc = BlockConfig::new(cfg.dimension, n, p)?;
    let catalog = cfg.catalog()?;
    let (tech_label, point) = if let Some(tech) = a.technology {
        let key = PointKey {
            technology: tech,
            millivolts: millivolts(a.voltage),
            block_size: n,
            precision: p,
            dimension: cfg.dimension,
            replicas: a.replicas,
        };
        let enc = Encoded { am: am.clone(), test: test.clone() };
        (tech.to_string(), explorer::evaluate_point(&key, &enc, ideal, &catalog, a.trials, cfg.seed)?)
    } else {
        let e = if a.rram_shift {
            explorer::evaluate(&am, &test, &bc, Some(&RramShift), None, a.trials, cfg.seed)?
        } else {
            explorer::evaluate::<RramShift>(&am, &test, &bc, None, None, a.trials, cfg.seed)?
        };
        let label = if a.rram_shift { "rram-shift" } else { "ideal" };
        let pt = DesignPoint {
            technology: Technology::Sram,
            voltage_v: a.voltage,
            block_size: n,
            precision: p,
            dimension: cfg.dimension,
            replicas: 1,
            trials: a.trials,
            accuracy_mean: e.accuracy_mean,
            accuracy_std: e.accuracy_std,
            accuracy_loss: ideal - e.accuracy_mean,
            energy_pj: e.energy_pj,
            latency_ns: e.latency_ns,
            pareto: false,
        };
        (label.to_string(), pt)
    };
    println!(
        "{tech_label} N={n} P={p} D={}: accuracy {:.4} ± {:.4} (ideal {:.4}, loss {:.4})  energy {:.4} pJ  latency {:.4} ns",
        cfg.dimension, point.accuracy_mean, point.accuracy_std, ideal, point.accuracy_loss, point.energy_pj, point.latency_ns
    );
    if let Some(out) = &cli.output {
        let header = Header::new(cfg.seed, cfg.hash(), cli.deterministic);
        write_atomic(out, report::results_csv(&header, &[point]).as_bytes())?;
    }
    Ok(())
}

fn read_partial(path: &Path) -> Result<Vec<DesignPoint>> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Ok(Vec::new());
    };
    // a torn last line from an interrupted run is dropped
    Ok(text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect())
}

fn cmd_sweep(cli: &Cli) -> Result<()> {
    use std::io::Write;

    let cfg = load_config(cli)?;
    let space = cfg.sweep.clone().ok_or_else(|| Error::Config("configuration has no `sweep` section".into()))?;
    let catalog = cfg.catalog()?;
    space.check_catalog(&catalog)?;
    let out = output_path(cli, Some(&cfg), "results.csv");
    let partial = with_suffix(&out, ".partial.jsonl");
    let done = read_partial(&partial)?;
    let task = cfg.load_task()?;
    let total = space.points().len();
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&partial)
        .map_err(|e| Error::io(&partial, e))?;
    let mut count = done.len().min(total);
    if count > 0 {
        eprintln!("resuming: {count} of {total} points already evaluated");
    }
    let encode = |d: usize| task.encode(&cfg, d);
    let points = explorer::sweep(&space, &encode, &catalog, &done, &mut |p| {
        count += 1;
        eprintln!(
            "[{count}/{total}] {} {} V N={} P={} D={} r={}: loss {:.4} energy {:.4} pJ",
            p.technology, p.voltage_v, p.block_size, p.precision, p.dimension, p.replicas, p.accuracy_loss, p.energy_pj
        );
        let line = serde_json::to_string(p).expect("point serializes");
        writeln!(log, "{line}").and_then(|_| log.flush()).map_err(|e| Error::io(&partial, e))
    })?;
    let header = Header::new(space.seed, cfg.hash(), cli.deterministic);
    let front: Vec<DesignPoint> = points.iter().filter(|p| p.pareto).cloned().collect();
    write_atomic(&out, report::results_csv(&header, &points).as_bytes())?;
    write_atomic(&out.with_extension("json"), report::results_json(&header, &points).as_bytes())?;
    let pareto_path = with_suffix(&out, ".pareto.csv");
    write_atomic(&pareto_path, report::results_csv(&header, &front).as_bytes())?;
    drop(log);
    let _ = std::fs::remove_file(&partial);
    println!("{} points, {} on the Pareto front -> {}, {}", points.len(), front.len(), out.display(), pareto_path.display());
    Ok(())
}

fn cmd_pareto(cli: &Cli, input: &Path, budget: f64) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let mut points = report::parse_results_csv(input, &text)?;
    explorer::mark_pareto(&mut points)?;
    let front: Vec<DesignPoint> = points.iter().filter(|p| p.pareto).cloned().collect();
    let header = Header::new(cli.seed.unwrap_or(0), report::hash_hex(text.as_bytes()), cli.deterministic);
    let csv = report::results_csv(&header, &front);
    match &cli.output {
        Some(out) => write_atomic(out, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    match explorer::energy_savings(&points, budget)? {
        Some(r) => eprintln!("{} of {} points on the front; energy savings at loss <= {budget}: {r:.2}x", front.len(), points.len()),
        None => eprintln!("{} of {} points on the front; no point within loss {budget}", front.len(), points.len()),
    }
    Ok(())
}

fn pick_table<'a>(catalog: &'a Catalog, s: &TableSelect) -> Result<&'a HwTable> {
    if let [only] = catalog.tables() {
        if s.technology.is_none() && s.voltage.is_none() && s.block_size.is_none() {
            return Ok(only);
        }
    }
    match (s.technology, s.voltage, s.block_size) {
        (Some(t), Some(v), Some(n)) => Ok(catalog.require(t, v, n)?),
        _ => Err(Error::Config("select a table with --technology, --voltage and --block-size".into())),
    }
}

fn cmd_hwmodel(cli: &Cli, action: HwAction, s: &TableSelect) -> Result<()> {
    let (catalog, source) = match &s.tables {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let tables = io::catalog::parse_unchecked(p, &text)?;
            (Catalog::default(), Some((p.clone(), tables)))
        }
        None => (default_catalog(), None),
    };
    if let HwAction::Validate = action {
        let (name, violations, n) = match &source {
            Some((p, tables)) => {
                let c = unchecked_catalog(tables.clone());
                (p.display().to_string(), c.violations(), tables.len())
            }
            None => ("built-in tables".to_string(), catalog.violations(), catalog.len()),
        };
        for v in &violations {
            println!("{v}");
        }
        if violations.is_empty() {
            println!("{name}: {n} tables valid");
            return Ok(());
        }
        return Err(Error::Config(format!("{name}: {} invariant violations", violations.len())));
    }
    let catalog = match source {
        Some((p, tables)) => Catalog::new(tables).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => catalog,
    };
    let table = pick_table(&catalog, s)?;
    let p = s.precision.unwrap_or(table.precision);
    let model = table.latency_model_at(p)?;
    let cm = model.confusion();
    cm.validate()?;
    let header = Header::new(cli.seed.unwrap_or(0), report::hash_hex(serde_json::to_string(table).unwrap().as_bytes()), cli.deterministic);
    let csv = match action {
        HwAction::Confusion => report::confusion_csv(&header, &cm),
        _ => report::errorprob_csv(&header, &cm),
    };
    match &cli.output {
        Some(out) => write_atomic(out, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Catalog for reporting violations without rejecting it first.
fn unchecked_catalog(tables: Vec<HwTable>) -> Catalog {
    serde_json::from_value(serde_json::to_value(tables).expect("tables serialize")).expect("same shape")
}

fn cmd_export(cli: &Cli, what: ExportWhat, block_sizes: &[usize], precisions: &[usize]) -> Result<()> {
    match what {
        ExportWhat::Catalog => {
            let out = output_path(cli, None, "hw_tables.json");
            write_atomic(&out, io::catalog::render(&default_catalog()).as_bytes())?;
            println!("{}", out.display());
        }
        ExportWhat::Vectors => {
            let cfg = load_config(cli)?;
            let task = cfg.load_task()?;
            let enc = task.encode(&cfg, cfg.dimension)?;
            let out = output_path(cli, Some(&cfg), "vectors.csv");
            write_atomic(&out, io::hvcsv::render(&enc.test.to_labeled(&enc.am)?).as_bytes())?;
            println!("{} vectors -> {}", enc.test.len(), out.display());
        }
        ExportWhat::Precision => {
            let cfg = load_config(cli)?;
            let task = cfg.load_task()?;
            let enc = task.encode(&cfg, cfg.dimension)?;
            let rows = explorer::precision_sweep_report(&enc.am, &enc.test, block_sizes, precisions)?;
            let header = Header::new(cfg.seed, cfg.hash(), cli.deterministic);
            let csv = report::precision_csv(&header, &rows);
            match &cli.output {
                Some(out) => write_atomic(out, csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    match &cli.command {
        Command::Train { dimension } => cmd_train(cli, *dimension),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Sweep => cmd_sweep(cli),
        Command::Pareto { input, budget } => cmd_pareto(cli, input, *budget),
        Command::Hwmodel { action, select } => cmd_hwmodel(cli, *action, select),
        Command::Export { what, block_sizes, precisions } => cmd_export(cli, *what, block_sizes, precisions),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', "; ");
            eprintln!("{}: {msg}", e.code());
            ExitCode::from(match e.code() {
                "E_CONFIG" | "E_ARGUMENT" => 2,
                "E_IO" => 3,
                "E_FORMAT" => 4,
                _ => 1,
            })
        }
    }
}
