use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fracito::harness::{self, summarize, ExperimentConfig, Format, FUNCTIONALS, OUT_DIR_ENV};
use fracito::{Error, Result};

/// Monte Carlo checks of functional Itô formulas and BSDEs driven by fractional Brownian motion.
#[derive(Debug, Parser)]
#[command(name = "fracito", version)]
struct Cli {
    /// Experiment id (see --list).
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Resolution ladder, comma separated: 256,512,1024.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Functional id (see --list).
    #[arg(long)]
    functional: Option<String>,
    /// Extra numeric parameter, repeatable: --param rms_cap=0.05.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output file; defaults to $FRACITO_OUT_DIR/<experiment>.<format>, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads for path-level parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// JSON experiment config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the experiment and functional catalogs.
    #[arg(long)]
    list: bool,
    /// Print an aligned table of the statistics to stderr.
    #[arg(long)]
    summarize: bool,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.to_string(), v))
}

fn config_from(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match (&cli.config, &cli.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(id)) => harness::lookup(id)?.default_config(),
        (None, None) => return Err(Error::Config("missing --experiment (or --config)".into())),
    };
    if let Some(id) = &cli.experiment {
        if *id != config.experiment {
            let defaults = harness::lookup(id)?.default_config();
            config = ExperimentConfig { seed: config.seed, ..defaults };
        }
    }
    if let Some(h) = cli.hurst {
        config.hurst = h;
    }
    if let Some(t) = cli.horizon {
        config.horizon = t;
    }
    if let Some(g) = &cli.grid {
        config.grid = g.clone();
    }
    if let Some(m) = cli.paths {
        config.paths = m;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(f) = &cli.functional {
        config.functional = Some(f.clone());
    }
    for (k, v) in &cli.params {
        config.params.insert(k.clone(), *v);
    }
    if let Some(o) = &cli.out {
        config.out = Some(o.clone());
    }
    if let Some(f) = cli.format {
        config.format = f;
    }
    Ok(config)
}

fn print_catalog() {
    println!("experiments:");
    for e in harness::list_experiments() {
        println!("  {:<20} {}", e.id, e.anchor);
        println!("  {:<20} {}", "", e.description);
    }
    println!("functionals:");
    for (id, formula) in FUNCTIONALS {
        println!("  {id:<20} {formula}");
    }
    println!("output directory variable: {OUT_DIR_ENV}");
}

fn execute(cli: &Cli) -> Result<i32> {
    let config = config_from(cli)?;
    let report = harness::run(&config)?;
    if let Some(path) = harness::emit(&report)? {
        eprintln!("wrote {}", path.display());
    }
    if cli.summarize {
        eprint!("{}", summarize(&report));
    }
    if let Some(e) = &report.error {
        eprintln!("error ({}): {}", e.kind, e.message);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.list {
        print_catalog();
        return ExitCode::SUCCESS;
    }
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fracito: {e}");
            ExitCode::from(1)
        }
    }
}
