//! `urban-elites` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.
//! Every failure prints exactly one line on stderr starting with
//! `urban-elites: usage error:` or `urban-elites: error:`.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use urban_elites::archive::merge;
use urban_elites::benchmark::grid_city;
use urban_elites::engine::{run, RunConfig};
use urban_elites::io::{
    load_archive, load_layout, load_run_config, load_wind_rose, save_archive, save_layout, save_run_config,
    save_run_log, RUN_CONFIG_JSON, RUN_LOG_CSV,
};
use urban_elites::metrics::urban_stats;
use urban_elites::render::{render_feature_map_svg, render_layout_svg, RenderSpec};
use urban_elites::wind::{evaluate_proxy, ProxyEvaluator};

type AnyError = Box<dyn Error + Send + Sync>;

#[derive(Debug, Parser)]
#[command(name = "urban-elites", version, about = "Quality-diversity search over urban layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run MAP-Elites from a seed layout and write the archive.
    Run {
        #[arg(long)]
        layout: PathBuf,
        /// Wind-rose CSV (`direction,hours`); defaults to the config's rose.
        #[arg(long)]
        windrose: Option<PathBuf>,
        /// Run configuration JSON; missing keys take default values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        selections: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        run_id: Option<u32>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print FSI, wind descriptors and summary statistics of one layout as JSON.
    Evaluate {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        windrose: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render a layout file or an archive directory to SVG.
    Render {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Render settings JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Merge archive directories bin by bin.
    Merge {
        #[arg(required = true, num_args = 1..)]
        archives: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print coverage, max fitness and QD-score of an archive as JSON.
    Stats { archive: PathBuf },
    /// Write the grid-city benchmark layout.
    SynthBenchmark {
        #[arg(long)]
        out: PathBuf,
        /// Number of buildings (out of 100) flagged static.
        #[arg(long, default_value_t = 0)]
        statics: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("urban-elites: usage error: {}", usage_line(&e));
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("urban-elites: error: {}", chain(e.as_ref()));
            ExitCode::from(2)
        }
    }
}

/// First meaningful line of a clap error, without its own `error:` prefix.
fn usage_line(e: &clap::Error) -> String {
    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
        return "a subcommand is required (see --help)".into();
    }
    let text = e.render().to_string();
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
    line.trim_start_matches("error:").trim().to_string()
}

fn chain(e: &(dyn Error + 'static)) -> String {
    let mut msg = e.to_string();
    let mut cur = e.source();
    while let Some(s) = cur {
        let part = s.to_string();
        if !msg.contains(&part) {
            msg.push_str(": ");
            msg.push_str(&part);
        }
        cur = s.source();
    }
    msg.replace('\n', " ")
}

fn base_config(config: Option<&Path>, windrose: Option<&Path>) -> Result<RunConfig, AnyError> {
    let mut cfg = match config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = windrose {
        cfg.rose = load_wind_rose(p)?;
    }
    Ok(cfg)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn execute(command: Command) -> Result<(), AnyError> {
    match command {
        Command::Run {
            layout,
            windrose,
            config,
            seed,
            selections,
            workers,
            run_id,
            out_dir,
        } => {
            let mut cfg = base_config(config.as_deref(), windrose.as_deref())?;
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = selections {
                cfg.selections = v;
            }
            if let Some(v) = workers {
                cfg.workers = v;
            }
            if let Some(v) = run_id {
                cfg.run_id = v;
            }
            let initial = load_layout(&layout)?;
            let result = run(&cfg, &initial, &ProxyEvaluator)?;
            save_archive(&result.map, &out_dir)?;
            save_run_log(&result.log, &out_dir.join(RUN_LOG_CSV))?;
            save_run_config(&cfg, &out_dir.join(RUN_CONFIG_JSON))?;
            let m = result.map.qd_metrics();
            print_json(&json!({
                "evaluations": result.evaluations,
                "elites": result.map.len(),
                "coverage": m.coverage,
                "max_fitness": m.max_fitness,
                "qd_score": m.qd_score,
            }));
        }
        Command::Evaluate {
            layout,
            windrose,
            config,
        } => {
            let cfg = base_config(config.as_deref(), windrose.as_deref())?;
            let l = load_layout(&layout)?;
            let stats = urban_stats(&l)?;
            let d = evaluate_proxy(&l, &cfg.rose, &cfg.wind)?;
            print_json(&json!({
                "fitness": stats.fsi,
                "b_c": d.b_c,
                "b_d": d.b_d,
                "stats": stats,
            }));
        }
        Command::Render { input, out, spec } => {
            let spec: RenderSpec = match spec {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?)
                    .map_err(|e| format!("{}: {e}", p.display()))?,
                None => RenderSpec::default(),
            };
            if spec.width_px == 0 || spec.ramp.is_empty() || spec.width_px <= 2 * spec.margin_px {
                return Err("render spec needs a positive drawing area and at least one ramp color".into());
            }
            if input.is_dir() {
                render_feature_map_svg(&load_archive(&input)?, &spec, &out)?;
            } else {
                render_layout_svg(&load_layout(&input)?, &spec, &out)?;
            }
        }
        Command::Merge { archives, out } => {
            let maps = archives.iter().map(|d| load_archive(d)).collect::<Result<Vec<_>, _>>()?;
            let merged = merge(&maps)?;
            save_archive(&merged, &out)?;
            let m = merged.qd_metrics();
            print_json(&json!({
                "elites": merged.len(),
                "coverage": m.coverage,
                "max_fitness": m.max_fitness,
                "qd_score": m.qd_score,
            }));
        }
        Command::Stats { archive } => {
            let map = load_archive(&archive)?;
            let m = map.qd_metrics();
            print_json(&json!({
                "elites": map.len(),
                "coverage": m.coverage,
                "max_fitness": m.max_fitness,
                "qd_score": m.qd_score,
            }));
        }
        Command::SynthBenchmark { out, statics } => {
            if statics > 100 {
                return Err(format!("--statics must be at most 100, got {statics}").into());
            }
            save_layout(&grid_city(statics)?, &out)?;
        }
    }
    Ok(())
}
