use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bizvor_core::automata::{classify_rule, DetectorConfig, RuleSet};
use bizvor_core::genetics::run_monte_carlo;
use bizvor_core::registry::Strategies;
use bizvor_core::scenario::{
    build_case_with, consistence_csv, export_map_svg, kpi_csv, load_scenario, save_scenario, CaseParams, Scenario,
};
use clap::{Args, Parser, Subcommand};

use crate::api::{self, Store};

#[derive(Parser, Debug)]
#[command(name = "bizvor", version, about = "Business partner network maps and dynamics")]
pub struct Cli {
    /// Scenario document to read or write.
    #[arg(long, global = true, default_value = "scenario.json")]
    pub scenario: PathBuf,
    /// Overrides the seed of whatever the command generates or runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CaseArgs {
    #[arg(long, default_value_t = 500)]
    pub candidates: usize,
    #[arg(long, default_value_t = 10)]
    pub regions: usize,
    #[arg(long, default_value_t = 100)]
    pub horizon: u64,
    #[arg(long, default_value = "greedy")]
    pub selector: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the sourcing case and save its map as a new scenario.
    BuildMap(CaseArgs),
    /// Advance the scenario's dynamics and save it.
    Evolve {
        #[arg(long)]
        ticks: u64,
    },
    /// Classify a rule preset or a B/S rule string.
    Classify {
        #[arg(default_value = "life")]
        rule: String,
        #[arg(long, default_value_t = 20)]
        soups: usize,
        #[arg(long, default_value_t = 2000)]
        horizon: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Select regional portfolios and print them, without saving.
    Select(CaseArgs),
    /// Replay the scenario's dynamics over independent trials.
    Montecarlo {
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        ticks: u64,
        /// Writes the full report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the map image, and optionally CSV reports.
    ExportSvg {
        #[arg(long, default_value = "map.svg")]
        out: PathBuf,
        #[arg(long)]
        consistence_csv: Option<PathBuf>,
        #[arg(long)]
        kpi_csv: Option<PathBuf>,
    },
    /// Serve the scenario over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn case(args: &CaseArgs, seed: Option<u64>, strategies: &Strategies) -> Result<Scenario> {
    let defaults = CaseParams::default();
    let params = CaseParams {
        count: args.candidates,
        regions: args.regions,
        horizon: args.horizon,
        seed: seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let selector = strategies.selectors.get(&args.selector)?;
    Ok(build_case_with(&params, selector)?)
}

fn load(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading {}", path.display()))
}

fn save(s: &Scenario, path: &Path) -> Result<()> {
    save_scenario(s, path).with_context(|| format!("writing {}", path.display()))
}

fn rule(name: &str, strategies: &Strategies) -> Result<RuleSet> {
    if name.contains('/') {
        return Ok(RuleSet::from_notation(name)?);
    }
    Ok(strategies.rules.get(name)?.clone())
}

/// Runs one command, returning what it prints on success.
pub fn run(cli: Cli) -> Result<String> {
    let strategies = Strategies::standard();
    match cli.command {
        Command::BuildMap(args) => {
            let s = case(&args, cli.seed, &strategies)?;
            save(&s, &cli.scenario)?;
            let src = s.sourcing.as_ref().expect("case has sourcing");
            Ok(format!(
                "wrote {} with {} partners over {} regions ({} infeasible)",
                cli.scenario.display(),
                s.network.len(),
                src.portfolio.regions.len(),
                src.portfolio.infeasible_regions().len()
            ))
        }
        Command::Evolve { ticks } => {
            if ticks == 0 {
                bail!("--ticks must be positive");
            }
            let mut s = load(&cli.scenario)?;
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            let records = s.evolve(ticks, &strategies)?;
            save(&s, &cli.scenario)?;
            let events: usize = records.iter().map(|r| r.events.len()).sum();
            let q = s.consistence.last().map_or(f64::NAN, |c| c.q);
            Ok(format!("tick {}: {} partners, {events} events, q = {q}", s.tick, s.network.len()))
        }
        Command::Classify {
            rule: name,
            soups,
            horizon,
            size,
        } => {
            let r = rule(&name, &strategies)?;
            let cfg = DetectorConfig {
                width: size,
                height: size,
                ..DetectorConfig::default()
            };
            let report = classify_rule(&r, soups, horizon, cli.seed.unwrap_or(0), &cfg)?;
            Ok(format!(
                "class {:?}: transient {:?}, period {:?}, fixed point at {:?}",
                report.class, report.transient_length, report.detected_period, report.fixed_point_step
            ))
        }
        Command::Select(args) => {
            let s = case(&args, cli.seed, &strategies)?;
            let src = s.sourcing.as_ref().expect("case has sourcing");
            let mut lines = Vec::new();
            for (region, sel) in &src.portfolio.regions {
                if sel.infeasible {
                    lines.push(format!("{region}: infeasible ({} candidates)", sel.available));
                } else {
                    let ids: Vec<String> = sel.selected.iter().map(u64::to_string).collect();
                    lines.push(format!("{region}: {} of {}, force {:.3}: {}", sel.selected.len(), sel.available, sel.total_force, ids.join(" ")));
                }
            }
            Ok(lines.join("\n"))
        }
        Command::Montecarlo { trials, ticks, out } => {
            let s = load(&cli.scenario)?;
            let seed = cli.seed.unwrap_or(s.seed);
            let report = run_monte_carlo(&s.network, &s.settings, &strategies, s.tick, ticks, trials, seed)?;
            if let Some(out) = out {
                let text = serde_json::to_string_pretty(&report)? + "\n";
                fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            }
            let last = report.per_tick.last().expect("non-empty run");
            Ok(format!(
                "{trials} trials x {ticks} ticks: survival {:.4}, final q mean {:.4} (min {:.4}, max {:.4})",
                report.survival, last.q.mean, last.q.min, last.q.max
            ))
        }
        Command::ExportSvg {
            out,
            consistence_csv: series,
            kpi_csv: kpis,
        } => {
            let s = load(&cli.scenario)?;
            export_map_svg(&s, &out).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = series {
                fs::write(&path, consistence_csv(&s.consistence)).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = kpis {
                fs::write(&path, kpi_csv(&s.kpis()?)).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(format!("wrote {}", out.display()))
        }
        Command::Serve { bind } => {
            let s = load(&cli.scenario)?;
            let id = cli
                .scenario
                .file_stem()
                .map_or_else(|| s.name.clone(), |stem| stem.to_string_lossy().into_owned());
            let store = Store::new().with(id.clone(), s, Some(cli.scenario.clone()));
            let runtime = tokio::runtime::Runtime::new()?;
            println!("serving scenario {id:?} on http://{bind}");
            runtime.block_on(api::serve(store, bind)).with_context(|| format!("serving on {bind}"))?;
            Ok(String::new())
        }
    }
}
