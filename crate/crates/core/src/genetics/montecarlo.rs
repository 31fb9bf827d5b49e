use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evolve, DynamicsSettings, GeneticsError};
use crate::network::{Network, PartnerId};
use crate::registry::Strategies;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation across trials.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Summary {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSummary {
    pub tick: u64,
    pub p: Summary,
    pub q: Summary,
    pub live: Summary,
    pub attraction: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub trials: usize,
    pub ticks: u64,
    pub per_tick: Vec<TickSummary>,
    /// Mean fraction of the starting partners still present at the end.
    pub survival: f64,
}

/// Per-tick observations of one trial.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TrialSeries {
    pub trial: usize,
    /// `(p, q, live, attraction)` per tick; an emptied network reads zero.
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub survival: f64,
}

fn run_trial(
    net: &Network,
    settings: &DynamicsSettings,
    strategies: &Strategies,
    seed: u64,
    trial: usize,
    start_tick: u64,
    ticks: u64,
) -> Result<TrialSeries, GeneticsError> {
    let mut net = net.clone();
    let initial: Vec<PartnerId> = net.partners.keys().copied().collect();
    let mut rows = Vec::with_capacity(ticks as usize);
    for tick in start_tick..start_tick + ticks {
        let rec = evolve(&mut net, settings, strategies, seed, trial as u64, tick, 1)?.remove(0);
        let (p, q) = rec.consistence.map_or((0.0, 0.0), |c| (c.p as f64, c.q));
        rows.push((p, q, net.len() as f64, net.total_attraction()));
    }
    let survivors = initial.iter().filter(|id| net.partners.contains_key(id)).count();
    let survival = if initial.is_empty() {
        1.0
    } else {
        survivors as f64 / initial.len() as f64
    };
    Ok(TrialSeries { trial, rows, survival })
}

/// Reduces trials in ascending trial order whatever order they arrive in.
pub(crate) fn aggregate(mut trials: Vec<TrialSeries>, seed: u64, start_tick: u64, ticks: u64) -> MonteCarloReport {
    trials.sort_by_key(|t| t.trial);
    let per_tick = (0..ticks as usize)
        .map(|i| {
            let column = |f: fn(&(f64, f64, f64, f64)) -> f64| Summary::of(&trials.iter().map(|t| f(&t.rows[i])).collect::<Vec<_>>());
            TickSummary {
                tick: start_tick + i as u64 + 1,
                p: column(|r| r.0),
                q: column(|r| r.1),
                live: column(|r| r.2),
                attraction: column(|r| r.3),
            }
        })
        .collect();
    MonteCarloReport {
        seed,
        trials: trials.len(),
        ticks,
        per_tick,
        survival: trials.iter().map(|t| t.survival).sum::<f64>() / trials.len() as f64,
    }
}

/// Runs independent copies of the network forward and summarizes each tick
/// across trials. Trial `k` draws from the streams of trial index `k`, so a
/// single trial replays `evolve` with trial 0.
pub fn run_monte_carlo(
    net: &Network,
    settings: &DynamicsSettings,
    strategies: &Strategies,
    start_tick: u64,
    ticks: u64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloReport, GeneticsError> {
    if trials == 0 || ticks == 0 {
        return Err(GeneticsError::EmptyRun);
    }
    let series = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(net, settings, strategies, seed, k, start_tick, ticks))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(series, seed, start_tick, ticks))
}
