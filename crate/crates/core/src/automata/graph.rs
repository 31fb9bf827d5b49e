use std::collections::BTreeMap;
use std::fmt::Debug;

use super::{AutomataError, RuleSet};
use crate::kinetics::AdjacencyGraph;

/// Synchronous update of `states` where node `i` sees `neighbors[i]`.
pub fn step_indexed(states: &[u8], neighbors: &[Vec<usize>], rule: &RuleSet) -> Result<Vec<u8>, AutomataError> {
    let k = rule.states();
    if let Some(&s) = states.iter().find(|&&s| s >= k) {
        return Err(AutomataError::StateOutOfRange(s, k));
    }
    let mut counts = vec![0usize; k as usize];
    Ok(states
        .iter()
        .zip(neighbors)
        .map(|(&s, list)| {
            counts.iter_mut().for_each(|c| *c = 0);
            for &n in list {
                counts[states[n] as usize] += 1;
            }
            rule.next(s, &counts)
        })
        .collect())
}

/// One synchronous update on a graph: each node reads its neighbors' states
/// from the previous configuration.
pub fn step_graph<N: Ord + Copy + Debug>(
    states: &BTreeMap<N, u8>,
    adjacency: &AdjacencyGraph<N>,
    rule: &RuleSet,
) -> Result<BTreeMap<N, u8>, AutomataError> {
    rule.validate()?;
    if let Some(n) = states.keys().find(|n| !adjacency.contains_node(**n)) {
        return Err(AutomataError::MissingNode(format!("{n:?}")));
    }
    if let Some(n) = adjacency.nodes().find(|n| !states.contains_key(n)) {
        return Err(AutomataError::MissingState(format!("{n:?}")));
    }
    let order: Vec<N> = states.keys().copied().collect();
    let index: BTreeMap<N, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let neighbors: Vec<Vec<usize>> = adjacency
        .adjacency()
        .into_values()
        .map(|list| list.iter().map(|n| index[n]).collect())
        .collect();
    let flat: Vec<u8> = states.values().copied().collect();
    let next = step_indexed(&flat, &neighbors, rule)?;
    Ok(order.into_iter().zip(next).collect())
}
