//! Network graph analysis: radial-line (bridge) detection, N-1 contingency
//! construction and island enumeration.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::PowerSystem;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("network is disconnected ({0} islands)")]
    Disconnected(usize),
    #[error("unknown line id `{0}` in contingency list")]
    UnknownLine(String),
    #[error("line `{0}` is radial and cannot be an N-1 contingency")]
    RadialLine(String),
    #[error("line `{line}` references unknown bus `{bus}`")]
    UnknownBus { line: String, bus: String },
    #[error("failed to read contingency list {path}: {message}")]
    Whitelist { path: String, message: String },
}

/// Outage of one line together with the lines that may be opened in
/// response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub outaged_line_id: String,
    /// Candidate switches in system line order.
    pub candidate_switch_ids: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ContingencyOptions {
    /// Restrict the outaged lines to these ids.
    pub whitelist: Option<BTreeSet<String>>,
    /// Drop candidates whose opening together with the outage islands a bus.
    pub strict: bool,
}

/// Read a JSON array of line ids.
pub fn load_whitelist(path: impl AsRef<Path>) -> Result<BTreeSet<String>, TopologyError> {
    let path = path.as_ref();
    let err = |message: String| TopologyError::Whitelist {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str::<Vec<String>>(&text)
        .map(|ids| ids.into_iter().collect())
        .map_err(|e| err(e.to_string()))
}

/// Undirected multigraph over bus positions; edges keep their line index.
struct Graph {
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    fn new(sys: &PowerSystem, removed: &HashSet<usize>) -> Result<Self, TopologyError> {
        let mut adj = vec![Vec::new(); sys.buses.len()];
        for (k, line) in sys.lines.iter().enumerate() {
            if removed.contains(&k) {
                continue;
            }
            let pos = |bus: &str| {
                sys.bus_position(bus).ok_or_else(|| TopologyError::UnknownBus {
                    line: line.id.clone(),
                    bus: bus.to_string(),
                })
            };
            let (a, b) = (pos(&line.from_bus)?, pos(&line.to_bus)?);
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        Ok(Graph { adj })
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(w, _) in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Low-link DFS. Skips only the tree edge by its line index so parallel
    /// lines count as back edges.
    fn bridges(&self) -> Vec<usize> {
        let n = self.adj.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut timer = 0;
        let mut bridges = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            // (vertex, edge used to enter it, next adjacency slot)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            while let Some(frame) = stack.last_mut() {
                let (v, via, slot) = *frame;
                if slot < self.adj[v].len() {
                    frame.2 += 1;
                    let (w, k) = self.adj[v][slot];
                    if k == via {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, k, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            bridges.push(via);
                        }
                    }
                }
            }
        }
        bridges.sort_unstable();
        bridges
    }
}

/// Line indices whose removal disconnects the network.
pub fn bridge_indices(sys: &PowerSystem) -> Result<Vec<usize>, TopologyError> {
    let graph = Graph::new(sys, &HashSet::new())?;
    let islands = graph.components().len();
    if islands > 1 {
        return Err(TopologyError::Disconnected(islands));
    }
    Ok(graph.bridges())
}

/// Ids of the radial lines.
pub fn find_bridges(sys: &PowerSystem) -> Result<BTreeSet<String>, TopologyError> {
    Ok(bridge_indices(sys)?
        .into_iter()
        .map(|k| sys.lines[k].id.clone())
        .collect())
}

/// Connected components after removing `removed_line_ids`, as sets of bus ids
/// ordered by their first bus in system order. Unknown ids are ignored.
pub fn islands_after(sys: &PowerSystem, removed_line_ids: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    let removed: HashSet<usize> = sys
        .lines
        .iter()
        .enumerate()
        .filter(|(_, l)| removed_line_ids.contains(&l.id))
        .map(|(k, _)| k)
        .collect();
    islands_after_indices(sys, &removed)
        .into_iter()
        .map(|comp| comp.into_iter().map(|b| sys.buses[b].id.clone()).collect())
        .collect()
}

/// Lines referencing unknown buses are skipped here; validation reports them.
pub(crate) fn islands_after_indices(sys: &PowerSystem, removed: &HashSet<usize>) -> Vec<Vec<usize>> {
    let mut skip = removed.clone();
    for (k, l) in sys.lines.iter().enumerate() {
        if sys.bus_position(&l.from_bus).is_none() || sys.bus_position(&l.to_bus).is_none() {
            skip.insert(k);
        }
    }
    Graph::new(sys, &skip).expect("unknown buses filtered").components()
}

/// One contingency per non-radial line (optionally restricted to a
/// whitelist). Candidates are the switchable non-radial lines other than the
/// outaged one.
pub fn build_contingency_set(
    sys: &PowerSystem,
    opts: &ContingencyOptions,
) -> Result<Vec<Contingency>, TopologyError> {
    let bridges: HashSet<usize> = bridge_indices(sys)?.into_iter().collect();
    if let Some(list) = &opts.whitelist {
        for id in list {
            match sys.line_position(id) {
                None => return Err(TopologyError::UnknownLine(id.clone())),
                Some(k) if bridges.contains(&k) => return Err(TopologyError::RadialLine(id.clone())),
                Some(_) => {}
            }
        }
    }
    let mut out = Vec::new();
    for (c, line) in sys.lines.iter().enumerate() {
        if bridges.contains(&c) {
            continue;
        }
        if opts.whitelist.as_ref().is_some_and(|w| !w.contains(&line.id)) {
            continue;
        }
        let candidate_switch_ids = sys
            .lines
            .iter()
            .enumerate()
            .filter(|(k, l)| *k != c && l.switchable && !bridges.contains(k))
            .filter(|(k, _)| {
                !opts.strict || islands_after_indices(sys, &HashSet::from([c, *k])).len() == 1
            })
            .map(|(_, l)| l.id.clone())
            .collect();
        out.push(Contingency {
            outaged_line_id: line.id.clone(),
            candidate_switch_ids,
        });
    }
    Ok(out)
}
