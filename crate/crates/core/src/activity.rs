//! Signal probability and toggle-rate estimation.
//!
//! [`propagate_probabilities`] assumes spatially independent gate inputs and
//! temporally independent cycles (zero-delay model, no glitches).
//! [`exhaustive_activity`] enumerates every primary-input vector and is exact
//! under the same per-input Bernoulli model, including reconvergent fanout.

use std::collections::BTreeMap;

use crate::error::{AnalysisError, ModelError};
use crate::library::Library;
use crate::netlist::{tokens, Diagnostic, DiagnosticKind, Graph, Netlist};

/// Largest primary-input count accepted by [`exhaustive_activity`].
pub const MAX_EXHAUSTIVE_INPUTS: usize = 16;

/// Probability used for primary inputs not listed in an activity file.
pub const DEFAULT_INPUT_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetActivity {
    pub p_one: f64,
    /// Expected transitions per cycle.
    pub toggle_rate: f64,
}

impl NetActivity {
    pub fn from_probability(p_one: f64) -> Self {
        NetActivity {
            p_one,
            toggle_rate: 2.0 * p_one * (1.0 - p_one),
        }
    }
}

pub type ActivityMap = BTreeMap<String, NetActivity>;

fn input_probabilities(
    nl: &Netlist,
    graph: &Graph,
    input_p: &BTreeMap<String, f64>,
) -> Result<Vec<f64>, AnalysisError> {
    let mut probs = vec![f64::NAN; graph.nets.len()];
    for pi in &nl.primary_inputs {
        let p = *input_p
            .get(pi)
            .ok_or_else(|| AnalysisError::MissingProbability(pi.clone()))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::Domain(format!("probability of {pi} is {p}, outside [0, 1]")).into());
        }
        probs[graph.net_index[pi]] = p;
    }
    Ok(probs)
}

fn build_graph(nl: &Netlist) -> Result<Graph, AnalysisError> {
    Graph::build(nl).map_err(|ids| AnalysisError::Cycle(ids.join(", ")))
}

fn tables<'a>(nl: &Netlist, lib: &'a Library) -> Result<Vec<Vec<&'a [bool]>>, AnalysisError> {
    nl.instances
        .iter()
        .map(|inst| {
            let cell = lib.require(&inst.cell_name, inst.variant)?;
            Ok((0..cell.outputs.len())
                .map(|k| lib.truth_table(&inst.cell_name, inst.variant, k).expect("output exists"))
                .collect())
        })
        .collect()
}

fn to_map(graph: &Graph, probs: &[f64]) -> ActivityMap {
    graph
        .nets
        .iter()
        .zip(probs)
        .filter(|(_, p)| !p.is_nan())
        .map(|(name, &p)| (name.clone(), NetActivity::from_probability(p)))
        .collect()
}

/// Propagates one-probabilities through the netlist in topological order.
pub fn propagate_probabilities(
    nl: &Netlist,
    lib: &Library,
    input_p: &BTreeMap<String, f64>,
) -> Result<ActivityMap, AnalysisError> {
    let graph = build_graph(nl)?;
    let tables = tables(nl, lib)?;
    let mut probs = input_probabilities(nl, &graph, input_p)?;
    for &i in &graph.order {
        let ins: Vec<f64> = graph.inst_inputs[i].iter().map(|&n| probs[n]).collect();
        for (k, &out) in graph.inst_outputs[i].iter().enumerate() {
            let p: f64 = tables[i][k]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v)
                .map(|(m, _)| {
                    ins.iter()
                        .enumerate()
                        .map(|(b, &q)| if (m >> b) & 1 == 1 { q } else { 1.0 - q })
                        .product::<f64>()
                })
                .sum();
            probs[out] = p.clamp(0.0, 1.0);
        }
    }
    Ok(to_map(&graph, &probs))
}

/// Exact activity by enumerating all primary-input vectors.
///
/// With cycles drawn independently, the probability that a net differs
/// between two consecutive cycles is the pair sum
/// `sum_{u,v} w(u) w(v) [f(u) != f(v)]`, which factors to `2 p (1 - p)` with
/// `p` the exact one-probability; only single vectors are enumerated.
pub fn exhaustive_activity(
    nl: &Netlist,
    lib: &Library,
    input_p: &BTreeMap<String, f64>,
) -> Result<ActivityMap, AnalysisError> {
    let n = nl.primary_inputs.len();
    if n > MAX_EXHAUSTIVE_INPUTS {
        return Err(ModelError::Capacity {
            what: format!("{n} primary inputs"),
            limit: MAX_EXHAUSTIVE_INPUTS,
        }
        .into());
    }
    let graph = build_graph(nl)?;
    let tables = tables(nl, lib)?;
    let pi_probs = input_probabilities(nl, &graph, input_p)?;

    let mut acc = vec![0.0f64; graph.nets.len()];
    let mut known = vec![false; graph.nets.len()];
    let mut values = vec![false; graph.nets.len()];
    for &pi in &graph.primary_inputs {
        known[pi] = true;
    }
    for i in 0..graph.inst_outputs.len() {
        for &o in &graph.inst_outputs[i] {
            known[o] = true;
        }
    }

    for vector in 0u32..(1u32 << n) {
        let mut weight = 1.0;
        for (b, &pi) in graph.primary_inputs.iter().enumerate() {
            let bit = (vector >> b) & 1 == 1;
            values[pi] = bit;
            let p = pi_probs[pi];
            weight *= if bit { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        for &i in &graph.order {
            let m = graph.inst_inputs[i]
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &net)| acc | (usize::from(values[net]) << b));
            for (k, &out) in graph.inst_outputs[i].iter().enumerate() {
                values[out] = tables[i][k][m];
            }
        }
        for (net, &v) in values.iter().enumerate() {
            if v {
                acc[net] += weight;
            }
        }
    }
    let probs: Vec<f64> = acc
        .iter()
        .zip(&known)
        .map(|(&p, &k)| if k { p.clamp(0.0, 1.0) } else { f64::NAN })
        .collect();
    Ok(to_map(&graph, &probs))
}

/// Parses `prob <net> <p>` lines.
pub fn parse_activity(text: &str) -> Result<BTreeMap<String, f64>, Vec<Diagnostic>> {
    let mut out = BTreeMap::new();
    let mut diags = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = Some(idx + 1);
        let toks = tokens(raw);
        match toks.as_slice() {
            [] => {}
            ["prob", net, p] => match p.parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => {
                    out.insert(net.to_string(), p);
                }
                _ => diags.push(Diagnostic {
                    kind: DiagnosticKind::Syntax,
                    line,
                    message: format!("probability '{p}' is not a number in [0, 1]"),
                }),
            },
            _ => diags.push(Diagnostic {
                kind: DiagnosticKind::Syntax,
                line,
                message: "expected 'prob <net> <p>'".into(),
            }),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(diags)
    }
}

/// Fills unlisted primary inputs with [`DEFAULT_INPUT_PROBABILITY`].
pub fn with_default_probabilities(nl: &Netlist, given: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    nl.primary_inputs
        .iter()
        .map(|pi| (pi.clone(), given.get(pi).copied().unwrap_or(DEFAULT_INPUT_PROBABILITY)))
        .collect()
}
