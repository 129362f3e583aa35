//! Structural gate-level netlists.
//!
//! Line-oriented grammar, `#` starts a comment:
//!
//! ```text
//! input  <net> [<net> ...]
//! output <net> [<net> ...]
//! load   <net> <capacitance_ff>
//! gate   <id> <CELL>[:stacked] <in1> [<in2> ...] -> <out1> [<out2> ...]
//! ```

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fmt;
use std::fmt::Write as _;

use crate::library::{Library, Variant};

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub cell_name: String,
    pub variant: Variant,
    pub input_nets: Vec<String>,
    pub output_nets: Vec<String>,
    /// Source line, when parsed from text.
    pub line: Option<usize>,
}

// source line is not part of the instance's identity
impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.cell_name == other.cell_name
            && self.variant == other.variant
            && self.input_nets == other.input_nets
            && self.output_nets == other.output_nets
    }
}

impl Instance {
    pub fn new(id: &str, cell_name: &str, variant: Variant, inputs: &[&str], outputs: &[&str]) -> Self {
        Instance {
            id: id.to_string(),
            cell_name: cell_name.to_string(),
            variant,
            input_nets: inputs.iter().map(|s| s.to_string()).collect(),
            output_nets: outputs.iter().map(|s| s.to_string()).collect(),
            line: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
    pub instances: Vec<Instance>,
    /// Extra wire capacitance per net, fF.
    pub net_load_ff: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticKind {
    Syntax,
    DuplicateInstance,
    UnknownCell,
    UnknownVariant,
    ArityMismatch,
    MultipleDrivers,
    UndrivenNet,
    CombinationalCycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(kind: DiagnosticKind, line: Option<usize>, message: String) -> Diagnostic {
    Diagnostic { kind, line, message }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Strips a `#` comment and splits on whitespace.
pub(crate) fn tokens(line: &str) -> Vec<&str> {
    line.split('#').next().unwrap_or("").split_whitespace().collect()
}

fn parse_syntax(text: &str) -> (Netlist, Vec<Diagnostic>) {
    let mut nl = Netlist::default();
    let mut diags = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = Some(idx + 1);
        let toks = tokens(raw);
        let Some((&keyword, rest)) = toks.split_first() else {
            continue;
        };
        let bad_nets = |names: &[&str], diags: &mut Vec<Diagnostic>| {
            let before = diags.len();
            for name in names.iter().filter(|n| !is_identifier(n)) {
                diags.push(diag(DiagnosticKind::Syntax, line, format!("invalid net name '{name}'")));
            }
            diags.len() > before
        };
        match keyword {
            "input" | "output" => {
                if rest.is_empty() {
                    diags.push(diag(DiagnosticKind::Syntax, line, format!("'{keyword}' needs at least one net")));
                    continue;
                }
                if bad_nets(rest, &mut diags) {
                    continue;
                }
                let target = if keyword == "input" { &mut nl.primary_inputs } else { &mut nl.primary_outputs };
                target.extend(rest.iter().map(|n| n.to_string()));
            }
            "load" => {
                if rest.len() != 2 {
                    diags.push(diag(DiagnosticKind::Syntax, line, "expected 'load <net> <capacitance_ff>'".into()));
                    continue;
                }
                if bad_nets(&rest[..1], &mut diags) {
                    continue;
                }
                match rest[1].parse::<f64>() {
                    Ok(c) if c >= 0.0 && c.is_finite() => {
                        *nl.net_load_ff.entry(rest[0].to_string()).or_insert(0.0) += c;
                    }
                    _ => diags.push(diag(
                        DiagnosticKind::Syntax,
                        line,
                        format!("invalid capacitance '{}'", rest[1]),
                    )),
                }
            }
            "gate" => {
                let arrow = rest.iter().position(|t| *t == "->");
                let Some(arrow) = arrow.filter(|&a| a >= 3 && a + 1 < rest.len()) else {
                    diags.push(diag(
                        DiagnosticKind::Syntax,
                        line,
                        "expected 'gate <id> <CELL>[:stacked] <inputs...> -> <outputs...>'".into(),
                    ));
                    continue;
                };
                let id = rest[0];
                if !is_identifier(id) {
                    diags.push(diag(DiagnosticKind::Syntax, line, format!("invalid instance id '{id}'")));
                    continue;
                }
                let (cell_name, variant) = match rest[1].split_once(':') {
                    None => (rest[1], Variant::Conventional),
                    Some((name, v)) => match v.parse::<Variant>() {
                        Ok(variant) => (name, variant),
                        Err(e) => {
                            diags.push(diag(DiagnosticKind::Syntax, line, e));
                            continue;
                        }
                    },
                };
                let ins = &rest[2..arrow];
                let outs = &rest[arrow + 1..];
                let bad_in = bad_nets(ins, &mut diags);
                if bad_nets(outs, &mut diags) || bad_in {
                    continue;
                }
                nl.instances.push(Instance {
                    line,
                    ..Instance::new(id, cell_name, variant, ins, outs)
                });
            }
            other => diags.push(diag(DiagnosticKind::Syntax, line, format!("unknown keyword '{other}'"))),
        }
    }
    (nl, diags)
}

/// Parses and validates a netlist against a library.
pub fn parse_netlist(text: &str, lib: &Library) -> Result<Netlist, Vec<Diagnostic>> {
    let (nl, mut diags) = parse_syntax(text);
    if !diags.is_empty() {
        return Err(diags);
    }
    diags = validate(&nl, lib);
    if diags.is_empty() {
        Ok(nl)
    } else {
        Err(diags)
    }
}

/// Structural diagnostics that do not need a library.
pub fn validate_structure(nl: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut ids: HashSet<&str> = HashSet::new();
    for inst in &nl.instances {
        if !ids.insert(&inst.id) {
            diags.push(diag(
                DiagnosticKind::DuplicateInstance,
                inst.line,
                format!("duplicate instance id: {}", inst.id),
            ));
        }
    }

    // driver count per net, in first-seen order
    let mut drivers: BTreeMap<&str, Vec<Option<usize>>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for pi in &nl.primary_inputs {
        if !drivers.contains_key(pi.as_str()) {
            order.push(pi);
        }
        drivers.entry(pi).or_default().push(None);
    }
    for inst in &nl.instances {
        for net in &inst.output_nets {
            if !drivers.contains_key(net.as_str()) {
                order.push(net);
            }
            drivers.entry(net).or_default().push(inst.line);
        }
    }
    for net in &order {
        let lines = &drivers[net];
        if lines.len() > 1 {
            let line = lines.iter().rev().find_map(|l| *l);
            diags.push(diag(DiagnosticKind::MultipleDrivers, line, format!("multiple drivers: {net}")));
        }
    }
    for inst in &nl.instances {
        for net in &inst.input_nets {
            if !drivers.contains_key(net.as_str()) {
                diags.push(diag(
                    DiagnosticKind::UndrivenNet,
                    inst.line,
                    format!("undriven net: {net} (input of {})", inst.id),
                ));
            }
        }
    }
    for po in &nl.primary_outputs {
        if !drivers.contains_key(po.as_str()) {
            diags.push(diag(DiagnosticKind::UndrivenNet, None, format!("undriven net: {po} (primary output)")));
        }
    }
    if let Err(stuck) = kahn(nl) {
        let line = stuck.first().and_then(|&i| nl.instances[i].line);
        let names: Vec<&str> = stuck.iter().map(|&i| nl.instances[i].id.as_str()).collect();
        diags.push(diag(
            DiagnosticKind::CombinationalCycle,
            line,
            format!("combinational cycle through: {}", names.join(", ")),
        ));
    }
    diags
}

/// All diagnostics: structure plus library references and pin arity.
pub fn validate(nl: &Netlist, lib: &Library) -> Vec<Diagnostic> {
    let mut diags = validate_structure(nl);
    for inst in &nl.instances {
        if !lib.has_cell_name(&inst.cell_name) {
            diags.push(diag(
                DiagnosticKind::UnknownCell,
                inst.line,
                format!("unknown cell: {} (instance {})", inst.cell_name, inst.id),
            ));
            continue;
        }
        let Some(cell) = lib.cell(&inst.cell_name, inst.variant) else {
            diags.push(diag(
                DiagnosticKind::UnknownVariant,
                inst.line,
                format!("unknown variant: {}:{} (instance {})", inst.cell_name, inst.variant, inst.id),
            ));
            continue;
        };
        if cell.inputs.len() != inst.input_nets.len() || cell.outputs.len() != inst.output_nets.len() {
            diags.push(diag(
                DiagnosticKind::ArityMismatch,
                inst.line,
                format!(
                    "arity mismatch: {} expects {} inputs and {} outputs, instance {} has {} and {}",
                    cell.name,
                    cell.inputs.len(),
                    cell.outputs.len(),
                    inst.id,
                    inst.input_nets.len(),
                    inst.output_nets.len()
                ),
            ));
        }
    }
    diags.sort_by_key(|d| (d.line.unwrap_or(usize::MAX), d.kind));
    diags
}

/// Kahn's algorithm over instance indices, smallest declaration index first.
/// On a cycle, returns the instances that could not be ordered.
fn kahn(nl: &Netlist) -> Result<Vec<usize>, Vec<usize>> {
    let mut driver: HashMap<&str, usize> = HashMap::new();
    for (i, inst) in nl.instances.iter().enumerate() {
        for net in &inst.output_nets {
            driver.entry(net.as_str()).or_insert(i);
        }
    }
    let n = nl.instances.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, inst) in nl.instances.iter().enumerate() {
        for net in &inst.input_nets {
            if let Some(&d) = driver.get(net.as_str()) {
                succ[d].push(i);
                indegree[i] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &s in &succ[i] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        let placed: HashSet<usize> = order.into_iter().collect();
        Err((0..n).filter(|i| !placed.contains(i)).collect())
    }
}

/// Instance indices in dependency order; ties go to the earlier declaration.
pub fn topological_indices(nl: &Netlist) -> Result<Vec<usize>, Vec<String>> {
    kahn(nl).map_err(|stuck| stuck.into_iter().map(|i| nl.instances[i].id.clone()).collect())
}

/// Instance ids in dependency order; ties go to the earlier declaration.
pub fn topological_order(nl: &Netlist) -> Result<Vec<String>, Vec<String>> {
    topological_indices(nl).map(|order| order.into_iter().map(|i| nl.instances[i].id.clone()).collect())
}

/// Renders a netlist in the grammar accepted by [`parse_netlist`].
pub fn serialize_netlist(nl: &Netlist) -> String {
    let mut out = String::new();
    if !nl.primary_inputs.is_empty() {
        let _ = writeln!(out, "input {}", nl.primary_inputs.join(" "));
    }
    if !nl.primary_outputs.is_empty() {
        let _ = writeln!(out, "output {}", nl.primary_outputs.join(" "));
    }
    for (net, c) in &nl.net_load_ff {
        let _ = writeln!(out, "load {net} {c}");
    }
    for inst in &nl.instances {
        let suffix = match inst.variant {
            Variant::Conventional => "",
            Variant::Stacked => ":stacked",
        };
        let _ = writeln!(
            out,
            "gate {} {}{} {} -> {}",
            inst.id,
            inst.cell_name,
            suffix,
            inst.input_nets.join(" "),
            inst.output_nets.join(" ")
        );
    }
    out
}

/// Dense connectivity view used by the analyses. Requires a valid netlist.
#[derive(Debug, Clone)]
pub(crate) struct Graph {
    pub nets: Vec<String>,
    pub net_index: HashMap<String, usize>,
    pub inst_inputs: Vec<Vec<usize>>,
    pub inst_outputs: Vec<Vec<usize>>,
    /// Per net: (instance, input pin) pairs reading it.
    pub sinks: Vec<Vec<(usize, usize)>>,
    /// Per net: driving (instance, output pin), `None` for primary inputs.
    pub driver: Vec<Option<(usize, usize)>>,
    pub wire_load_ff: Vec<f64>,
    pub primary_inputs: Vec<usize>,
    pub primary_outputs: Vec<usize>,
    pub order: Vec<usize>,
}

impl Graph {
    pub fn build(nl: &Netlist) -> Result<Graph, Vec<String>> {
        let order = topological_indices(nl)?;
        let mut nets = Vec::new();
        let mut net_index = HashMap::new();
        let mut intern = |name: &str, nets: &mut Vec<String>| -> usize {
            *net_index.entry(name.to_string()).or_insert_with(|| {
                nets.push(name.to_string());
                nets.len() - 1
            })
        };
        let primary_inputs: Vec<usize> = nl.primary_inputs.iter().map(|n| intern(n, &mut nets)).collect();
        let mut inst_inputs = Vec::with_capacity(nl.instances.len());
        let mut inst_outputs = Vec::with_capacity(nl.instances.len());
        for inst in &nl.instances {
            inst_inputs.push(inst.input_nets.iter().map(|n| intern(n, &mut nets)).collect::<Vec<_>>());
            inst_outputs.push(inst.output_nets.iter().map(|n| intern(n, &mut nets)).collect::<Vec<_>>());
        }
        let primary_outputs: Vec<usize> = nl.primary_outputs.iter().map(|n| intern(n, &mut nets)).collect();
        for net in nl.net_load_ff.keys() {
            intern(net, &mut nets);
        }
        let mut sinks = vec![Vec::new(); nets.len()];
        let mut driver = vec![None; nets.len()];
        for (i, ins) in inst_inputs.iter().enumerate() {
            for (pin, &n) in ins.iter().enumerate() {
                sinks[n].push((i, pin));
            }
        }
        for (i, outs) in inst_outputs.iter().enumerate() {
            for (pin, &n) in outs.iter().enumerate() {
                driver[n] = Some((i, pin));
            }
        }
        let mut wire_load_ff = vec![0.0; nets.len()];
        for (net, c) in &nl.net_load_ff {
            wire_load_ff[net_index[net]] = *c;
        }
        Ok(Graph {
            nets,
            net_index,
            inst_inputs,
            inst_outputs,
            sinks,
            driver,
            wire_load_ff,
            primary_inputs,
            primary_outputs,
            order,
        })
    }
}
