#![allow(dead_code)]

use std::collections::BTreeMap;

use cellpower::{Instance, Netlist, Variant};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CELLS: [(&str, usize, usize); 4] = [("NOT", 1, 1), ("NAND", 2, 1), ("FULLADDER", 3, 2), ("MUX1", 3, 1)];

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn finish(nl: &mut Netlist, fanout: &BTreeMap<String, usize>, rng: &mut ChaCha8Rng) {
    let mut outputs: Vec<String> = nl
        .instances
        .iter()
        .flat_map(|i| i.output_nets.iter().cloned())
        .filter(|n| fanout.get(n).copied().unwrap_or(0) == 0)
        .collect();
    // occasionally expose an internal net as well
    for inst in &nl.instances {
        for n in &inst.output_nets {
            if !outputs.contains(n) && rng.gen_bool(0.1) {
                outputs.push(n.clone());
            }
        }
    }
    nl.primary_outputs = outputs;
    for inst in &nl.instances {
        for n in &inst.output_nets {
            if rng.gen_bool(0.3) {
                nl.net_load_ff.insert(n.clone(), (rng.gen_range(0..40) as f64) * 0.25);
            }
        }
    }
}

/// Random DAG with `gates` instances; inputs drawn from any earlier net.
pub fn random_dag(rng: &mut ChaCha8Rng, inputs: usize, gates: usize) -> Netlist {
    let mut nl = Netlist {
        primary_inputs: (0..inputs).map(|i| format!("i{i}")).collect(),
        ..Netlist::default()
    };
    let mut nets = nl.primary_inputs.clone();
    let mut fanout: BTreeMap<String, usize> = BTreeMap::new();
    for g in 0..gates {
        let (cell, arity, outs) = CELLS[rng.gen_range(0..CELLS.len())];
        let ins: Vec<String> = (0..arity).map(|_| nets[rng.gen_range(0..nets.len())].clone()).collect();
        for n in &ins {
            *fanout.entry(n.clone()).or_default() += 1;
        }
        let out_names: Vec<String> = (0..outs).map(|k| format!("g{g}_{k}")).collect();
        let variant = if rng.gen_bool(0.3) { Variant::Stacked } else { Variant::Conventional };
        let ins_ref: Vec<&str> = ins.iter().map(String::as_str).collect();
        let outs_ref: Vec<&str> = out_names.iter().map(String::as_str).collect();
        nl.instances.push(Instance::new(&format!("g{g}"), cell, variant, &ins_ref, &outs_ref));
        nets.extend(out_names);
    }
    finish(&mut nl, &fanout, rng);
    nl
}

/// Random netlist without reconvergent fanout: every gate's inputs have
/// pairwise disjoint primary-input supports.
pub fn random_tree(rng: &mut ChaCha8Rng, max_inputs: usize) -> Netlist {
    let inputs = rng.gen_range(1..=max_inputs);
    let mut nl = Netlist {
        primary_inputs: (0..inputs).map(|i| format!("i{i}")).collect(),
        ..Netlist::default()
    };
    // available nets with their support bitmask
    let mut pool: Vec<(String, u32)> = nl.primary_inputs.iter().enumerate().map(|(i, n)| (n.clone(), 1 << i)).collect();
    let mut fanout: BTreeMap<String, usize> = BTreeMap::new();
    let gates = rng.gen_range(1..=12);
    for g in 0..gates {
        pool.shuffle(rng);
        let (cell, arity, outs) = CELLS[rng.gen_range(0..CELLS.len())];
        let mut chosen: Vec<usize> = Vec::new();
        let mut support = 0u32;
        for (idx, (_, s)) in pool.iter().enumerate() {
            if chosen.len() == arity {
                break;
            }
            if s & support == 0 {
                chosen.push(idx);
                support |= s;
            }
        }
        if chosen.len() < arity {
            continue;
        }
        let ins: Vec<String> = chosen.iter().map(|&i| pool[i].0.clone()).collect();
        for n in &ins {
            *fanout.entry(n.clone()).or_default() += 1;
        }
        chosen.sort_unstable();
        for &i in chosen.iter().rev() {
            pool.remove(i);
        }
        let out_names: Vec<String> = (0..outs).map(|k| format!("g{g}_{k}")).collect();
        let ins_ref: Vec<&str> = ins.iter().map(String::as_str).collect();
        let outs_ref: Vec<&str> = out_names.iter().map(String::as_str).collect();
        nl.instances.push(Instance::new(&format!("g{g}"), cell, Variant::Conventional, &ins_ref, &outs_ref));
        for n in out_names {
            pool.push((n, support));
        }
    }
    if nl.instances.is_empty() {
        nl.instances.push(Instance::new("g0", "NOT", Variant::Conventional, &["i0"], &["g0_0"]));
    }
    finish(&mut nl, &fanout, rng);
    nl
}

/// Random netlist guaranteed to contain at least one reconvergent pair.
pub fn random_reconvergent(rng: &mut ChaCha8Rng, max_inputs: usize) -> Netlist {
    let inputs = rng.gen_range(1..=max_inputs);
    let gates = rng.gen_range(2..=10);
    let mut nl = random_dag(rng, inputs, gates);
    let src = nl.instances[0].output_nets[0].clone();
    let n = nl.instances.len();
    nl.instances.push(Instance::new(&format!("g{n}"), "NOT", Variant::Conventional, &[&src], &["rc_a"]));
    nl.instances.push(Instance::new(&format!("g{}", n + 1), "NAND", Variant::Conventional, &[&src, "rc_a"], &["rc_y"]));
    nl.primary_outputs.push("rc_y".into());
    nl
}

pub fn random_probabilities(rng: &mut ChaCha8Rng, nl: &Netlist) -> BTreeMap<String, f64> {
    nl.primary_inputs.iter().map(|pi| (pi.clone(), rng.gen_range(0.0..=1.0))).collect()
}

pub fn all_conventional(nl: &Netlist) -> Netlist {
    let mut out = nl.clone();
    for inst in &mut out.instances {
        inst.variant = Variant::Conventional;
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}
