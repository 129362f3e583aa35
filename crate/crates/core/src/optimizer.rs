//! Delay-constrained leakage minimization by choosing a stacked or
//! conventional variant per instance.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::Analyzer;
use crate::error::{AnalysisError, ModelError};
use crate::library::{Conditions, Library, Variant};
use crate::netlist::Netlist;

/// Floor on the delay increase of a candidate flip, ns.
pub const DELAY_EPSILON_NS: f64 = 1e-6;
/// Largest instance count accepted by [`brute_force_optimize`].
pub const MAX_BRUTE_FORCE_INSTANCES: usize = 16;

pub type Assignment = BTreeMap<String, Variant>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub assignment: Assignment,
    pub leakage_w: f64,
    pub critical_delay_ns: f64,
    pub moves_accepted: usize,
    pub feasible: bool,
}

fn check_variants(nl: &Netlist, lib: &Library) -> Result<(), AnalysisError> {
    for inst in &nl.instances {
        for v in Variant::ALL {
            lib.require(&inst.cell_name, v)?;
        }
    }
    Ok(())
}

fn result(analyzer: &Analyzer<'_>, variants: &[Variant], moves: usize, feasible: bool) -> OptimizeResult {
    let nl = analyzer.netlist();
    OptimizeResult {
        assignment: nl.instances.iter().map(|i| i.id.clone()).zip(variants.iter().copied()).collect(),
        leakage_w: analyzer.leakage_with(variants).iter().sum(),
        critical_delay_ns: analyzer.critical_delay_with(variants),
        moves_accepted: moves,
        feasible,
    }
}

fn check_budget(delay_budget_ns: f64) -> Result<(), AnalysisError> {
    if !(delay_budget_ns > 0.0) {
        return Err(ModelError::Domain(format!("delay budget must be positive, got {delay_budget_ns} ns")).into());
    }
    Ok(())
}

/// Greedy descent from the all-conventional assignment.
///
/// Each round flips the conventional instance with the best ratio of leakage
/// saved to critical-delay increase (floored at [`DELAY_EPSILON_NS`]) among
/// flips that keep the critical delay within budget. Ties go to the lowest
/// declaration index. Stops when no flip saves leakage within budget.
pub fn optimize_leakage(
    nl: &Netlist,
    lib: &Library,
    cond: &Conditions,
    delay_budget_ns: f64,
) -> Result<OptimizeResult, AnalysisError> {
    check_budget(delay_budget_ns)?;
    check_variants(nl, lib)?;
    let analyzer = Analyzer::new(nl, lib, *cond)?;
    let n = nl.instances.len();
    let mut variants = vec![Variant::Conventional; n];
    let mut delay = analyzer.critical_delay_with(&variants);
    if delay > delay_budget_ns {
        return Ok(result(&analyzer, &variants, 0, false));
    }
    let leak_conv = analyzer.leakage_with(&vec![Variant::Conventional; n]);
    let leak_stacked = analyzer.leakage_with(&vec![Variant::Stacked; n]);

    let mut moves = 0;
    loop {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..n {
            if variants[i] == Variant::Stacked {
                continue;
            }
            let saved = leak_conv[i] - leak_stacked[i];
            if !(saved > 0.0) {
                continue;
            }
            variants[i] = Variant::Stacked;
            let candidate = analyzer.critical_delay_with(&variants);
            variants[i] = Variant::Conventional;
            if candidate > delay_budget_ns {
                continue;
            }
            let ratio = saved / (candidate - delay).max(DELAY_EPSILON_NS);
            if best.is_none_or(|(_, r, _)| ratio > r) {
                best = Some((i, ratio, candidate));
            }
        }
        match best {
            Some((i, _, candidate)) => {
                variants[i] = Variant::Stacked;
                delay = candidate;
                moves += 1;
            }
            None => break,
        }
    }
    Ok(result(&analyzer, &variants, moves, true))
}

/// Exact optimum over all 2^n assignments.
///
/// Assignments are visited in lexicographic order (conventional before
/// stacked, first instance most significant) and only a strictly lower
/// leakage replaces the incumbent.
pub fn brute_force_optimize(
    nl: &Netlist,
    lib: &Library,
    cond: &Conditions,
    delay_budget_ns: f64,
) -> Result<OptimizeResult, AnalysisError> {
    let n = nl.instances.len();
    if n > MAX_BRUTE_FORCE_INSTANCES {
        return Err(ModelError::Capacity {
            what: format!("{n} instances"),
            limit: MAX_BRUTE_FORCE_INSTANCES,
        }
        .into());
    }
    check_budget(delay_budget_ns)?;
    check_variants(nl, lib)?;
    let analyzer = Analyzer::new(nl, lib, *cond)?;
    let conv = analyzer.leakage_with(&vec![Variant::Conventional; n]);
    let stacked = analyzer.leakage_with(&vec![Variant::Stacked; n]);

    let mut best: Option<(f64, Vec<Variant>)> = None;
    let mut variants = vec![Variant::Conventional; n];
    for mask in 0u32..(1u32 << n) {
        let mut leakage = 0.0;
        for (i, v) in variants.iter_mut().enumerate() {
            let stacked_here = (mask >> (n - 1 - i)) & 1 == 1;
            *v = if stacked_here { Variant::Stacked } else { Variant::Conventional };
            leakage += if stacked_here { stacked[i] } else { conv[i] };
        }
        if best.as_ref().is_some_and(|(b, _)| leakage >= *b) {
            continue;
        }
        if analyzer.critical_delay_with(&variants) <= delay_budget_ns {
            best = Some((leakage, variants.clone()));
        }
    }
    Ok(match best {
        Some((_, v)) => {
            let moves = v.iter().filter(|&&x| x == Variant::Stacked).count();
            result(&analyzer, &v, moves, true)
        }
        None => result(&analyzer, &vec![Variant::Conventional; n], 0, false),
    })
}

/// `assign <instance_id> <variant>` lines in declaration order.
pub fn format_assignment(nl: &Netlist, assignment: &Assignment) -> String {
    let mut out = String::new();
    for inst in &nl.instances {
        if let Some(v) = assignment.get(&inst.id) {
            let _ = writeln!(out, "assign {} {}", inst.id, v);
        }
    }
    out
}

pub fn parse_assignment(text: &str) -> Result<Assignment, String> {
    let mut out = Assignment::new();
    for (idx, raw) in text.lines().enumerate() {
        match crate::netlist::tokens(raw).as_slice() {
            [] => {}
            ["assign", id, variant] => {
                let v = variant.parse::<Variant>().map_err(|e| format!("line {}: {e}", idx + 1))?;
                out.insert(id.to_string(), v);
            }
            _ => return Err(format!("line {}: expected 'assign <instance_id> <variant>'", idx + 1)),
        }
    }
    Ok(out)
}

/// Returns a copy of `nl` with variants replaced per `assignment`.
pub fn apply_assignment(nl: &Netlist, assignment: &Assignment) -> Result<Netlist, String> {
    let mut out = nl.clone();
    for id in assignment.keys() {
        if !nl.instances.iter().any(|i| &i.id == id) {
            return Err(format!("assignment names unknown instance {id}"));
        }
    }
    for inst in &mut out.instances {
        if let Some(&v) = assignment.get(&inst.id) {
            inst.variant = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{builtin_reference_library, LeakageSource};
    use crate::netlist::parse_netlist;

    const ADDER: &str = "input a b c d\noutput s co y\n\
        gate fa FULLADDER a b c -> s t\n\
        gate n1 NAND t d -> u\n\
        gate inv NOT u -> co\n\
        gate m MUX1 a b d -> y\n";

    #[test]
    fn unconstrained_model_mode_stacks_everything() {
        let lib = builtin_reference_library();
        let nl = parse_netlist(ADDER, &lib).unwrap();
        let cond = Conditions::reference(&lib);
        let r = optimize_leakage(&nl, &lib, &cond, f64::INFINITY).unwrap();
        assert!(r.feasible);
        assert!(r.assignment.values().all(|&v| v == Variant::Stacked));
        assert_eq!(r.moves_accepted, 4);
    }

    #[test]
    fn tight_budget_keeps_conventional() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate g1 NOT a -> m\ngate g2 NOT m -> y\n", &lib).unwrap();
        let cond = Conditions::reference(&lib);
        let base = Analyzer::new(&nl, &lib, cond).unwrap().critical_delay_with(&[Variant::Conventional; 2]);
        let r = optimize_leakage(&nl, &lib, &cond, base).unwrap();
        assert!(r.feasible);
        assert_eq!(r.moves_accepted, 0);
        assert!(r.assignment.values().all(|&v| v == Variant::Conventional));

        let r = optimize_leakage(&nl, &lib, &cond, base * 0.5).unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn table_mode_never_stacks() {
        let lib = builtin_reference_library();
        let nl = parse_netlist(ADDER, &lib).unwrap();
        let cond = Conditions { leakage_source: LeakageSource::Table, ..Conditions::reference(&lib) };
        let r = optimize_leakage(&nl, &lib, &cond, 1e6).unwrap();
        assert!(r.assignment.values().all(|&v| v == Variant::Conventional));
    }

    #[test]
    fn single_gate_brute_force() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate g NOT a -> y\n", &lib).unwrap();
        let cond = Conditions::reference(&lib);
        let loose = brute_force_optimize(&nl, &lib, &cond, 100.0).unwrap();
        assert_eq!(loose.assignment["g"], Variant::Stacked);
        let tight = brute_force_optimize(&nl, &lib, &cond, 31.0).unwrap();
        assert_eq!(tight.assignment["g"], Variant::Conventional);
        assert_eq!(tight, optimize_leakage(&nl, &lib, &cond, 31.0).unwrap());
    }

    #[test]
    fn brute_force_capacity() {
        let lib = builtin_reference_library();
        let chain = |n: usize| {
            let mut text = String::from("input n0\n");
            text.push_str(&format!("output n{n}\n"));
            for i in 0..n {
                text.push_str(&format!("gate g{i} NOT n{i} -> n{}\n", i + 1));
            }
            parse_netlist(&text, &lib).unwrap()
        };
        let cond = Conditions::reference(&lib);
        assert!(brute_force_optimize(&chain(16), &lib, &cond, 1e4).is_ok());
        assert!(matches!(
            brute_force_optimize(&chain(17), &lib, &cond, 1e4),
            Err(AnalysisError::Model(ModelError::Capacity { limit: 16, .. }))
        ));
    }

    #[test]
    fn assignment_text_round_trip() {
        let lib = builtin_reference_library();
        let nl = parse_netlist(ADDER, &lib).unwrap();
        let r = optimize_leakage(&nl, &lib, &Conditions::reference(&lib), 1e6).unwrap();
        let text = format_assignment(&nl, &r.assignment);
        assert!(text.starts_with("assign fa stacked\n"));
        assert_eq!(parse_assignment(&text).unwrap(), r.assignment);
        let applied = apply_assignment(&nl, &r.assignment).unwrap();
        assert!(applied.instances.iter().all(|i| i.variant == Variant::Stacked));
        assert!(parse_assignment("assign x fancy\n").is_err());
        assert!(apply_assignment(&nl, &Assignment::from([("zz".to_string(), Variant::Stacked)])).is_err());
    }
}
