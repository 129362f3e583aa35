//! Static timing, power decomposition, (Vdd, Vth) sweeps and corner analysis.
//!
//! Total power is `switching + short-circuit + leakage`. Switching power of
//! a driven net is `toggle_rate * C * vdd^2 * f` with no 1/2 factor, where `C`
//! is the sum of fanout pin capacitances plus the net's wire load.
//! Short-circuit power is a fixed fraction of switching power. Leakage is
//! `vdd * Ioff` with `Ioff` rescaled from the library value by the device
//! model, so reference-point results reproduce the library exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::activity::ActivityMap;
use crate::device::OperatingPoint;
use crate::error::{AnalysisError, ModelError};
use crate::library::{derate_cell, Conditions, CornerName, CornerSpec, EffectiveCell, LeakageSource, Library, Variant};
use crate::netlist::{Graph, Netlist};

/// Default short-circuit power as a fraction of switching power.
pub const DEFAULT_K_SC: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub arrival_ns: BTreeMap<String, f64>,
    /// Instance ids from a primary input to the slowest primary output.
    pub critical_path: Vec<String>,
    pub critical_delay_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PowerBreakdown {
    pub p_switching_w: f64,
    pub p_short_circuit_w: f64,
    pub p_leakage_w: f64,
    pub p_total_w: f64,
}

impl PowerBreakdown {
    pub fn new(p_switching_w: f64, p_short_circuit_w: f64, p_leakage_w: f64) -> Self {
        PowerBreakdown {
            p_switching_w,
            p_short_circuit_w,
            p_leakage_w,
            p_total_w: p_switching_w + p_short_circuit_w + p_leakage_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    #[serde(flatten)]
    pub total: PowerBreakdown,
    pub per_instance: BTreeMap<String, PowerBreakdown>,
}

pub fn short_circuit_power(p_switching_w: f64, k_sc: f64) -> f64 {
    k_sc * p_switching_w
}

/// A netlist bound to a library at fixed conditions.
///
/// Effective cells are computed once for both variants of every instance so
/// that variant assignments can be re-timed cheaply.
pub struct Analyzer<'a> {
    nl: &'a Netlist,
    lib: &'a Library,
    cond: Conditions,
    graph: Graph,
    eff: Vec<[Option<EffectiveCell>; 2]>,
}

fn slot(v: Variant) -> usize {
    match v {
        Variant::Conventional => 0,
        Variant::Stacked => 1,
    }
}

impl<'a> Analyzer<'a> {
    pub fn new(nl: &'a Netlist, lib: &'a Library, cond: Conditions) -> Result<Self, AnalysisError> {
        let graph = Graph::build(nl).map_err(|ids| AnalysisError::Cycle(ids.join(", ")))?;
        let mut eff = Vec::with_capacity(nl.instances.len());
        let mut cache: BTreeMap<(&str, Variant), Option<EffectiveCell>> = BTreeMap::new();
        for inst in &nl.instances {
            let mut pair: [Option<EffectiveCell>; 2] = [None, None];
            for v in Variant::ALL {
                let key = (inst.cell_name.as_str(), v);
                let derated = match cache.get(&key) {
                    Some(hit) => hit.clone(),
                    None => {
                        let result = lib.cell(&inst.cell_name, v).map(|cell| derate_cell(cell, lib, &cond));
                        let value = match result {
                            Some(Ok(e)) => Some(e),
                            Some(Err(e)) if v == inst.variant => return Err(wrap(&inst.id, e.into())),
                            _ => None,
                        };
                        cache.insert(key, value.clone());
                        value
                    }
                };
                pair[slot(v)] = derated;
            }
            if pair[slot(inst.variant)].is_none() {
                let err = lib.require(&inst.cell_name, inst.variant).err().map(AnalysisError::from).unwrap_or_else(|| {
                    ModelError::Domain(format!("cannot derate {} ({})", inst.cell_name, inst.variant)).into()
                });
                return Err(wrap(&inst.id, err));
            }
            eff.push(pair);
        }
        Ok(Analyzer { nl, lib, cond, graph, eff })
    }

    pub fn conditions(&self) -> &Conditions {
        &self.cond
    }

    pub fn netlist(&self) -> &Netlist {
        self.nl
    }

    pub fn library(&self) -> &Library {
        self.lib
    }

    /// Variants as declared in the netlist.
    pub fn declared_variants(&self) -> Vec<Variant> {
        self.nl.instances.iter().map(|i| i.variant).collect()
    }

    /// Whether instance `i` can be evaluated as `v`.
    pub fn has_variant(&self, i: usize, v: Variant) -> bool {
        self.eff[i][slot(v)].is_some()
    }

    pub fn effective(&self, i: usize, v: Variant) -> Option<&EffectiveCell> {
        self.eff[i][slot(v)].as_ref()
    }

    fn cell(&self, i: usize, variants: &[Variant]) -> &EffectiveCell {
        self.eff[i][slot(variants[i])]
            .as_ref()
            .unwrap_or_else(|| panic!("instance {} has no {} variant", self.nl.instances[i].id, variants[i]))
    }

    fn net_load_ff(&self, net: usize, variants: &[Variant]) -> f64 {
        self.graph.sinks[net]
            .iter()
            .fold(self.graph.wire_load_ff[net], |acc, &(i, pin)| acc + self.cell(i, variants).input_cap_ff[pin])
    }

    /// Capacitance seen by a net: fanout pins plus wire load, fF.
    pub fn load_ff(&self, net: &str, variants: &[Variant]) -> Option<f64> {
        self.graph.net_index.get(net).map(|&n| self.net_load_ff(n, variants))
    }

    /// Delay from any input of instance `i` to its output pin `output`, ns.
    pub fn arc_delay_ns(&self, i: usize, output: usize, variants: &[Variant]) -> f64 {
        let cell = self.cell(i, variants);
        let net = self.graph.inst_outputs[i][output];
        cell.delay_ns[output] + cell.load_coeff_ns_per_ff * self.net_load_ff(net, variants)
    }

    fn arrivals(&self, variants: &[Variant]) -> (Vec<f64>, Vec<usize>) {
        let mut arrival = vec![0.0f64; self.graph.nets.len()];
        let mut critical_input = vec![usize::MAX; self.nl.instances.len()];
        for &i in &self.graph.order {
            let mut worst = f64::NEG_INFINITY;
            for &net in &self.graph.inst_inputs[i] {
                if arrival[net] > worst {
                    worst = arrival[net];
                    critical_input[i] = net;
                }
            }
            for (k, &out) in self.graph.inst_outputs[i].iter().enumerate() {
                arrival[out] = worst + self.arc_delay_ns(i, k, variants);
            }
        }
        (arrival, critical_input)
    }

    /// Worst primary-output arrival for a variant assignment.
    pub fn critical_delay_with(&self, variants: &[Variant]) -> f64 {
        let (arrival, _) = self.arrivals(variants);
        self.graph
            .primary_outputs
            .iter()
            .map(|&n| arrival[n])
            .fold(0.0, f64::max)
    }

    pub fn timing_with(&self, variants: &[Variant]) -> TimingReport {
        let (arrival, critical_input) = self.arrivals(variants);
        let mut worst: Option<usize> = None;
        for &po in &self.graph.primary_outputs {
            if worst.is_none_or(|w| arrival[po] > arrival[w]) {
                worst = Some(po);
            }
        }
        let mut critical_path = Vec::new();
        let mut net = worst;
        while let Some((i, _)) = net.and_then(|n| self.graph.driver[n]) {
            critical_path.push(self.nl.instances[i].id.clone());
            net = Some(critical_input[i]);
        }
        critical_path.reverse();
        TimingReport {
            arrival_ns: self.graph.nets.iter().cloned().zip(arrival.iter().copied()).collect(),
            critical_path,
            critical_delay_ns: worst.map_or(0.0, |w| arrival[w].max(0.0)),
        }
    }

    pub fn timing(&self) -> TimingReport {
        self.timing_with(&self.declared_variants())
    }

    /// Per-instance leakage power, W, in declaration order.
    pub fn leakage_with(&self, variants: &[Variant]) -> Vec<f64> {
        (0..self.nl.instances.len()).map(|i| self.cell(i, variants).leakage_w).collect()
    }

    /// Per-instance switching power, W, in declaration order.
    pub fn switching_with(&self, activity: &ActivityMap, variants: &[Variant]) -> Result<Vec<f64>, AnalysisError> {
        let op = &self.cond.op;
        let scale = 1e-15 * op.vdd * op.vdd * op.frequency;
        (0..self.nl.instances.len())
            .map(|i| {
                let mut p = 0.0;
                for &net in &self.graph.inst_outputs[i] {
                    let name = &self.graph.nets[net];
                    let a = activity
                        .get(name)
                        .ok_or_else(|| AnalysisError::MissingActivity(name.clone()))?;
                    p += a.toggle_rate * self.net_load_ff(net, variants) * scale;
                }
                Ok(p)
            })
            .collect()
    }

    pub fn power_with(&self, activity: &ActivityMap, k_sc: f64, variants: &[Variant]) -> Result<PowerReport, AnalysisError> {
        let sw = self.switching_with(activity, variants)?;
        let leak = self.leakage_with(variants);
        let mut per_instance = BTreeMap::new();
        let (mut t_sw, mut t_sc, mut t_leak) = (0.0, 0.0, 0.0);
        for (i, inst) in self.nl.instances.iter().enumerate() {
            let sc = short_circuit_power(sw[i], k_sc);
            t_sw += sw[i];
            t_sc += sc;
            t_leak += leak[i];
            per_instance.insert(inst.id.clone(), PowerBreakdown::new(sw[i], sc, leak[i]));
        }
        Ok(PowerReport {
            total: PowerBreakdown::new(t_sw, t_sc, t_leak),
            per_instance,
        })
    }

    pub fn power(&self, activity: &ActivityMap, k_sc: f64) -> Result<PowerReport, AnalysisError> {
        self.power_with(activity, k_sc, &self.declared_variants())
    }

    pub fn area_um2_with(&self, variants: &[Variant]) -> f64 {
        self.nl
            .instances
            .iter()
            .zip(variants)
            .filter_map(|(inst, &v)| self.lib.cell(&inst.cell_name, v))
            .map(|c| c.area_um2)
            .sum()
    }
}

fn wrap(instance: &str, source: AnalysisError) -> AnalysisError {
    AnalysisError::Instance {
        instance: instance.to_string(),
        source: Box::new(source),
    }
}

pub fn static_timing(nl: &Netlist, lib: &Library, cond: &Conditions) -> Result<TimingReport, AnalysisError> {
    Ok(Analyzer::new(nl, lib, *cond)?.timing())
}

/// Total and per-instance switching power, W.
pub fn dynamic_power(
    nl: &Netlist,
    lib: &Library,
    activity: &ActivityMap,
    cond: &Conditions,
) -> Result<(f64, BTreeMap<String, f64>), AnalysisError> {
    let a = Analyzer::new(nl, lib, *cond)?;
    let per = a.switching_with(activity, &a.declared_variants())?;
    Ok((per.iter().sum(), ids(nl).zip(per).collect()))
}

/// Total and per-instance leakage power, W.
pub fn leakage_power(nl: &Netlist, lib: &Library, cond: &Conditions) -> Result<(f64, BTreeMap<String, f64>), AnalysisError> {
    let a = Analyzer::new(nl, lib, *cond)?;
    let per = a.leakage_with(&a.declared_variants());
    Ok((per.iter().sum(), ids(nl).zip(per).collect()))
}

fn ids(nl: &Netlist) -> impl Iterator<Item = String> + '_ {
    nl.instances.iter().map(|i| i.id.clone())
}

pub fn total_power(
    nl: &Netlist,
    lib: &Library,
    activity: &ActivityMap,
    cond: &Conditions,
    k_sc: f64,
) -> Result<PowerReport, AnalysisError> {
    Analyzer::new(nl, lib, *cond)?.power(activity, k_sc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub vdd: f64,
    pub vth: f64,
    pub feasible: bool,
    pub power: Option<PowerReport>,
    pub timing: Option<TimingReport>,
}

/// Evaluates every (vdd, vth) pair; vdd is the outer loop.
///
/// `vth` replaces the library's nominal threshold before the corner shift.
/// Pairs where vdd does not exceed the shifted threshold are marked
/// infeasible instead of failing the sweep.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    nl: &Netlist,
    lib: &Library,
    activity: &ActivityMap,
    base: &OperatingPoint,
    vdd_grid: &[f64],
    vth_grid: &[f64],
    corner: CornerSpec,
    leakage_source: LeakageSource,
    k_sc: f64,
) -> Result<Vec<SweepPoint>, AnalysisError> {
    if vdd_grid.is_empty() || vth_grid.is_empty() {
        return Err(ModelError::Domain("sweep grids must be non-empty".into()).into());
    }
    let grid: Vec<(f64, f64)> = vdd_grid
        .iter()
        .flat_map(|&vdd| vth_grid.iter().map(move |&vth| (vdd, vth)))
        .collect();
    grid.par_iter()
        .map(|&(vdd, vth)| {
            let cond = Conditions {
                op: OperatingPoint { vdd, ..*base },
                corner,
                vth0: Some(vth),
                leakage_source,
            };
            let infeasible = SweepPoint { vdd, vth, feasible: false, power: None, timing: None };
            if !(vdd > cond.effective_vth(lib)) {
                return Ok(infeasible);
            }
            let analyzer = Analyzer::new(nl, lib, cond)?;
            Ok(SweepPoint {
                vdd,
                vth,
                feasible: true,
                power: Some(analyzer.power(activity, k_sc)?),
                timing: Some(analyzer.timing()),
            })
        })
        .collect()
}

/// Power and timing at every library corner, in TT, FF, SS, FS, SF order.
pub fn corner_analysis(
    nl: &Netlist,
    lib: &Library,
    activity: &ActivityMap,
    op: &OperatingPoint,
    leakage_source: LeakageSource,
    k_sc: f64,
) -> Result<Vec<(CornerName, PowerReport, TimingReport)>, AnalysisError> {
    CornerName::ALL
        .iter()
        .map(|&name| {
            let cond = Conditions {
                op: *op,
                corner: lib.corner(name),
                vth0: None,
                leakage_source,
            };
            let a = Analyzer::new(nl, lib, cond)?;
            Ok((name, a.power(activity, k_sc)?, a.timing()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::{propagate_probabilities, with_default_probabilities, NetActivity};
    use crate::library::builtin_reference_library;
    use crate::netlist::parse_netlist;

    fn table_ref(lib: &Library) -> Conditions {
        Conditions { leakage_source: LeakageSource::Table, ..Conditions::reference(lib) }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn single_not_reference() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate g1 NOT a -> y\n", &lib).unwrap();
        let t = static_timing(&nl, &lib, &table_ref(&lib)).unwrap();
        assert_eq!(t.critical_delay_ns, 30.327);
        assert_eq!(t.critical_path, vec!["g1"]);
        let (leak, _) = leakage_power(&nl, &lib, &table_ref(&lib)).unwrap();
        assert!(rel(leak, 3.98e-9) < 1e-12);

        let stacked = parse_netlist("input a\noutput y\ngate g1 NOT:stacked a -> y\n", &lib).unwrap();
        let (leak, _) = leakage_power(&stacked, &lib, &table_ref(&lib)).unwrap();
        assert!(rel(leak, 5.75e-9) < 1e-12);
    }

    #[test]
    fn not_chain_includes_load_term() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate g1 NOT a -> m\ngate g2 NOT m -> y\n", &lib).unwrap();
        let t = static_timing(&nl, &lib, &table_ref(&lib)).unwrap();
        // coeff = |30.327 - 29.873| / 10 fF, load = NOT input cap 1.32 fF
        let expected = 30.327 + 0.0454 * 1.32 + 30.327;
        assert!((t.critical_delay_ns - expected).abs() < 1e-9);
        assert_eq!(t.critical_path, vec!["g1", "g2"]);
    }

    #[test]
    fn wire_through_netlist_has_zero_delay() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput a\n", &lib).unwrap();
        let t = static_timing(&nl, &lib, &table_ref(&lib)).unwrap();
        assert_eq!(t.critical_delay_ns, 0.0);
        assert!(t.critical_path.is_empty());
    }

    #[test]
    fn full_adder_per_output_delays() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a b c\noutput s co\ngate fa FULLADDER a b c -> s co\n", &lib).unwrap();
        let t = static_timing(&nl, &lib, &table_ref(&lib)).unwrap();
        assert_eq!(t.arrival_ns["s"], 30.456);
        assert_eq!(t.arrival_ns["co"], 30.768);
        assert_eq!(t.critical_delay_ns, 30.768);
    }

    #[test]
    fn dynamic_power_hand_value() {
        let lib = builtin_reference_library();
        // NAND output drives nothing but a 10 fF wire
        let nl = parse_netlist("input a b\noutput y\nload y 10\ngate g NAND a b -> y\n", &lib).unwrap();
        let act = propagate_probabilities(&nl, &lib, &with_default_probabilities(&nl, &BTreeMap::new())).unwrap();
        let (p, _) = dynamic_power(&nl, &lib, &act, &table_ref(&lib)).unwrap();
        assert!(rel(p, 540e-9) < 1e-12);

        let mut doubled = table_ref(&lib);
        doubled.op.vdd = 2.4;
        let (p2, _) = dynamic_power(&nl, &lib, &act, &doubled).unwrap();
        assert!(rel(p2 / p, 4.0) < 1e-12);

        let zero: ActivityMap = act.keys().map(|k| (k.clone(), NetActivity { p_one: 0.0, toggle_rate: 0.0 })).collect();
        assert_eq!(dynamic_power(&nl, &lib, &zero, &table_ref(&lib)).unwrap().0, 0.0);
        assert!(matches!(
            dynamic_power(&nl, &lib, &ActivityMap::new(), &table_ref(&lib)),
            Err(AnalysisError::MissingActivity(_))
        ));
    }

    #[test]
    fn short_circuit_fraction() {
        assert!(rel(short_circuit_power(540e-9, DEFAULT_K_SC), 54e-9) < 1e-12);
        assert_eq!(short_circuit_power(540e-9, 0.0), 0.0);
        assert!(rel(short_circuit_power(100e-9, 0.2), 20e-9) < 1e-12);
    }

    #[test]
    fn decomposition_and_standby() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\nload y 4\ngate g NOT a -> y\n", &lib).unwrap();
        let act = propagate_probabilities(&nl, &lib, &with_default_probabilities(&nl, &BTreeMap::new())).unwrap();
        let r = total_power(&nl, &lib, &act, &table_ref(&lib), DEFAULT_K_SC).unwrap();
        let sw = 0.5 * 4e-15 * 1.44 * 1e8;
        assert!(rel(r.total.p_switching_w, sw) < 1e-12);
        assert!(rel(r.total.p_short_circuit_w, 0.1 * sw) < 1e-12);
        assert!(rel(r.total.p_leakage_w, 3.98e-9) < 1e-12);
        assert_eq!(r.total.p_total_w, r.total.p_switching_w + r.total.p_short_circuit_w + r.total.p_leakage_w);

        let idle: ActivityMap = act.keys().map(|k| (k.clone(), NetActivity { p_one: 1.0, toggle_rate: 0.0 })).collect();
        let r = total_power(&nl, &lib, &idle, &table_ref(&lib), DEFAULT_K_SC).unwrap();
        assert_eq!(r.total.p_total_w, r.total.p_leakage_w);
    }

    #[test]
    fn derating_error_names_instance() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate inv NOT a -> y\n", &lib).unwrap();
        let mut cond = table_ref(&lib);
        cond.op.vdd = 0.3;
        match static_timing(&nl, &lib, &cond) {
            Err(AnalysisError::Instance { instance, .. }) => assert_eq!(instance, "inv"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_point_sweep_matches_direct_calls() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a b c\noutput s co\ngate fa FULLADDER a b c -> s co\n", &lib).unwrap();
        let act = propagate_probabilities(&nl, &lib, &with_default_probabilities(&nl, &BTreeMap::new())).unwrap();
        let cond = Conditions::reference(&lib);
        let pts = sweep(&nl, &lib, &act, &cond.op, &[1.2], &[0.4], CornerSpec::TYPICAL, LeakageSource::Model, DEFAULT_K_SC).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].power.as_ref().unwrap(), &total_power(&nl, &lib, &act, &cond, DEFAULT_K_SC).unwrap());
        assert_eq!(pts[0].timing.as_ref().unwrap(), &static_timing(&nl, &lib, &cond).unwrap());
        assert!(sweep(&nl, &lib, &act, &cond.op, &[], &[0.4], CornerSpec::TYPICAL, LeakageSource::Model, 0.1).is_err());
    }

    #[test]
    fn sweep_marks_infeasible_points() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a\noutput y\ngate g NOT a -> y\n", &lib).unwrap();
        let act = propagate_probabilities(&nl, &lib, &with_default_probabilities(&nl, &BTreeMap::new())).unwrap();
        let pts = sweep(&nl, &lib, &act, lib.ref_point(), &[0.3, 1.0], &[0.2, 0.5], CornerSpec::TYPICAL, LeakageSource::Model, 0.1).unwrap();
        let flags: Vec<bool> = pts.iter().map(|p| p.feasible).collect();
        assert_eq!(flags, vec![true, false, true, true]);
    }

    #[test]
    fn corner_rows() {
        let lib = builtin_reference_library();
        let nl = parse_netlist("input a b\noutput y\ngate g NAND a b -> y\n", &lib).unwrap();
        let act = propagate_probabilities(&nl, &lib, &with_default_probabilities(&nl, &BTreeMap::new())).unwrap();
        let rows = corner_analysis(&nl, &lib, &act, lib.ref_point(), LeakageSource::Model, 0.1).unwrap();
        let names: Vec<_> = rows.iter().map(|r| r.0).collect();
        assert_eq!(names, CornerName::ALL.to_vec());
        let cond = Conditions::reference(&lib);
        assert_eq!(rows[0].1, total_power(&nl, &lib, &act, &cond, 0.1).unwrap());
        assert_eq!(rows[0].2, static_timing(&nl, &lib, &cond).unwrap());
    }
}
