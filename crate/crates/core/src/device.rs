//! Analytical MOSFET models: subthreshold leakage with DIBL, the two-high
//! stack effect, and alpha-power-law delay derating.
//!
//! Every function here is pure. Currents are in amperes, voltages in volts.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602177e-19;

const BISECTION_REL_TOL: f64 = 1e-6;
const BISECTION_MAX_ITER: usize = 200;

/// Calibrated device parameters for one process node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyModel {
    pub node_name: String,
    /// Zero-bias threshold voltage, V.
    pub vth0: f64,
    /// Subthreshold slope factor.
    pub n_slope: f64,
    /// Leakage pre-factor, A.
    pub i0: f64,
    pub w_over_l: f64,
    /// DIBL coefficient, V/V.
    pub eta_dibl: f64,
    /// Velocity-saturation exponent of the alpha-power law.
    pub alpha_sat: f64,
    /// Gate-oxide thickness. Informational only.
    pub tox_nm: f64,
    pub temperature_k: f64,
}

impl TechnologyModel {
    /// Reference 130 nm model with `i0` left at 1 A; callers calibrate it.
    pub fn uncalibrated(node_name: &str) -> Self {
        Self {
            node_name: node_name.to_string(),
            vth0: 0.4,
            n_slope: 1.5,
            i0: 1.0,
            w_over_l: 1.0,
            eta_dibl: 0.08,
            alpha_sat: 1.3,
            tox_nm: 2.2,
            temperature_k: 300.0,
        }
    }

    /// Returns the list of violated invariants, empty when the model is valid.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        // written as negated comparisons so NaN fails every check
        if !(self.vth0 > 0.0) {
            out.push("vth0 > 0");
        }
        if !(self.n_slope >= 1.0) {
            out.push("n_slope >= 1");
        }
        if !(self.i0 > 0.0) {
            out.push("i0 > 0");
        }
        if !(self.w_over_l > 0.0) {
            out.push("w_over_l > 0");
        }
        if !(self.eta_dibl >= 0.0 && self.eta_dibl < 1.0) {
            out.push("0 <= eta_dibl < 1");
        }
        if !(self.alpha_sat >= 1.0 && self.alpha_sat <= 2.0) {
            out.push("1 <= alpha_sat <= 2");
        }
        if !(self.temperature_k > 0.0) {
            out.push("temperature_k > 0");
        }
        out
    }

    pub fn with_vth0(&self, vth0: f64) -> Self {
        Self { vth0, ..self.clone() }
    }

    pub fn with_temperature(&self, temperature_k: f64) -> Self {
        Self {
            temperature_k,
            ..self.clone()
        }
    }
}

/// Supply voltage, clock frequency and junction temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub vdd: f64,
    pub frequency: f64,
    pub temperature_k: f64,
}

impl OperatingPoint {
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.vdd > 0.0) {
            out.push("vdd > 0");
        }
        if !(self.frequency > 0.0) {
            out.push("frequency > 0");
        }
        if !(self.temperature_k > 0.0) {
            out.push("temperature_k > 0");
        }
        out
    }
}

/// kT/q in volts.
pub fn thermal_voltage(temperature_k: f64) -> Result<f64, ModelError> {
    if !(temperature_k > 0.0) {
        return Err(ModelError::Domain(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    Ok(BOLTZMANN * temperature_k / ELEMENTARY_CHARGE)
}

/// Subthreshold drain current of one device.
///
/// `I = i0 * W/L * exp((vgs - vth_eff) / (n vT)) * (1 - exp(-vds / vT))` with
/// `vth_eff = vth0 - eta_dibl * vds`. Underflow to zero is not an error.
pub fn subthreshold_current(model: &TechnologyModel, vgs: f64, vds: f64) -> Result<f64, ModelError> {
    if !(vds >= 0.0) {
        return Err(ModelError::Domain(format!(
            "vds must be non-negative, got {vds} V"
        )));
    }
    let vt = thermal_voltage(model.temperature_k)?;
    Ok(subthreshold_unchecked(model, vt, vgs, vds))
}

fn subthreshold_unchecked(model: &TechnologyModel, vt: f64, vgs: f64, vds: f64) -> f64 {
    let vth_eff = model.vth0 - model.eta_dibl * vds;
    model.i0
        * model.w_over_l
        * ((vgs - vth_eff) / (model.n_slope * vt)).exp()
        * (-(-vds / vt).exp_m1())
}

/// Internal node voltage of a two-high off NMOS stack (both gates at 0 V).
///
/// Bisects on the current-equality condition between the top device
/// (`vgs = -vx`, `vds = vdd - vx`) and the bottom device (`vgs = 0`, `vds = vx`).
pub fn stack_intermediate_voltage(model: &TechnologyModel, vdd: f64) -> Result<f64, ModelError> {
    if !(vdd > 0.0) {
        return Err(ModelError::Domain(format!("vdd must be positive, got {vdd} V")));
    }
    let vt = thermal_voltage(model.temperature_k)?;
    let top = |vx: f64| subthreshold_unchecked(model, vt, -vx, vdd - vx);
    let bottom = |vx: f64| subthreshold_unchecked(model, vt, 0.0, vx);

    // top - bottom is positive at vx = 0 and negative at vx = vdd
    let (mut lo, mut hi) = (0.0_f64, vdd);
    if !(top(lo) - bottom(lo) > 0.0 && top(hi) - bottom(hi) < 0.0) {
        return Err(ModelError::Numeric(
            "stack node voltage is not bracketed by (0, vdd)".into(),
        ));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let (it, ib) = (top(mid), bottom(mid));
        if ib > 0.0 && ((it - ib) / ib).abs() <= BISECTION_REL_TOL {
            break;
        }
        if it > ib {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Off-state leakage of an NMOS pull-down of the given depth, with the stack
/// factor relative to a single device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackLeakage {
    pub current: f64,
    pub stack_factor: f64,
    /// Internal node voltage; `None` for a single device.
    pub node_voltage: Option<f64>,
}

pub fn stack_leakage(model: &TechnologyModel, vdd: f64, depth: u32) -> Result<StackLeakage, ModelError> {
    if !(vdd > 0.0) {
        return Err(ModelError::Domain(format!("vdd must be positive, got {vdd} V")));
    }
    let single = subthreshold_current(model, 0.0, vdd)?;
    match depth {
        1 => Ok(StackLeakage {
            current: single,
            stack_factor: 1.0,
            node_voltage: None,
        }),
        2 => {
            let vx = stack_intermediate_voltage(model, vdd)?;
            let current = subthreshold_current(model, 0.0, vx)?;
            Ok(StackLeakage {
                current,
                stack_factor: single / current,
                node_voltage: Some(vx),
            })
        }
        _ => Err(ModelError::Domain(format!(
            "unsupported stack depth {depth}; only 1 and 2 are modeled"
        ))),
    }
}

/// Alpha-power-law delay figure `vdd / (vdd - vth)^alpha`, in arbitrary units.
pub fn alpha_power_delay(vdd: f64, vth: f64, alpha_sat: f64) -> Result<f64, ModelError> {
    if !(vdd > vth) {
        return Err(ModelError::Domain(format!(
            "circuit does not meet subthreshold operation assumptions: vdd {vdd} V <= vth {vth} V"
        )));
    }
    Ok(vdd / (vdd - vth).powf(alpha_sat))
}

/// Ratio of gate delay at `op` to gate delay at `ref_op`.
pub fn delay_scale_factor(
    model: &TechnologyModel,
    op: &OperatingPoint,
    ref_op: &OperatingPoint,
) -> Result<f64, ModelError> {
    let num = alpha_power_delay(op.vdd, model.vth0, model.alpha_sat)?;
    let den = alpha_power_delay(ref_op.vdd, model.vth0, model.alpha_sat)?;
    Ok(num / den)
}

/// Pre-factor that makes `vdd * I(vgs = 0, vds = vdd)` equal the target power.
pub fn calibrate_i0(model: &TechnologyModel, target_leakage_w: f64, vdd: f64) -> Result<f64, ModelError> {
    if !(target_leakage_w > 0.0) {
        return Err(ModelError::Domain(format!(
            "target leakage must be positive, got {target_leakage_w} W"
        )));
    }
    if !(vdd > 0.0) {
        return Err(ModelError::Domain(format!("vdd must be positive, got {vdd} V")));
    }
    let unit = TechnologyModel { i0: 1.0, ..model.clone() };
    let per_amp = vdd * subthreshold_current(&unit, 0.0, vdd)?;
    Ok(target_leakage_w / per_amp)
}
