//! Cell library data model, file format and operating-point derating.
//!
//! The built-in library carries measured values for four cells (NOT, NAND,
//! FULLADDER, MUX1) in a conventional and a stacked variant. Conventional
//! cells also keep the loaded-output measurement as [`LoadRecord`] metadata.
//!
//! The measured "Delay (50%)" figures are around 30 ns, which is large for a
//! 130 nm cell and most likely includes stimulus offset. They are kept as
//! measured. The stacked-variant leakage values are higher than the
//! conventional ones; [`LeakageSource::Model`] instead predicts stacked
//! leakage from the device stack model, which lowers it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::device::{
    alpha_power_delay, calibrate_i0, stack_leakage, subthreshold_current, OperatingPoint,
    TechnologyModel,
};
use crate::error::{LibraryError, ModelError};
use crate::logic::Expr;

/// Largest cell input count; truth tables are enumerated.
pub const MAX_CELL_INPUTS: usize = 16;

/// Nominal output load behind the loaded-output measurement, fF.
pub const NOMINAL_LOAD_FF: f64 = 10.0;
/// Default input pin capacitance per unit cell area, fF/um^2.
pub const CAP_PER_AREA_FF: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Conventional,
    Stacked,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Conventional, Variant::Stacked];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Conventional => "conventional",
            Variant::Stacked => "stacked",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(Variant::Conventional),
            "stacked" => Ok(Variant::Stacked),
            other => Err(format!("unknown variant '{other}'")),
        }
    }
}

/// Measurement of a cell under the nominal output load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRecord {
    pub area_um2: f64,
    pub intrinsic_delay_ns: BTreeMap<String, f64>,
    pub leakage_nw: f64,
    pub dynamic_pw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub name: String,
    pub variant: Variant,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Output pin to boolean expression over the input pins.
    pub functions: BTreeMap<String, String>,
    pub area_um2: f64,
    pub input_cap_ff: BTreeMap<String, f64>,
    /// 50% propagation delay per output pin at the reference point.
    pub intrinsic_delay_ns: BTreeMap<String, f64>,
    pub load_coeff_ns_per_ff: f64,
    /// Leakage power at the reference point.
    pub leakage_nw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_dynamic_pw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_analysis: Option<LoadRecord>,
}

impl Cell {
    fn label(&self) -> String {
        format!("{} ({})", self.name, self.variant)
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |rule: String| out.push(format!("cell {}: {rule}", self.label()));

        if !(self.area_um2 > 0.0) {
            bad("area_um2 > 0".into());
        }
        if !(self.leakage_nw >= 0.0) {
            bad("leakage_nw >= 0".into());
        }
        if !(self.load_coeff_ns_per_ff >= 0.0) {
            bad("load_coeff_ns_per_ff >= 0".into());
        }
        if self.inputs.is_empty() || self.inputs.len() > MAX_CELL_INPUTS {
            bad(format!("input count in 1..={MAX_CELL_INPUTS}"));
        }
        if self.outputs.is_empty() {
            bad("at least one output pin".into());
        }
        let mut seen = BTreeSet::new();
        for pin in self.inputs.iter().chain(&self.outputs) {
            if !seen.insert(pin) {
                bad(format!("pin name '{pin}' is unique"));
            }
        }
        for pin in &self.inputs {
            match self.input_cap_ff.get(pin) {
                None => bad(format!("input_cap_ff has an entry for input '{pin}'")),
                Some(c) if !(*c >= 0.0) => bad(format!("input_cap_ff[{pin}] >= 0")),
                _ => {}
            }
        }
        for pin in self.input_cap_ff.keys() {
            if !self.inputs.contains(pin) {
                bad(format!("input_cap_ff key '{pin}' is a declared input"));
            }
        }
        for pin in &self.outputs {
            match self.intrinsic_delay_ns.get(pin) {
                None => bad(format!("intrinsic_delay_ns has an entry for output '{pin}'")),
                Some(d) if !(*d > 0.0) => bad(format!("intrinsic_delay_ns[{pin}] > 0")),
                _ => {}
            }
            match self.functions.get(pin) {
                None => bad(format!("output '{pin}' has a function")),
                Some(f) => {
                    if let Err(e) = Expr::parse(f, &self.inputs) {
                        bad(format!("function for '{pin}' is valid over input pins: {e}"));
                    }
                }
            }
        }
        for pin in self.intrinsic_delay_ns.keys() {
            if !self.outputs.contains(pin) {
                bad(format!("intrinsic_delay_ns key '{pin}' is a declared output"));
            }
        }
        for pin in self.functions.keys() {
            if !self.outputs.contains(pin) {
                bad(format!("function key '{pin}' is a declared output"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CornerName {
    TT,
    FF,
    SS,
    FS,
    SF,
}

impl CornerName {
    pub const ALL: [CornerName; 5] = [
        CornerName::TT,
        CornerName::FF,
        CornerName::SS,
        CornerName::FS,
        CornerName::SF,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CornerName::TT => "TT",
            CornerName::FF => "FF",
            CornerName::SS => "SS",
            CornerName::FS => "FS",
            CornerName::SF => "SF",
        }
    }
}

impl fmt::Display for CornerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CornerName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        CornerName::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown corner '{s}' (expected TT, FF, SS, FS or SF)"))
    }
}

/// Process corner: fractional threshold shift and a multiplicative delay derate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerSpec {
    pub name: CornerName,
    pub vth_shift_frac: f64,
    pub delay_derate: f64,
}

impl CornerSpec {
    pub const TYPICAL: CornerSpec = CornerSpec {
        name: CornerName::TT,
        vth_shift_frac: 0.0,
        delay_derate: 1.0,
    };

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name == CornerName::TT && (self.vth_shift_frac != 0.0 || self.delay_derate != 1.0) {
            out.push("corner TT: zero shift and derate 1.0".to_string());
        }
        if !(self.vth_shift_frac.abs() <= 0.3) {
            out.push(format!("corner {}: |vth_shift_frac| <= 0.3", self.name));
        }
        if !(self.delay_derate > 0.0) {
            out.push(format!("corner {}: delay_derate > 0", self.name));
        }
        out
    }
}

pub fn default_corners() -> Vec<CornerSpec> {
    let c = |name, vth_shift_frac, delay_derate| CornerSpec {
        name,
        vth_shift_frac,
        delay_derate,
    };
    vec![
        CornerSpec::TYPICAL,
        c(CornerName::FF, -0.10, 0.9),
        c(CornerName::SS, 0.10, 1.1),
        c(CornerName::FS, -0.05, 1.0),
        c(CornerName::SF, 0.05, 1.0),
    ]
}

/// On-disk shape of a library document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LibraryDoc {
    technology: TechnologyModel,
    ref_point: OperatingPoint,
    #[serde(default = "default_corners")]
    corners: Vec<CornerSpec>,
    cells: Vec<Cell>,
}

/// A validated, immutable cell library.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    doc: LibraryDoc,
    index: HashMap<(String, Variant), usize>,
    // per cell, per output: truth table over the cell inputs
    tables: Vec<Vec<Vec<bool>>>,
}

impl Library {
    pub fn new(
        technology: TechnologyModel,
        ref_point: OperatingPoint,
        corners: Vec<CornerSpec>,
        cells: Vec<Cell>,
    ) -> Result<Library, LibraryError> {
        Self::from_doc(LibraryDoc {
            technology,
            ref_point,
            corners,
            cells,
        })
    }

    fn from_doc(doc: LibraryDoc) -> Result<Library, LibraryError> {
        let mut schema = Vec::new();
        let mut index = HashMap::new();
        for (i, cell) in doc.cells.iter().enumerate() {
            if index.insert((cell.name.clone(), cell.variant), i).is_some() {
                schema.push(format!("duplicate cell ({}, {})", cell.name, cell.variant));
            }
        }
        let mut seen = BTreeSet::new();
        for corner in &doc.corners {
            if !seen.insert(corner.name) {
                schema.push(format!("duplicate corner {}", corner.name));
            }
        }
        for name in CornerName::ALL {
            if !seen.contains(&name) {
                schema.push(format!("missing corner {name}"));
            }
        }
        if !schema.is_empty() {
            return Err(LibraryError::Schema(schema));
        }

        let mut inv: Vec<String> = Vec::new();
        inv.extend(doc.technology.violations().into_iter().map(|r| format!("technology: {r}")));
        inv.extend(doc.ref_point.violations().into_iter().map(|r| format!("ref_point: {r}")));
        if doc.technology.violations().is_empty() && !(doc.ref_point.vdd > doc.technology.vth0) {
            inv.push("ref_point: vdd > technology.vth0".into());
        }
        for corner in &doc.corners {
            inv.extend(corner.violations());
        }
        for cell in &doc.cells {
            inv.extend(cell.violations());
        }
        if !inv.is_empty() {
            return Err(LibraryError::Invariant(inv));
        }

        let tables = doc
            .cells
            .iter()
            .map(|cell| {
                cell.outputs
                    .iter()
                    .map(|pin| {
                        Expr::parse(&cell.functions[pin], &cell.inputs)
                            .expect("validated above")
                            .truth_table(cell.inputs.len())
                    })
                    .collect()
            })
            .collect();
        Ok(Library { doc, index, tables })
    }

    pub fn technology(&self) -> &TechnologyModel {
        &self.doc.technology
    }

    pub fn ref_point(&self) -> &OperatingPoint {
        &self.doc.ref_point
    }

    pub fn corners(&self) -> &[CornerSpec] {
        &self.doc.corners
    }

    pub fn corner(&self, name: CornerName) -> CornerSpec {
        *self
            .doc
            .corners
            .iter()
            .find(|c| c.name == name)
            .expect("every corner is present in a validated library")
    }

    pub fn cells(&self) -> &[Cell] {
        &self.doc.cells
    }

    pub fn cell(&self, name: &str, variant: Variant) -> Option<&Cell> {
        self.index
            .get(&(name.to_string(), variant))
            .map(|&i| &self.doc.cells[i])
    }

    pub fn has_cell_name(&self, name: &str) -> bool {
        self.doc.cells.iter().any(|c| c.name == name)
    }

    pub fn require(&self, name: &str, variant: Variant) -> Result<&Cell, LibraryError> {
        self.cell(name, variant).ok_or_else(|| LibraryError::MissingCell {
            name: name.to_string(),
            variant: variant.to_string(),
        })
    }

    /// Truth table of output `output` of a cell, indexed by input bit vector.
    pub fn truth_table(&self, name: &str, variant: Variant, output: usize) -> Option<&[bool]> {
        let i = *self.index.get(&(name.to_string(), variant))?;
        self.tables[i].get(output).map(Vec::as_slice)
    }
}

/// Boolean value of one cell output.
pub fn evaluate_function(cell: &Cell, output_pin: &str, input_bits: &[bool]) -> Result<bool, ModelError> {
    if input_bits.len() != cell.inputs.len() {
        return Err(ModelError::Domain(format!(
            "cell {} takes {} inputs, got {}",
            cell.name,
            cell.inputs.len(),
            input_bits.len()
        )));
    }
    let text = cell.functions.get(output_pin).ok_or_else(|| {
        ModelError::Domain(format!("cell {} has no output pin '{output_pin}'", cell.name))
    })?;
    let expr = Expr::parse(text, &cell.inputs)
        .map_err(|e| ModelError::Domain(format!("cell {}: {e}", cell.name)))?;
    let bits = input_bits
        .iter()
        .enumerate()
        .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
    Ok(expr.eval(bits))
}

struct Measured<'a> {
    area: f64,
    delays: &'a [f64],
    leakage: f64,
    dynamic_pw: f64,
}

struct CellData<'a> {
    name: &'a str,
    inputs: &'a [&'a str],
    outputs: &'a [&'a str],
    functions: &'a [&'a str],
    conventional: Measured<'a>,
    loaded: Measured<'a>,
    stacked: Measured<'a>,
}

const REFERENCE_CELLS: [CellData<'static>; 4] = [
    CellData {
        name: "NOT",
        inputs: &["A"],
        outputs: &["Y"],
        functions: &["!A"],
        conventional: Measured { area: 1.32, delays: &[30.327], leakage: 3.98, dynamic_pw: f64::NAN },
        loaded: Measured { area: 1.32, delays: &[29.873], leakage: 4.27, dynamic_pw: 20.801 },
        stacked: Measured { area: 1.56, delays: &[32.873], leakage: 5.75, dynamic_pw: 23.6805 },
    },
    CellData {
        name: "NAND",
        inputs: &["A", "B"],
        outputs: &["Y"],
        functions: &["!(A & B)"],
        conventional: Measured { area: 3.322, delays: &[30.339], leakage: 5.00, dynamic_pw: f64::NAN },
        loaded: Measured { area: 3.322, delays: &[29.853], leakage: 5.87, dynamic_pw: 33.782 },
        stacked: Measured { area: 3.584, delays: &[32.853], leakage: 6.79, dynamic_pw: 37.456 },
    },
    CellData {
        name: "FULLADDER",
        inputs: &["A", "B", "CI"],
        outputs: &["S", "C"],
        functions: &["A ^ B ^ CI", "(A & B) | (A & CI) | (B & CI)"],
        conventional: Measured { area: 17.89, delays: &[30.456, 30.768], leakage: 16.02, dynamic_pw: f64::NAN },
        loaded: Measured { area: 20.85, delays: &[28.762, 28.666], leakage: 21.91, dynamic_pw: 167.2793 },
        stacked: Measured { area: 21.98, delays: &[30.62, 30.67], leakage: 23.08, dynamic_pw: 176.880 },
    },
    CellData {
        name: "MUX1",
        inputs: &["A", "B", "SEL"],
        outputs: &["Y"],
        functions: &["(A & !SEL) | (B & SEL)"],
        conventional: Measured { area: 3.97, delays: &[29.635], leakage: 3.15, dynamic_pw: f64::NAN },
        loaded: Measured { area: 4.93, delays: &[28.535], leakage: 5.28, dynamic_pw: 40.943 },
        stacked: Measured { area: 5.64, delays: &[28.535], leakage: 6.99, dynamic_pw: 45.894 },
    },
];

fn pin_map(pins: &[&str], values: impl IntoIterator<Item = f64>) -> BTreeMap<String, f64> {
    pins.iter().map(|p| p.to_string()).zip(values).collect()
}

fn build_cell(data: &CellData<'_>, variant: Variant) -> Cell {
    let m = match variant {
        Variant::Conventional => &data.conventional,
        Variant::Stacked => &data.stacked,
    };
    // Loaded-output delays are shorter than the unloaded ones in the source
    // measurements, so only the magnitude of the shift is used.
    let shift: f64 = data
        .conventional
        .delays
        .iter()
        .zip(data.loaded.delays)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / data.outputs.len() as f64;
    let (ref_dynamic_pw, load_analysis) = match variant {
        Variant::Conventional => (
            Some(data.loaded.dynamic_pw),
            Some(LoadRecord {
                area_um2: data.loaded.area,
                intrinsic_delay_ns: pin_map(data.outputs, data.loaded.delays.iter().copied()),
                leakage_nw: data.loaded.leakage,
                dynamic_pw: data.loaded.dynamic_pw,
            }),
        ),
        Variant::Stacked => (Some(m.dynamic_pw), None),
    };
    Cell {
        name: data.name.to_string(),
        variant,
        inputs: data.inputs.iter().map(|s| s.to_string()).collect(),
        outputs: data.outputs.iter().map(|s| s.to_string()).collect(),
        functions: data
            .outputs
            .iter()
            .zip(data.functions)
            .map(|(o, f)| (o.to_string(), f.to_string()))
            .collect(),
        area_um2: m.area,
        input_cap_ff: pin_map(data.inputs, data.inputs.iter().map(|_| m.area * CAP_PER_AREA_FF)),
        intrinsic_delay_ns: pin_map(data.outputs, m.delays.iter().copied()),
        load_coeff_ns_per_ff: shift / NOMINAL_LOAD_FF,
        leakage_nw: m.leakage,
        ref_dynamic_pw,
        load_analysis,
    }
}

/// The four-cell reference library at 1.2 V, both variants.
pub fn builtin_reference_library() -> Library {
    let ref_point = OperatingPoint {
        vdd: 1.2,
        frequency: 100e6,
        temperature_k: 300.0,
    };
    let mut technology = TechnologyModel::uncalibrated("130nm-paper");
    technology.i0 = calibrate_i0(&technology, 3.98e-9, ref_point.vdd)
        .expect("reference calibration inputs are positive");
    let cells = REFERENCE_CELLS
        .iter()
        .flat_map(|d| Variant::ALL.into_iter().map(move |v| build_cell(d, v)))
        .collect();
    Library::new(technology, ref_point, default_corners(), cells)
        .expect("built-in reference library is valid")
}

/// How unknown keys in a library document are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

const TOP_KEYS: &[&str] = &["technology", "ref_point", "corners", "cells"];
const TECH_KEYS: &[&str] = &[
    "node_name", "vth0", "n_slope", "i0", "w_over_l", "eta_dibl", "alpha_sat", "tox_nm",
    "temperature_k",
];
const OP_KEYS: &[&str] = &["vdd", "frequency", "temperature_k"];
const CORNER_KEYS: &[&str] = &["name", "vth_shift_frac", "delay_derate"];
const CELL_KEYS: &[&str] = &[
    "name", "variant", "inputs", "outputs", "functions", "area_um2", "input_cap_ff",
    "intrinsic_delay_ns", "load_coeff_ns_per_ff", "leakage_nw", "ref_dynamic_pw", "load_analysis",
];
const LOAD_KEYS: &[&str] = &["area_um2", "intrinsic_delay_ns", "leakage_nw", "dynamic_pw"];

fn unknown_keys(value: &Value, allowed: &[&str], path: &str, out: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                out.push(format!("unknown key '{key}' in {path}"));
            }
        }
    }
}

fn collect_unknown_keys(doc: &Value) -> Vec<String> {
    let mut out = Vec::new();
    unknown_keys(doc, TOP_KEYS, "document", &mut out);
    unknown_keys(&doc["technology"], TECH_KEYS, "technology", &mut out);
    unknown_keys(&doc["ref_point"], OP_KEYS, "ref_point", &mut out);
    if let Some(corners) = doc["corners"].as_array() {
        for (i, c) in corners.iter().enumerate() {
            unknown_keys(c, CORNER_KEYS, &format!("corners[{i}]"), &mut out);
        }
    }
    if let Some(cells) = doc["cells"].as_array() {
        for (i, c) in cells.iter().enumerate() {
            unknown_keys(c, CELL_KEYS, &format!("cells[{i}]"), &mut out);
            unknown_keys(&c["load_analysis"], LOAD_KEYS, &format!("cells[{i}].load_analysis"), &mut out);
        }
    }
    out
}

/// Parses and validates a library document.
///
/// Returns the library together with warnings; in lenient mode unknown keys
/// are reported as warnings instead of schema violations.
pub fn load_library(text: &str, strictness: Strictness) -> Result<(Library, Vec<String>), LibraryError> {
    let value: Value = serde_json::from_str(text).map_err(|e| LibraryError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if !value.is_object() {
        return Err(LibraryError::Schema(vec!["document must be an object".into()]));
    }
    let unknown = collect_unknown_keys(&value);
    let warnings = match strictness {
        Strictness::Strict if !unknown.is_empty() => return Err(LibraryError::Schema(unknown)),
        Strictness::Strict => Vec::new(),
        Strictness::Lenient => unknown,
    };
    let doc: LibraryDoc =
        serde_json::from_value(value).map_err(|e| LibraryError::Schema(vec![e.to_string()]))?;
    Ok((Library::from_doc(doc)?, warnings))
}

/// Deterministic pretty-printed JSON; always ends with a newline.
pub fn save_library(lib: &Library) -> String {
    let mut s = serde_json::to_string_pretty(&lib.doc).expect("library serializes");
    s.push('\n');
    s
}

/// Where leakage for stacked cells comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeakageSource {
    /// Stored per-variant leakage values.
    Table,
    /// Stacked leakage predicted from the conventional value and the stack model.
    #[default]
    Model,
}

impl FromStr for LeakageSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(LeakageSource::Table),
            "model" => Ok(LeakageSource::Model),
            other => Err(format!("unknown leakage source '{other}' (expected table or model)")),
        }
    }
}

impl fmt::Display for LeakageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakageSource::Table => "table",
            LeakageSource::Model => "model",
        })
    }
}

/// Everything that selects an evaluation point besides the netlist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditions {
    pub op: OperatingPoint,
    pub corner: CornerSpec,
    /// Overrides the library's nominal threshold before the corner shift.
    pub vth0: Option<f64>,
    pub leakage_source: LeakageSource,
}

impl Conditions {
    pub fn reference(lib: &Library) -> Conditions {
        Conditions {
            op: *lib.ref_point(),
            corner: CornerSpec::TYPICAL,
            vth0: None,
            leakage_source: LeakageSource::default(),
        }
    }

    /// Threshold voltage after override and corner shift.
    pub fn effective_vth(&self, lib: &Library) -> f64 {
        self.vth0.unwrap_or(lib.technology().vth0) * (1.0 + self.corner.vth_shift_frac)
    }
}

/// A cell evaluated at specific conditions. Vectors follow pin order.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCell {
    pub delay_ns: Vec<f64>,
    pub load_coeff_ns_per_ff: f64,
    pub input_cap_ff: Vec<f64>,
    /// Off-state current at the evaluation point, A.
    pub ioff_a: f64,
    /// `vdd * ioff_a`, W.
    pub leakage_w: f64,
    /// Sum of input capacitance times vdd^2, J.
    pub dynamic_energy_j: f64,
}

pub fn derate_cell(cell: &Cell, lib: &Library, cond: &Conditions) -> Result<EffectiveCell, ModelError> {
    let tech = lib.technology();
    let reference = lib.ref_point();
    let vth = cond.effective_vth(lib);

    let scale = alpha_power_delay(cond.op.vdd, vth, tech.alpha_sat)?
        / alpha_power_delay(reference.vdd, tech.vth0, tech.alpha_sat)?;
    let delay_ns = cell
        .outputs
        .iter()
        .map(|o| cell.intrinsic_delay_ns[o] * scale * cond.corner.delay_derate)
        .collect();

    let nominal = tech.with_temperature(reference.temperature_k);
    let at_op = tech.with_vth0(vth).with_temperature(cond.op.temperature_k);
    let i_ref = subthreshold_current(&nominal, 0.0, reference.vdd)?;

    let (base_nw, i_now) = match (cell.variant, cond.leakage_source) {
        (Variant::Stacked, LeakageSource::Model) => {
            let conventional = lib.cell(&cell.name, Variant::Conventional).ok_or_else(|| {
                ModelError::Domain(format!(
                    "model leakage for stacked {} needs its conventional variant",
                    cell.name
                ))
            })?;
            (conventional.leakage_nw, stack_leakage(&at_op, cond.op.vdd, 2)?.current)
        }
        _ => (cell.leakage_nw, subthreshold_current(&at_op, 0.0, cond.op.vdd)?),
    };
    let ioff_ref = base_nw * 1e-9 / reference.vdd;
    // exact identity at the reference point and TT
    let ioff_a = if i_now == i_ref { ioff_ref } else { ioff_ref * (i_now / i_ref) };

    let input_cap_ff: Vec<f64> = cell.inputs.iter().map(|p| cell.input_cap_ff[p]).collect();
    let vdd2 = cond.op.vdd * cond.op.vdd;
    Ok(EffectiveCell {
        delay_ns,
        load_coeff_ns_per_ff: cell.load_coeff_ns_per_ff,
        dynamic_energy_j: input_cap_ff.iter().sum::<f64>() * 1e-15 * vdd2,
        input_cap_ff,
        ioff_a,
        leakage_w: cond.op.vdd * ioff_a,
    })
}
