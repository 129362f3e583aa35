//! Deterministic JSON and CSV rendering of analysis results.
//!
//! All floating-point values are rounded to six significant digits. JSON
//! object keys are sorted.

use serde_json::Value;

use crate::analysis::{PowerReport, TimingReport};

pub const CSV_HEADER: [&str; 9] = [
    "vdd", "vth", "corner", "p_sw_w", "p_sc_w", "p_leak_w", "p_total_w", "delay_ns", "feasible",
];

/// Rounds to six significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Text form of a rounded number for CSV cells.
pub fn format_number(x: f64) -> String {
    let r = round6(x);
    let a = r.abs();
    if r == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Applies [`round6`] to every non-integer number in a JSON tree.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round6(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn render_json(value: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(value)).expect("JSON values serialize");
    s.push('\n');
    s
}

/// One CSV row in [`CSV_HEADER`] order.
pub struct CsvRow<'a> {
    pub vdd: f64,
    pub vth: f64,
    pub corner: &'a str,
    pub power: Option<&'a PowerReport>,
    pub timing: Option<&'a TimingReport>,
}

pub fn render_csv(rows: &[CsvRow<'_>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        let mut rec = vec![format_number(row.vdd), format_number(row.vth), row.corner.to_string()];
        match (row.power, row.timing) {
            (Some(p), Some(t)) => {
                rec.extend(
                    [p.total.p_switching_w, p.total.p_short_circuit_w, p.total.p_leakage_w, p.total.p_total_w, t.critical_delay_ns]
                        .map(format_number),
                );
                rec.push("true".into());
            }
            _ => {
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push("false".into());
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("CSV is UTF-8")
}
