//! The `cellpower` command line.
//!
//! Exit codes: 0 on success, 1 when inputs fail to parse or validate (or an
//! analysis error occurs), 2 on usage errors. Reports go to `--out` when
//! given (written via a temporary file and renamed into place), otherwise to
//! standard output. Unlisted primary inputs default to probability 0.5.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::activity::{parse_activity, propagate_probabilities, with_default_probabilities, ActivityMap};
use crate::analysis::{corner_analysis, sweep, Analyzer, DEFAULT_K_SC};
use crate::device::OperatingPoint;
use crate::library::{builtin_reference_library, load_library, save_library, Conditions, CornerName, LeakageSource, Library, Strictness};
use crate::netlist::{parse_netlist, Netlist};
use crate::optimizer::{apply_assignment, format_assignment, optimize_leakage, parse_assignment};
use crate::report::{render_csv, render_json, CsvRow};

#[derive(Debug, Parser)]
#[command(name = "cellpower", version, about = "Gate-level low-power analysis over a CMOS cell library")]
pub struct Cli {
    /// Library file (JSON); the built-in reference library when omitted.
    #[arg(long, global = true)]
    pub library: Option<PathBuf>,
    /// Report unknown library keys as warnings instead of errors.
    #[arg(long, global = true)]
    pub lenient: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate the library and, optionally, a netlist and activity file.
    Check {
        netlist: Option<PathBuf>,
        #[arg(long)]
        activity: Option<PathBuf>,
    },
    /// Power and timing at one operating point and corner.
    Estimate(AnalysisArgs),
    /// Power and timing over a (vdd, vth) grid.
    Sweep {
        #[command(flatten)]
        common: AnalysisArgs,
        /// Supply range as start:stop:step, volts.
        #[arg(long)]
        vdd_range: String,
        /// Threshold range as start:stop:step, volts.
        #[arg(long)]
        vth_range: String,
    },
    /// Power and timing at all five process corners.
    Corners(AnalysisArgs),
    /// Choose stacked or conventional variants to minimize leakage under a delay budget.
    Optimize {
        #[command(flatten)]
        common: AnalysisArgs,
        #[arg(long)]
        delay_budget_ns: f64,
        /// Also write `assign <id> <variant>` lines to this file.
        #[arg(long)]
        assignment_out: Option<PathBuf>,
    },
    /// Write the library (built-in unless --library is given) as JSON.
    EmitLibrary {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Table,
    Model,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    pub netlist: PathBuf,
    /// Activity file with `prob <net> <p>` lines.
    #[arg(long)]
    pub activity: Option<PathBuf>,
    /// Variant overrides as `assign <id> <variant>` lines.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    /// Supply voltage, volts (default: library reference point).
    #[arg(long)]
    pub vdd: Option<f64>,
    /// Clock frequency, hertz (default: library reference point).
    #[arg(long)]
    pub frequency: Option<f64>,
    #[arg(long, default_value = "TT")]
    pub corner: String,
    /// Short-circuit power as a fraction of switching power.
    #[arg(long, default_value_t = DEFAULT_K_SC)]
    pub k_sc: f64,
    #[arg(long, value_enum, default_value_t = SourceArg::Model)]
    pub leakage_source: SourceArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Diagnostics(Vec<String>),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Diagnostics(_) | CliError::Failure(_) => 1,
        }
    }

    fn lines(&self) -> Vec<String> {
        match self {
            CliError::Usage(m) => vec![format!("usage error: {m}")],
            CliError::Diagnostics(d) => d.clone(),
            CliError::Failure(m) => vec![format!("error: {m}")],
        }
    }
}

impl From<crate::error::AnalysisError> for CliError {
    fn from(e: crate::error::AnalysisError) -> Self {
        CliError::Failure(e.to_string())
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range '{text}' is not start:stop:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("range '{text}': '{s}' is not a number"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(format!("range '{text}': step must be positive"));
    }
    if start > stop {
        return Err(format!("range '{text}': start exceeds stop"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Failure(format!("cannot write output: {e}"));
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io)?;
            stdout.flush().map_err(io)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn load_lib(cli: &Cli) -> Result<Library, CliError> {
    let Some(path) = &cli.library else {
        return Ok(builtin_reference_library());
    };
    let strictness = if cli.lenient { Strictness::Lenient } else { Strictness::Strict };
    let (lib, warnings) = load_library(&read(path)?, strictness)
        .map_err(|e| CliError::Diagnostics(vec![format!("{}: {e}", path.display())]))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(lib)
}

fn load_netlist(path: &Path, lib: &Library) -> Result<Netlist, CliError> {
    parse_netlist(&read(path)?, lib).map_err(|diags| {
        CliError::Diagnostics(diags.iter().map(|d| format!("{}: {d}", path.display())).collect())
    })
}

fn load_probabilities(path: Option<&Path>, nl: &Netlist) -> Result<BTreeMap<String, f64>, CliError> {
    let Some(path) = path else {
        return Ok(with_default_probabilities(nl, &BTreeMap::new()));
    };
    let given = parse_activity(&read(path)?).map_err(|diags| {
        CliError::Diagnostics(diags.iter().map(|d| format!("{}: {d}", path.display())).collect())
    })?;
    let stray: Vec<String> = given
        .keys()
        .filter(|net| !nl.primary_inputs.contains(net))
        .map(|net| format!("{}: {net} is not a primary input", path.display()))
        .collect();
    if !stray.is_empty() {
        return Err(CliError::Diagnostics(stray));
    }
    Ok(with_default_probabilities(nl, &given))
}

struct Prepared {
    lib: Library,
    nl: Netlist,
    activity: ActivityMap,
    cond: Conditions,
}

fn prepare(cli: &Cli, args: &AnalysisArgs) -> Result<Prepared, CliError> {
    let corner: CornerName = args.corner.parse().map_err(CliError::Usage)?;
    if !(args.k_sc >= 0.0) {
        return Err(CliError::Usage(format!("--k-sc must be non-negative, got {}", args.k_sc)));
    }
    for (flag, v) in [("--vdd", args.vdd), ("--frequency", args.frequency)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Usage(format!("{flag} must be positive, got {v}")));
            }
        }
    }
    let lib = load_lib(cli)?;
    let mut nl = load_netlist(&args.netlist, &lib)?;
    if let Some(path) = &args.assignment {
        let assignment = parse_assignment(&read(path)?)
            .map_err(|e| CliError::Diagnostics(vec![format!("{}: {e}", path.display())]))?;
        nl = apply_assignment(&nl, &assignment)
            .map_err(|e| CliError::Diagnostics(vec![format!("{}: {e}", path.display())]))?;
        let diags = crate::netlist::validate(&nl, &lib);
        if !diags.is_empty() {
            return Err(CliError::Diagnostics(diags.iter().map(|d| format!("{}: {d}", path.display())).collect()));
        }
    }
    let probs = load_probabilities(args.activity.as_deref(), &nl)?;
    let activity = propagate_probabilities(&nl, &lib, &probs)?;
    let reference = *lib.ref_point();
    let cond = Conditions {
        op: OperatingPoint {
            vdd: args.vdd.unwrap_or(reference.vdd),
            frequency: args.frequency.unwrap_or(reference.frequency),
            temperature_k: reference.temperature_k,
        },
        corner: lib.corner(corner),
        vth0: None,
        leakage_source: match args.leakage_source {
            SourceArg::Table => LeakageSource::Table,
            SourceArg::Model => LeakageSource::Model,
        },
    };
    Ok(Prepared { lib, nl, activity, cond })
}

fn conditions_json(p: &Prepared, k_sc: f64) -> Value {
    json!({
        "vdd": p.cond.op.vdd,
        "frequency_hz": p.cond.op.frequency,
        "temperature_k": p.cond.op.temperature_k,
        "corner": p.cond.corner.name.as_str(),
        "vth0": p.lib.technology().vth0,
        "leakage_source": p.cond.leakage_source.to_string(),
        "k_sc": k_sc,
    })
}

fn instances_json(a: &Analyzer<'_>) -> Value {
    let nl = a.netlist();
    let rows: Vec<Value> = nl
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let cell = a.library().cell(&inst.cell_name, inst.variant).expect("validated netlist");
            let eff = a.effective(i, inst.variant).expect("validated netlist");
            let delays: serde_json::Map<String, Value> =
                cell.outputs.iter().cloned().zip(eff.delay_ns.iter().map(|&d| json!(d))).collect();
            json!({
                "id": inst.id,
                "cell": inst.cell_name,
                "variant": inst.variant.as_str(),
                "area_um2": cell.area_um2,
                "leakage_nw": eff.leakage_w * 1e9,
                "delay_ns": delays,
            })
        })
        .collect();
    Value::Array(rows)
}

fn estimate(cli: &Cli, args: &AnalysisArgs) -> Result<String, CliError> {
    let p = prepare(cli, args)?;
    let a = Analyzer::new(&p.nl, &p.lib, p.cond)?;
    let power = a.power(&p.activity, args.k_sc)?;
    let timing = a.timing();
    Ok(match args.format {
        OutputFormat::Json => render_json(json!({
            "command": "estimate",
            "conditions": conditions_json(&p, args.k_sc),
            "area_um2": a.area_um2_with(&a.declared_variants()),
            "power": power,
            "timing": timing,
            "instances": instances_json(&a),
        })),
        OutputFormat::Csv => render_csv(&[CsvRow {
            vdd: p.cond.op.vdd,
            vth: p.lib.technology().vth0,
            corner: p.cond.corner.name.as_str(),
            power: Some(&power),
            timing: Some(&timing),
        }]),
    })
}

fn corners(cli: &Cli, args: &AnalysisArgs) -> Result<String, CliError> {
    let p = prepare(cli, args)?;
    let rows = corner_analysis(&p.nl, &p.lib, &p.activity, &p.cond.op, p.cond.leakage_source, args.k_sc)?;
    Ok(match args.format {
        OutputFormat::Json => {
            let map: serde_json::Map<String, Value> = rows
                .iter()
                .map(|(name, power, timing)| (name.to_string(), json!({"power": power, "timing": timing})))
                .collect();
            render_json(json!({
                "command": "corners",
                "conditions": conditions_json(&p, args.k_sc),
                "corners": map,
            }))
        }
        OutputFormat::Csv => {
            let csv_rows: Vec<CsvRow<'_>> = rows
                .iter()
                .map(|(name, power, timing)| CsvRow {
                    vdd: p.cond.op.vdd,
                    vth: p.lib.technology().vth0,
                    corner: name.as_str(),
                    power: Some(power),
                    timing: Some(timing),
                })
                .collect();
            render_csv(&csv_rows)
        }
    })
}

fn sweep_cmd(cli: &Cli, args: &AnalysisArgs, vdd_range: &str, vth_range: &str) -> Result<String, CliError> {
    let vdd_grid = parse_range(vdd_range).map_err(CliError::Usage)?;
    let vth_grid = parse_range(vth_range).map_err(CliError::Usage)?;
    let p = prepare(cli, args)?;
    let points = sweep(
        &p.nl,
        &p.lib,
        &p.activity,
        &p.cond.op,
        &vdd_grid,
        &vth_grid,
        p.cond.corner,
        p.cond.leakage_source,
        args.k_sc,
    )?;
    Ok(match args.format {
        OutputFormat::Json => render_json(json!({
            "command": "sweep",
            "conditions": conditions_json(&p, args.k_sc),
            "points": points,
        })),
        OutputFormat::Csv => {
            let rows: Vec<CsvRow<'_>> = points
                .iter()
                .map(|pt| CsvRow {
                    vdd: pt.vdd,
                    vth: pt.vth,
                    corner: p.cond.corner.name.as_str(),
                    power: pt.power.as_ref(),
                    timing: pt.timing.as_ref(),
                })
                .collect();
            render_csv(&rows)
        }
    })
}

fn optimize(cli: &Cli, args: &AnalysisArgs, budget: f64, assignment_out: Option<&Path>) -> Result<String, CliError> {
    if !(budget > 0.0) {
        return Err(CliError::Usage(format!("--delay-budget-ns must be positive, got {budget}")));
    }
    let p = prepare(cli, args)?;
    let result = optimize_leakage(&p.nl, &p.lib, &p.cond, budget)?;
    let optimized = apply_assignment(&p.nl, &result.assignment).map_err(CliError::Failure)?;
    let a = Analyzer::new(&optimized, &p.lib, p.cond)?;
    let power = a.power(&p.activity, args.k_sc)?;
    let timing = a.timing();
    if let Some(path) = assignment_out {
        write_output(Some(path), &format_assignment(&p.nl, &result.assignment))?;
    }
    Ok(match args.format {
        OutputFormat::Json => render_json(json!({
            "command": "optimize",
            "conditions": conditions_json(&p, args.k_sc),
            "delay_budget_ns": budget,
            "result": result,
            "power": power,
            "timing": timing,
        })),
        OutputFormat::Csv => render_csv(&[CsvRow {
            vdd: p.cond.op.vdd,
            vth: p.lib.technology().vth0,
            corner: p.cond.corner.name.as_str(),
            power: Some(&power),
            timing: Some(&timing),
        }]),
    })
}

fn check(cli: &Cli, netlist: Option<&Path>, activity: Option<&Path>) -> Result<String, CliError> {
    let lib = load_lib(cli)?;
    let mut out = format!("ok: library with {} cells\n", lib.cells().len());
    if let Some(path) = netlist {
        let nl = load_netlist(path, &lib)?;
        let n = nl.instances.len();
        let plural = if n == 1 { "" } else { "s" };
        out.push_str(&format!("ok: netlist {} with {n} instance{plural}\n", path.display()));
        if let Some(apath) = activity {
            load_probabilities(Some(apath), &nl)?;
            out.push_str(&format!("ok: activity {}\n", apath.display()));
        }
    } else if activity.is_some() {
        return Err(CliError::Usage("--activity needs a netlist".into()));
    }
    Ok(out)
}

/// Runs one parsed invocation. Returns the exit code.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Check { netlist, activity } => {
            check(cli, netlist.as_deref(), activity.as_deref()).and_then(|s| write_output(None, &s))
        }
        Command::Estimate(args) => estimate(cli, args).and_then(|s| write_output(args.out.as_deref(), &s)),
        Command::Corners(args) => corners(cli, args).and_then(|s| write_output(args.out.as_deref(), &s)),
        Command::Sweep { common, vdd_range, vth_range } => {
            sweep_cmd(cli, common, vdd_range, vth_range).and_then(|s| write_output(common.out.as_deref(), &s))
        }
        Command::Optimize { common, delay_budget_ns, assignment_out } => {
            optimize(cli, common, *delay_budget_ns, assignment_out.as_deref())
                .and_then(|s| write_output(common.out.as_deref(), &s))
        }
        Command::EmitLibrary { out } => load_lib(cli).and_then(|lib| write_output(out.as_deref(), &save_library(&lib))),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            for line in e.lines() {
                eprintln!("{line}");
            }
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(&cli))
}
