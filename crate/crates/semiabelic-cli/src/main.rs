use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use semiabelic::dicing::{self, DicingError};
use semiabelic::limits::{self, DegeneratingFamily, LimitError};
use semiabelic::models::{
    direction_sine, DegenerationModel, FixedPoint, ModelError, ModelKind, VerifyOptions,
};
use semiabelic::sample;
use semiabelic::{Characteristic, SiegelMatrix, ThetaError, C64};

#[derive(Parser)]
#[command(name = "semiabelic", version, about = "Theta functions on semi-abelic varieties and Delaunay dicings")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a Riemann theta function with characteristic.
    Theta(ThetaArgs),
    /// Work with a degeneration model.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Delaunay dicing of the lattice for a cone of quadratic forms.
    Dice {
        /// Generators, e.g. "x1^2,x2^2,(x1-x2)^2".
        #[arg(long)]
        forms: String,
    },
    /// Strata table: cone, codimension, cells and toric components.
    Table {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Residuals of translated theta functions against their limit.
    Limit(LimitArgs),
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Run the consistency checks.
    Verify {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Perturb one gluing so that verification must fail.
        #[arg(long)]
        break_gluing: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// List the fixed points of the involution.
    FixedPoints {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the model data as JSON.
    Show {
        #[command(flatten)]
        m: ModelArgs,
    },
    /// Theta gradients at the fixed points on the divisor.
    Gradient {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// rank1, standardN, two-p2, two-p1xp2, octahedron, two-pyramids, principal-rank3
    #[arg(long)]
    kind: String,
    #[arg(long)]
    g: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ThetaArgs {
    #[arg(long)]
    g: Option<usize>,
    /// JSON file {"re": [[..]], "im": [[..]]}; a random matrix is drawn from the seed otherwise.
    #[arg(long)]
    tau_file: Option<PathBuf>,
    /// Comma-separated complex numbers such as 0.1+0.2i; a single value is repeated.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    z: String,
    /// eps followed by delta, comma-separated bits, e.g. 1,1 for g = 1.
    #[arg(long)]
    char: Option<String>,
    #[arg(long)]
    grad: bool,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LimitArgs {
    /// rank1 or standardN
    #[arg(long, default_value = "rank1")]
    kind: String,
    #[arg(long, default_value_t = 2)]
    g: usize,
    /// Grid start:stop:step.
    #[arg(long, default_value = "1:5:1")]
    t: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn numeric(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

impl From<ThetaError> for Failure {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::DimensionMismatch { .. } | ThetaError::InvalidTolerance => usage(e.to_string()),
            _ => numeric(e.to_string()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidModel(_) | ModelError::WrongComponent(_) => usage(e.to_string()),
            ModelError::Theta(t) => t.into(),
            _ => numeric(e.to_string()),
        }
    }
}

impl From<DicingError> for Failure {
    fn from(e: DicingError) -> Self {
        match e {
            DicingError::Parse(_) | DicingError::DimensionMismatch { .. } => usage(e.to_string()),
            _ => numeric(e.to_string()),
        }
    }
}

impl From<LimitError> for Failure {
    fn from(e: LimitError) -> Self {
        match e {
            LimitError::Theta(t) => t.into(),
            LimitError::Model(m) => m.into(),
            LimitError::InconsistentFamily(_) => usage(e.to_string()),
            LimitError::TOutOfRange(_) => numeric(e.to_string()),
        }
    }
}

/// Stdout text and exit code.
type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Theta(a) => cmd_theta(a),
        Cmd::Model { cmd } => match cmd {
            ModelCmd::Verify { m, samples, tol, break_gluing, format } => {
                cmd_verify(&m, samples, tol, break_gluing, format)
            }
            ModelCmd::FixedPoints { m, format } => cmd_fixed_points(&m, format),
            ModelCmd::Show { m } => cmd_show(&m),
            ModelCmd::Gradient { m, tol } => cmd_gradient(&m, tol),
        },
        Cmd::Dice { forms } => cmd_dice(&forms),
        Cmd::Table { format } => cmd_table(format),
        Cmd::Limit(a) => cmd_limit(a),
    }
}

fn cx(v: C64) -> Value {
    json!({"re": v.re, "im": v.im})
}

fn cxs(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|x| cx(*x)).collect())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(usage("--tol must be positive"))
    }
}

fn read_tau(path: &PathBuf) -> Result<SiegelMatrix, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let part = |key: &str| -> Result<Vec<Vec<f64>>, Failure> {
        serde_json::from_value(v.get(key).cloned().unwrap_or(Value::Null))
            .map_err(|e| usage(format!("{}: field \"{key}\": {e}", path.display())))
    };
    let (re, im) = (part("re")?, part("im")?);
    let g = re.len();
    if im.len() != g || re.iter().chain(&im).any(|r| r.len() != g) {
        return Err(usage("tau must be a square matrix with matching re and im parts"));
    }
    let entries: Vec<C64> =
        (0..g * g).map(|i| C64::new(re[i / g][i % g], im[i / g][i % g])).collect();
    Ok(SiegelMatrix::new(g, &entries)?)
}

fn parse_z(s: &str, g: usize) -> Result<Vec<C64>, Failure> {
    let vals: Vec<C64> = s
        .split(',')
        .map(|p| p.trim().replace(' ', "").parse::<C64>().map_err(|_| usage(format!("bad complex number '{p}'"))))
        .collect::<Result<_, _>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; g]),
        n if n == g => Ok(vals),
        n => Err(usage(format!("--z has {n} entries, expected {g}"))),
    }
}

fn parse_char(s: &str, g: usize) -> Result<Characteristic, Failure> {
    let bits: Vec<u8> = s
        .split(',')
        .map(|p| match p.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(usage(format!("characteristic entries must be 0 or 1, got '{other}'"))),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != 2 * g {
        return Err(usage(format!("--char needs {} bits (eps then delta)", 2 * g)));
    }
    Ok(Characteristic::new(bits[..g].to_vec(), bits[g..].to_vec()))
}

fn cmd_theta(a: ThetaArgs) -> Outcome {
    check_tol(a.tol)?;
    let tau = match (&a.tau_file, a.g) {
        (Some(p), g) => {
            let t = read_tau(p)?;
            if g.is_some_and(|g| g != t.g()) {
                return Err(usage(format!("--g disagrees with the genus {} of the tau file", t.g())));
            }
            t
        }
        (None, Some(g)) if g > 0 => sample::random_siegel(&mut ChaCha8Rng::seed_from_u64(a.seed), g),
        (None, _) => return Err(usage("give --tau-file or a positive --g")),
    };
    let g = tau.g();
    let z = parse_z(&a.z, g)?;
    let ch = match &a.char {
        Some(s) => parse_char(s, g)?,
        None => Characteristic::zero(g),
    };
    let mut out = json!({
        "g": g,
        "characteristic": {"eps": ch.eps, "delta": ch.delta},
        "z": cxs(&z),
    });
    if a.grad {
        let (v, grad) = semiabelic::theta_and_grad(&tau, &z, &ch, a.tol)?;
        out["value"] = cx(v.value);
        out["abs_error_bound"] = json!(v.abs_error_bound);
        out["gradient"] = Value::Array(
            grad.iter().map(|d| json!({"value": cx(d.value), "abs_error_bound": d.abs_error_bound})).collect(),
        );
    } else {
        let v = semiabelic::theta_char(&tau, &z, &ch, a.tol)?;
        out["value"] = cx(v.value);
        out["abs_error_bound"] = json!(v.abs_error_bound);
    }
    Ok((pretty(&out), 0))
}

fn build_model(m: &ModelArgs) -> Result<DegenerationModel, Failure> {
    let kind = ModelKind::parse(&m.kind).ok_or_else(|| usage(format!("unknown model kind '{}'", m.kind)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    Ok(DegenerationModel::random(kind, m.g, &mut rng)?)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| numeric(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn cmd_verify(m: &ModelArgs, samples: usize, tol: f64, broken: bool, format: Format) -> Outcome {
    check_tol(tol)?;
    let mut model = build_model(m)?;
    if broken {
        model = model.with_broken_gluing();
    }
    let rep = model.verify_model(&VerifyOptions { samples, tol, seed: m.seed })?;
    let code = if rep.all_pass() { 0 } else { 1 };
    let out = match format {
        Format::Json => pretty(&Value::Array(
            rep.checks
                .iter()
                .map(|c| json!({"check": c.check, "status": c.status.as_str(), "worst_residual": c.worst_residual}))
                .collect(),
        )),
        Format::Csv => csv_text(
            &["check", "status", "worst_residual"],
            rep.checks.iter().map(|c| {
                vec![c.check.clone(), c.status.as_str().to_string(), format!("{:e}", c.worst_residual)]
            }),
        )?,
    };
    Ok((out, code))
}

fn fixed_point_json(model: &DegenerationModel, fp: &FixedPoint) -> Value {
    json!({
        "component": model.components[fp.point.component].label,
        "fiber": cxs(&model.normalized_fiber(&fp.point)),
        "z": cxs(&fp.point.z),
        "characteristic": {"eps": fp.characteristic.eps, "delta": fp.characteristic.delta},
        "sign_choice": fp.sign_choice,
        "multiplicity": fp.multiplicity,
        "odd": fp.odd_flag,
        "stratum": fp.stratum,
        "parity_ratio": cx(fp.parity_ratio),
    })
}

/// Complex vector as {"re": [..], "im": [..]}.
fn split(v: &[C64]) -> Value {
    json!({"re": v.iter().map(|x| x.re).collect::<Vec<_>>(), "im": v.iter().map(|x| x.im).collect::<Vec<_>>()})
}

fn cmd_show(m: &ModelArgs) -> Outcome {
    let model = build_model(m)?;
    let base = match &model.base.tau {
        Some(t) => {
            let g = t.g();
            let rows: Vec<&[C64]> = t.entries().chunks(g).collect();
            json!({
                "re": rows.iter().map(|r| r.iter().map(|x| x.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "im": rows.iter().map(|r| r.iter().map(|x| x.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })
        }
        None => Value::Null,
    };
    let params: serde_json::Map<String, Value> = model.params.iter().map(|(k, v)| (k.clone(), cx(*v))).collect();
    let out = json!({
        "kind": model.kind.name(),
        "g": model.g,
        "base_tau": base,
        "shifts": model.shifts.iter().map(|s| split(s)).collect::<Vec<_>>(),
        "params": params,
        "seed": m.seed,
    });
    Ok((pretty(&out), 0))
}

fn bits(v: &[u8]) -> String {
    v.iter().map(|b| char::from(b'0' + b)).collect()
}

fn cmd_fixed_points(m: &ModelArgs, format: Format) -> Outcome {
    let model = build_model(m)?;
    let pts = model.fixed_points()?;
    let total = DegenerationModel::fixed_point_total(&pts);
    let out = match format {
        Format::Json => pretty(&json!({
            "kind": model.kind.name(),
            "g": model.g,
            "count": pts.len(),
            "total_multiplicity": total,
            "points": pts.iter().map(|p| fixed_point_json(&model, p)).collect::<Vec<_>>(),
        })),
        Format::Csv => csv_text(
            &["component", "stratum", "eps", "delta", "multiplicity", "odd", "parity_ratio"],
            pts.iter().map(|p| {
                vec![
                    model.components[p.point.component].label.clone(),
                    format!("{:b}", p.stratum),
                    bits(&p.characteristic.eps),
                    bits(&p.characteristic.delta),
                    p.multiplicity.to_string(),
                    p.odd_flag.to_string(),
                    format!("{}", p.parity_ratio),
                ]
            }),
        )?,
    };
    Ok((out, 0))
}

fn cmd_gradient(m: &ModelArgs, tol: f64) -> Outcome {
    check_tol(tol)?;
    let model = build_model(m)?;
    let mut records = Vec::new();
    for (i, fp) in model.fixed_points()?.iter().enumerate().filter(|(_, p)| p.odd_flag) {
        let rep = model.gradient_at(fp, tol)?;
        let values: Vec<C64> = rep.values.iter().map(|v| v.value).collect();
        let mut rec = json!({
            "fixed_point": i,
            "component": model.components[fp.point.component].label,
            "labels": rep.labels,
            "gradient": rep.values.iter().map(|v| json!({"value": cx(v.value), "abs_error_bound": v.abs_error_bound})).collect::<Vec<_>>(),
        });
        if let Some(cf) = &rep.closed_form {
            rec["closed_form"] = Value::Array(cf.iter().map(|c| c.map_or(Value::Null, cx)).collect());
            if cf.iter().all(Option::is_some) {
                let cf: Vec<C64> = cf.iter().flatten().copied().collect();
                rec["direction_sine"] = json!(direction_sine(&values, &cf));
            }
        }
        records.push(rec);
    }
    Ok((pretty(&json!({"kind": model.kind.name(), "g": model.g, "points": records})), 0))
}

fn cmd_dice(cone: &str) -> Outcome {
    let forms = dicing::parse_forms(cone).map_err(DicingError::from)?;
    let k = forms.iter().map(|f| f.k).max().unwrap_or(0);
    let d = dicing::delaunay_dicing(&forms, k)?;
    let types: Vec<String> = d.cells.iter().map(|c| dicing::classify_cell(c).label()).collect();
    let out = json!({
        "k": k,
        "cells": d.cells.iter().map(|c| json!({"vertices": c.vertices})).collect::<Vec<_>>(),
        "types": types,
    });
    Ok((pretty(&out), 0))
}

fn cmd_table(format: Format) -> Outcome {
    let rows = dicing::stratum_table()?;
    let out = match format {
        Format::Json => pretty(&Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "k": r.k,
                        "forms": r.forms,
                        "codim": r.codim,
                        "cells": r.polytope_summary(),
                        "toric": r.toric_summary(),
                    })
                })
                .collect(),
        )),
        Format::Csv => csv_text(
            &["k", "forms", "codim", "cells", "toric"],
            rows.iter().map(|r| {
                vec![r.k.to_string(), r.forms.clone(), r.codim.to_string(), r.polytope_summary(), r.toric_summary()]
            }),
        )?,
    };
    Ok((out, 0))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("--t expects start:stop:step or a single value, got '{s}'"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match parts[..] {
        [t] => Ok(vec![t]),
        [a, b, step] if step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn cmd_limit(a: LimitArgs) -> Outcome {
    check_tol(a.tol)?;
    let n = match ModelKind::parse(&a.kind) {
        Some(ModelKind::Rank1) => 1,
        Some(ModelKind::StandardRankN(n)) => n,
        _ => return Err(usage(format!("limit supports rank1 and standardN, not '{}'", a.kind))),
    };
    let grid = parse_grid(&a.t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let fam = DegeneratingFamily::random(a.g, n, &mut rng).map_err(|e| match e {
        LimitError::InconsistentFamily(m) => usage(m),
        e => e.into(),
    })?;
    let model = fam.model()?;
    let pts = limits::sample_points(&fam, a.samples.max(1), &mut rng);
    let table = limits::limit_residual(&fam, &model, &grid, &pts, a.tol)?;
    let out = match a.format {
        Format::Csv => {
            let mut s = String::from("t,residual\n");
            for (t, r) in &table {
                writeln!(s, "{t},{r:e}").expect("writing to a String cannot fail");
            }
            s
        }
        Format::Json => pretty(&json!({
            "kind": model.kind.name(),
            "g": a.g,
            "rows": table.iter().map(|(t, r)| json!({"t": t, "residual": r})).collect::<Vec<_>>(),
            "monotone": limits::is_monotone(&table),
            "fitted_exponent": limits::fitted_exponent(&table),
        })),
    };
    Ok((out, 0))
}
