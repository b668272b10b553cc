use re_are_core::detector::{
    pd_closed_form, pf_of_threshold, raw_threshold, raw_threshold_from_gamma,
    threshold_for_pf_general,
};
use re_are_core::efficiency::{
    are_from_reports, convergence_sweep, efficacy, relative_efficiency, ScalingSchedule,
};
use re_are_core::mc::{empirical_pf_pd, MCConfig};
use re_are_core::stats::q_function;
use re_are_core::{BuiltinDetector, DiffConfig, GaussianSignalModel, OperatingPoint};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{
    AreArgs, Command, ConvergeArgs, EfficacyArgs, Format, McValidateArgs, ModelArgs, ReArgs,
    RocArgs, ThresholdArgs,
};
use crate::convergence::{format_f64, write_convergence_csv, ConvergenceRow};
use crate::CliError;

pub const SCHEMA_VERSION: &str = "v1";

/// Serialized output of one command.
#[derive(Debug)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    pub format: Format,
    /// Set when the artifact was written but part of the computation failed.
    pub partial_failure: Option<CliError>,
}

fn computation(operation: &str) -> impl Fn(re_are_core::Error) -> CliError + '_ {
    move |e| CliError::Computation {
        operation: e.operation().unwrap_or(operation).to_string(),
        message: e.to_string(),
    }
}

fn usage(e: re_are_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn model(m: &ModelArgs) -> Result<GaussianSignalModel, CliError> {
    GaussianSignalModel::new(m.mu0, m.sigma0_sq, m.mu1, m.sigma1_sq).map_err(usage)
}

fn model_json(m: &ModelArgs) -> Value {
    json!({
        "mu0": m.mu0,
        "sigma0_sq": m.sigma0_sq,
        "mu1": m.mu1,
        "sigma1_sq": m.sigma1_sq,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Raw-scale threshold for `alpha`. The NP detector goes through γ′, which
/// also covers μ0 ≠ 0.
fn threshold_of(
    det: BuiltinDetector,
    m: &GaussianSignalModel,
    n: u64,
    alpha: f64,
) -> re_are_core::Result<(Option<f64>, f64)> {
    match det {
        BuiltinDetector::Np => {
            let g = threshold_for_pf_general(m, n, alpha)?;
            Ok((Some(g), raw_threshold_from_gamma(m, g)))
        }
        _ => Ok((None, raw_threshold(&det.spec(), m, n, alpha)?)),
    }
}

pub fn run(command: &Command) -> Result<Artifact, CliError> {
    let format = command.output().format.unwrap_or(match command {
        Command::Roc(_) | Command::Converge(_) => Format::Csv,
        _ => Format::Json,
    });
    if let Command::Converge(a) = command {
        return converge(a, format);
    }
    let (config, result) = match command {
        Command::Roc(a) => roc(a)?,
        Command::Threshold(a) => threshold(a)?,
        Command::Efficacy(a) => efficacy_cmd(a)?,
        Command::Are(a) => are_cmd(a)?,
        Command::Re(a) => re_cmd(a)?,
        Command::McValidate(a) => mc_validate(a)?,
        Command::Converge(_) => unreachable!(),
    };
    let bytes = match format {
        Format::Json => envelope(command.name(), config, result),
        Format::Csv => flat_csv(&result)?,
    };
    Ok(Artifact {
        bytes,
        format,
        partial_failure: None,
    })
}

fn envelope(command: &str, config: Value, result: Value) -> Vec<u8> {
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "result": result,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("json values serialize");
    bytes.push(b'\n');
    bytes
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One CSV row per object; a single object gives a single row.
fn flat_csv(result: &Value) -> Result<Vec<u8>, CliError> {
    let rows: Vec<&Map<String, Value>> = match result {
        Value::Object(o) => vec![o],
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        _ => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    if let Some(first) = rows.first() {
        w.write_record(first.keys()).map_err(io)?;
    }
    for row in rows {
        w.write_record(row.values().map(csv_field)).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn roc(a: &RocArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let det = a.detector.spec();
    let op = computation("roc");
    let mut rows = Vec::with_capacity(a.points as usize);
    for i in 1..=a.points {
        let alpha = i as f64 / (a.points + 1) as f64;
        let (_, t) = threshold_of(a.detector, &m, a.n, alpha).map_err(&op)?;
        let pd = pd_closed_form(&m, &det, a.n, alpha).map_err(&op)?;
        rows.push(json!({ "alpha": alpha, "threshold": t, "pd": pd }));
    }
    let config = merge(
        model_json(&a.model),
        json!({ "detector": a.detector.to_string(), "n": a.n, "points": a.points }),
    );
    Ok((config, Value::Array(rows)))
}

fn threshold(a: &ThresholdArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let op = computation("threshold");
    let (gamma_prime, raw) = threshold_of(a.detector, &m, a.n, a.alpha).map_err(&op)?;
    let pf = match gamma_prime {
        Some(g) => pf_of_threshold(&m, a.n, g),
        None => {
            let det = a.detector.spec();
            let nf = a.n as f64;
            det.mean_h0(nf, &m)
                .and_then(|mu| Ok((mu, det.var_h0(nf, &m)?.sqrt())))
                .and_then(|(mu, sd)| q_function((raw - mu) / sd))
        }
    }
    .map_err(&op)?;
    let config = merge(
        model_json(&a.model),
        json!({ "detector": a.detector.to_string(), "n": a.n, "alpha": a.alpha }),
    );
    let result = json!({
        "detector": a.detector.to_string(),
        "n": a.n,
        "alpha": a.alpha,
        "gamma_prime": gamma_prime,
        "raw_threshold": raw,
        "pf": pf,
    });
    Ok((config, result))
}

fn efficacy_cmd(a: &EfficacyArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let r = efficacy(&a.detector.spec(), &m, a.n, &DiffConfig::default())
        .map_err(computation("efficacy"))?;
    let config = merge(
        model_json(&a.model),
        json!({ "detector": a.detector.to_string(), "n": a.n }),
    );
    let result = merge(
        json!({ "detector": a.detector.to_string() }),
        merge(to_value(&r), json!({ "efficacy": r.efficacy() })),
    );
    Ok((config, result))
}

fn are_cmd(a: &AreArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let cfg = DiffConfig::default();
    let op = computation("are");
    let ea = efficacy(&a.a.spec(), &m, a.n, &cfg).map_err(&op)?;
    let eb = efficacy(&a.b.spec(), &m, a.n, &cfg).map_err(&op)?;
    let are = are_from_reports(&ea, &eb).map_err(&op)?;
    let config = merge(
        model_json(&a.model),
        json!({ "a": a.a.to_string(), "b": a.b.to_string(), "n": a.n }),
    );
    let result = json!({
        "a": a.a.to_string(),
        "b": a.b.to_string(),
        "nu": ea.nu,
        "sqrt_efficacy_a": ea.sqrt_efficacy,
        "sqrt_efficacy_b": eb.sqrt_efficacy,
        "are": are,
    });
    Ok((config, result))
}

fn operating_point(alpha: f64, beta: f64) -> Result<OperatingPoint, CliError> {
    OperatingPoint::new(alpha, beta).map_err(usage)
}

fn re_cmd(a: &ReArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let op_point = operating_point(a.alpha, a.beta)?;
    let r = relative_efficiency(&a.a.spec(), &a.b.spec(), &m, &op_point, a.n_max)
        .map_err(computation("relative_efficiency"))?;
    let config = merge(
        model_json(&a.model),
        json!({
            "a": a.a.to_string(),
            "b": a.b.to_string(),
            "alpha": a.alpha,
            "beta": a.beta,
            "n_max": a.n_max,
        }),
    );
    let result = merge(
        json!({ "a": a.a.to_string(), "b": a.b.to_string() }),
        to_value(&r),
    );
    Ok((config, result))
}

fn mc_validate(a: &McValidateArgs) -> Result<(Value, Value), CliError> {
    let m = model(&a.model)?;
    let det = a.detector.spec();
    let cfg = match a.batch_size {
        Some(b) => MCConfig::new(a.trials, a.seed, b),
        None => MCConfig::with_default_batches(a.trials, a.seed),
    }
    .map_err(usage)?;
    let op = computation("mc_validate");
    let (_, t) = threshold_of(a.detector, &m, a.n, a.alpha).map_err(&op)?;
    let (pf, pd) = empirical_pf_pd(&m, &det, a.n as usize, t, &cfg).map_err(&op)?;
    // The NP moment maps assume mu0 = 0; elsewhere no closed-form P_D exists.
    let closed = pd_closed_form(&m, &det, a.n, a.alpha).ok();
    let config = merge(
        model_json(&a.model),
        json!({
            "detector": a.detector.to_string(),
            "n": a.n,
            "alpha": a.alpha,
            "trials": a.trials,
            "seed": a.seed,
        }),
    );
    let result = json!({
        "detector": a.detector.to_string(),
        "n": a.n,
        "alpha": a.alpha,
        "trials": a.trials,
        "seed": a.seed,
        "threshold": t,
        "pf": pf.estimate,
        "pf_stderr": pf.stderr,
        "pf_ci_low": pf.ci_low,
        "pf_ci_high": pf.ci_high,
        "pd": pd.estimate,
        "pd_stderr": pd.stderr,
        "pd_ci_low": pd.ci_low,
        "pd_ci_high": pd.ci_high,
        "pd_closed_form": closed,
        "pf_within_3se": (pf.estimate - a.alpha).abs() <= 3.0 * pf.stderr,
        "pd_within_tolerance": closed.map(|c| (pd.estimate - c).abs() <= (3.0 * pd.stderr).max(0.01)),
    });
    Ok((config, result))
}

fn converge(a: &ConvergeArgs, format: Format) -> Result<Artifact, CliError> {
    if a.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "--n-grid must be strictly increasing".into(),
        ));
    }
    let template =
        GaussianSignalModel::new(a.model.mu0, a.model.sigma0_sq, 0.0, 1.0).map_err(usage)?;
    let op_point = operating_point(a.alpha, a.beta)?;
    let schedule = ScalingSchedule {
        c_mu: a.c_mu,
        mean_rate: a.mean_rate,
        c_var: a.c_var,
        var_exponent: a.var_exponent,
    };
    let points = convergence_sweep(
        &a.a.spec(),
        &a.b.spec(),
        &template,
        &schedule,
        &op_point,
        &a.n_grid,
        a.n_max,
        &DiffConfig::default(),
    )
    .map_err(computation("convergence_sweep"))?;
    let rows: Vec<ConvergenceRow> = points.iter().map(ConvergenceRow::from).collect();
    let partial_failure = points.iter().find_map(|p| {
        p.outcome.as_ref().err().map(|e| CliError::Computation {
            operation: e.operation().unwrap_or("convergence_sweep").to_string(),
            message: format!("grid N = {}: {e}", p.grid_n),
        })
    });
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_convergence_csv(&rows, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            buf
        }
        Format::Json => {
            let config = json!({
                "mu0": a.model.mu0,
                "sigma0_sq": a.model.sigma0_sq,
                "a": a.a.to_string(),
                "b": a.b.to_string(),
                "alpha": a.alpha,
                "beta": a.beta,
                "n_grid": a.n_grid,
                "c_mu": a.c_mu,
                "mean_rate": to_value(&a.mean_rate),
                "c_var": a.c_var,
                "var_exponent": a.var_exponent,
                "n_max": a.n_max,
            });
            let result: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let rec = r.record.as_ref();
                    json!({
                        "grid_n": r.grid_n,
                        "n_a": rec.map(|x| x.n_a),
                        "n_b": rec.map(|x| x.n_b),
                        "mu1": r.mu1,
                        "sigma1_sq": r.sigma1_sq,
                        "re": rec.map(|x| x.re),
                        "are": rec.map(|x| x.are),
                        "u": rec.map(|x| x.u),
                        "rhs": rec.map(|x| x.rhs),
                        "relative_gap": rec.map(|x| x.relative_gap),
                        "error": r.error,
                    })
                })
                .collect();
            envelope("converge", config, Value::Array(result))
        }
    };
    Ok(Artifact {
        bytes,
        format,
        partial_failure,
    })
}
