//! JSON renderings of the core reports. Infinities are written as the
//! strings `"inf"` / `"-inf"` since JSON has no literal for them.

use serde_json::{json, Map, Value};

use ncollapse_core::bounds::{BoundCheckReport, BoundDirection};
use ncollapse_core::fewshot::{AccuracyReport, Head, LambdaExponent};
use ncollapse_core::{CdnvReport, GeometryReport};

pub fn num(v: f64) -> Value {
    if v.is_nan() {
        Value::String("nan".into())
    } else if v == f64::INFINITY {
        Value::String("inf".into())
    } else if v == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        json!(v)
    }
}

pub fn cdnv_json(r: &CdnvReport) -> Value {
    let matrix: Vec<Value> = r
        .matrix
        .iter()
        .map(|row| Value::Array(row.iter().map(|v| v.map_or(Value::Null, num)).collect()))
        .collect();
    json!({
        "labels": r.labels,
        "matrix": matrix,
        "average": num(r.average),
        "degenerate_pairs": r.degenerate_pairs.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

pub fn geometry_json(r: &GeometryReport) -> Value {
    json!({
        "min_mean_distance": num(r.min_mean_distance),
        "argmin_pair": [r.argmin_pair.0, r.argmin_pair.1],
        "global_mean": r.global_mean.iter().copied().map(num).collect::<Vec<_>>(),
        "within_trace": num(r.within_trace),
        "between_trace": num(r.between_trace),
    })
}

pub fn head_json(head: &Head) -> Value {
    match *head {
        Head::Ncm => json!({ "kind": "ncm" }),
        Head::Ridge { alpha, exponent } => json!({
            "kind": "ridge",
            "alpha": num(alpha),
            "lambda_exponent": exponent_value(exponent),
        }),
    }
}

fn exponent_value(e: LambdaExponent) -> f64 {
    e.value()
}

pub fn accuracy_json(r: &AccuracyReport) -> Value {
    json!({
        "head": head_json(&r.head),
        "k": r.config.k,
        "n_shot": r.config.n_shot,
        "n_query": r.config.n_query,
        "episodes": r.config.episodes,
        "seed": r.config.seed,
        "mean_accuracy": num(r.mean_accuracy),
        "ci95_halfwidth": num(r.ci95_halfwidth),
        "per_episode": r.per_episode.iter().copied().map(num).collect::<Vec<_>>(),
    })
}

pub fn params_json(params: &[(&str, f64)]) -> Value {
    let mut m = Map::new();
    for &(k, v) in params {
        m.insert(k.to_string(), num(v));
    }
    Value::Object(m)
}

pub fn bound_check_json(r: &BoundCheckReport) -> Value {
    let applicable: Map<String, Value> = r.applicable.iter().map(|(n, v)| (n.clone(), num(*v))).collect();
    json!({
        "bound_name": r.bound_name,
        "params": params_json(&r.params),
        "bound_value": num(r.bound_value),
        "direction": match r.direction {
            BoundDirection::Upper => "upper",
            BoundDirection::Lower => "lower",
        },
        "applicable_bounds": applicable,
        "empirical_estimate": num(r.empirical_estimate),
        "std_error": num(r.std_error),
        "trials": r.trials,
        "seed": r.seed,
        "satisfied": r.satisfied,
    })
}

pub fn bound_value_json(name: &str, params: &[(&str, f64)], value: f64) -> Value {
    json!({
        "bound_name": name,
        "params": params_json(params),
        "bound_value": num(value),
    })
}

/// Pretty-printed with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
