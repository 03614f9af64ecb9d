//! Merges the per-command results of one output directory into `summary.json`.

use std::collections::BTreeMap;
use std::path::Path;

use grushin_core::{Error, Result};
use serde_json::{json, Map, Value};

use crate::output::{write_json, SCHEMA_VERSION};

pub const COMMANDS: [&str; 5] = ["identities", "quad-selftest", "hardy", "frequency", "solve"];

#[derive(Default)]
struct InequalityTally {
    pass: usize,
    fail: usize,
    reported: usize,
    max_ratio: Option<f64>,
    max_empirical_constant: Option<f64>,
}

fn fmax(a: Option<f64>, b: f64) -> Option<f64> {
    if !b.is_finite() {
        return a;
    }
    Some(a.map_or(b, |a| a.max(b)))
}

/// Per-inequality verdict counts read back from the wide `hardy.csv`.
fn hardy_table(path: &Path) -> Result<BTreeMap<String, InequalityTally>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let header = rd.headers().map_err(|e| Error::Input(format!("hardy.csv: {e}")))?.clone();
    let mut out = BTreeMap::<String, InequalityTally>::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Input(format!("hardy.csv: {e}")))?;
        for (col, val) in header.iter().zip(rec.iter()) {
            if let Some(id) = col.strip_suffix("_verdict") {
                let t = out.entry(id.to_string()).or_default();
                match val {
                    "PASS" => t.pass += 1,
                    "FAIL" => t.fail += 1,
                    _ => t.reported += 1,
                }
            } else if let Some(id) = col.strip_suffix("_ratio") {
                if let Ok(v) = val.parse::<f64>() {
                    let t = out.entry(id.to_string()).or_default();
                    t.max_ratio = fmax(t.max_ratio, v);
                }
            } else if let Some(id) = col.strip_suffix("_empirical_constant") {
                if let Ok(v) = val.parse::<f64>() {
                    let t = out.entry(id.to_string()).or_default();
                    t.max_empirical_constant = fmax(t.max_empirical_constant, v);
                }
            }
        }
    }
    Ok(out)
}

fn frequency_constants(summary: &Value) -> Value {
    let pick = |path: &[&str]| {
        let mut v = summary;
        for k in path {
            v = v.get(*k).unwrap_or(&Value::Null);
        }
        v.clone()
    };
    json!({
        "beta_hat": pick(&["monotonicity", "beta_hat"]),
        "gamma_hat": pick(&["doubling", "gamma_hat"]),
        "a_hat": pick(&["doubling", "a_hat"]),
        "max_doubling_ratio": pick(&["doubling", "max_ratio"]),
        "energy_claim_constant": pick(&["energy_claim_constant"]),
        "caccioppoli_constant": pick(&["caccioppoli", "empirical_c"]),
    })
}

/// Writes `summary.json`; `Ok(false)` when any command failed.
pub fn report(dir: &Path) -> Result<bool> {
    if !dir.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", dir.display())));
    }
    let mut commands = Map::new();
    let mut pass = true;
    for name in COMMANDS {
        let path = dir.join(format!("{name}.json"));
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let ok = doc.get("pass").and_then(Value::as_bool).ok_or_else(|| Error::Input(format!("{}: no verdict", path.display())))?;
        pass &= ok;
        let summary = doc.get("summary").cloned().unwrap_or(Value::Null);
        let mut entry = json!({ "pass": ok, "summary": summary });
        if name == "frequency" {
            entry["constants"] = frequency_constants(&summary);
        }
        if name == "solve" {
            if let Some(f) = summary.get("frequency") {
                entry["constants"] = frequency_constants(f);
            }
        }
        commands.insert(name.to_string(), entry);
    }
    if commands.is_empty() {
        return Err(Error::Input(format!("no command results in {}", dir.display())));
    }
    let mut inequalities = Map::new();
    let hardy_csv = dir.join("hardy.csv");
    if hardy_csv.is_file() {
        for (id, t) in hardy_table(&hardy_csv)? {
            inequalities.insert(
                id,
                json!({
                    "pass": t.pass,
                    "fail": t.fail,
                    "reported": t.reported,
                    "max_ratio": t.max_ratio,
                    "max_empirical_constant": t.max_empirical_constant,
                }),
            );
        }
    }
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "pass": pass,
        "commands": commands,
        "inequalities": inequalities,
    });
    write_json(&dir.join("summary.json"), &doc)?;
    Ok(pass)
}
