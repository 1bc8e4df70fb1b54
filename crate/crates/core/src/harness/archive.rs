//! On-disk record of an experiment. Contents depend only on the config, so
//! two runs of the same config write identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::experiment::Experiment;
use super::HarnessError;

/// Writes `result.json`, `digests.txt` and, for pipeline methods,
/// `tests.json`, `updates.json` and `audit.jsonl`. With `keep_traces`, every
/// trace also goes to `traces/s<seed>/<id>.jsonl`.
pub fn write_archive(dir: &Path, exp: &Experiment, keep_traces: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("result.json"), serde_json::to_string_pretty(&exp.result)? + "\n")?;

    let mut digests = String::new();
    for s in &exp.result.seeds {
        for r in &s.runs {
            digests.push_str(&format!("{} {} {}\n", s.metrics.seed, r.id, r.digest));
        }
    }
    fs::write(dir.join("digests.txt"), digests)?;

    if !exp.outcomes.is_empty() {
        let tests: Vec<_> = exp.tests().collect();
        fs::write(dir.join("tests.json"), serde_json::to_string_pretty(&tests)? + "\n")?;
        let updates: Vec<serde_json::Value> = exp
            .outcomes
            .iter()
            .map(|o| {
                serde_json::json!({
                    "update": o.update,
                    "from_version": o.from_version,
                    "to_version": o.to_version,
                    "delta": o.delta,
                    "sync": o.sync,
                    "entries": o.entries,
                })
            })
            .collect();
        fs::write(dir.join("updates.json"), serde_json::to_string_pretty(&updates)? + "\n")?;
        let mut audit = fs::File::create(dir.join("audit.jsonl"))?;
        for record in exp.outcomes.iter().flat_map(|o| &o.audit) {
            writeln!(audit, "{}", serde_json::to_string(record)?)?;
        }
    }

    if keep_traces {
        for (s, traces) in exp.result.seeds.iter().zip(&exp.traces) {
            let sub = dir.join("traces").join(format!("s{}", s.metrics.seed));
            fs::create_dir_all(&sub)?;
            for (r, t) in s.runs.iter().zip(traces) {
                fs::write(sub.join(format!("{}.jsonl", r.id)), t.to_jsonl())?;
            }
        }
    }
    Ok(())
}
