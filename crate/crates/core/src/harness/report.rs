//! Markdown and CSV summaries of experiment results.

use super::experiment::ExperimentResult;

const COLUMNS: [&str; 10] = [
    "env",
    "method",
    "gateway",
    "seeds",
    "coverage",
    "coverage_of",
    "ratio",
    "detection",
    "detection_of",
    "avg_steps",
];

fn row(r: &ExperimentResult) -> [String; 10] {
    let s = &r.summary;
    [
        r.env.to_string(),
        r.method.as_str().to_string(),
        r.gateway.clone(),
        s.seeds.to_string(),
        format!("{:.2}", s.coverage),
        s.coverage_of.to_string(),
        format!("{:.4}", s.ratio),
        format!("{:.2}", s.detection),
        s.detection_of.to_string(),
        format!("{:.2}", s.avg_steps),
    ]
}

/// Method, then gateway, then environment.
fn sorted(results: &[ExperimentResult]) -> Vec<&ExperimentResult> {
    let mut v: Vec<&ExperimentResult> = results.iter().collect();
    v.sort_by(|a, b| (a.method, &a.gateway, a.env.as_str()).cmp(&(b.method, &b.gateway, b.env.as_str())));
    v
}

pub fn markdown(results: &[ExperimentResult]) -> String {
    let mut out = String::from("| env | method | gateway | seeds | coverage | interaction ratio | bug detection | avg steps |\n");
    out.push_str("|---|---|---|---:|---:|---:|---:|---:|\n");
    for r in sorted(results) {
        let c = row(r);
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} / {} | {} | {} / {} | {} |\n",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9]
        ));
    }
    out
}

pub fn csv(results: &[ExperimentResult]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in sorted(results) {
        out.push_str(&row(r).join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvName;
    use crate::harness::{Method, Summary};

    fn result(method: Method, env: EnvName) -> ExperimentResult {
        ExperimentResult {
            env,
            method,
            gateway: "mock".into(),
            summary: Summary {
                seeds: 20,
                coverage: 29.5,
                coverage_of: 30,
                detection: 15.0,
                detection_of: 15,
                ratio: 0.91234,
                avg_steps: 25.0,
            },
            seeds: vec![],
        }
    }

    #[test]
    fn one_row_per_result() {
        let r = [result(Method::KlpegNoKg, EnvName::Craftworld)];
        assert_eq!(
            csv(&r),
            "env,method,gateway,seeds,coverage,coverage_of,ratio,detection,detection_of,avg_steps\n\
             craftworld,klpeg_no_kg,mock,20,29.50,30,0.9123,15.00,15,25.00\n"
        );
        let md = markdown(&r);
        assert_eq!(md.lines().count(), 3);
        assert!(md.contains("| craftworld | klpeg_no_kg | mock | 20 | 29.50 / 30 | 0.9123 | 15.00 / 15 | 25.00 |"));
    }

    #[test]
    fn rows_sorted_by_method_then_gateway() {
        let mut a = result(Method::Klpeg, EnvName::OvercookedLite);
        a.gateway = "gpt".into();
        let b = result(Method::Klpeg, EnvName::Craftworld);
        let c = result(Method::Random, EnvName::Craftworld);
        let text = csv(&[a, b, c]);
        let keys: Vec<String> = text.lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
        assert_eq!(keys, ["craftworld,random,mock", "overcooked_lite,klpeg,gpt", "craftworld,klpeg,mock"]);
    }
}
