//! Line-oriented metric reports: JSON objects by default, CSV on request.

use mdlatlrr::MetricReport;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const METRIC_NAMES: [&str; 7] = ["En", "MI", "SD", "Qabf", "SCD", "SSIMa", "MS_SSIM"];

/// Field-wise mean over a batch of reports.
pub fn mean_report(reports: &[MetricReport]) -> MetricReport {
    let n = reports.len() as f64;
    let mut sums = [0.0; 7];
    for r in reports {
        for (slot, (_, v)) in sums.iter_mut().zip(r.values()) {
            *slot += v;
        }
    }
    MetricReport {
        en: sums[0] / n,
        mi: sums[1] / n,
        sd: sums[2] / n,
        qabf: sums[3] / n,
        scd: sums[4] / n,
        ssim_a: sums[5] / n,
        ms_ssim: sums[6] / n,
    }
}

fn push_metrics(obj: &mut Map<String, Value>, r: &MetricReport) {
    for (name, value) in r.values() {
        obj.insert(name.into(), json!(value));
    }
}

fn metric_csv(r: &MetricReport) -> String {
    let vals: Vec<String> = r.values().iter().map(|(_, v)| v.to_string()).collect();
    vals.join(",")
}

pub fn eval_header(format: ReportFormat) -> Option<String> {
    match format {
        ReportFormat::Json => None,
        ReportFormat::Csv => Some(format!("pair_id,pairs,{}", METRIC_NAMES.join(","))),
    }
}

/// One eval record; `pairs` marks the aggregate row.
pub fn eval_line(
    format: ReportFormat,
    pair_id: &str,
    pairs: Option<usize>,
    r: &MetricReport,
) -> String {
    match format {
        ReportFormat::Json => {
            let mut obj = Map::new();
            obj.insert("pair_id".into(), json!(pair_id));
            if let Some(n) = pairs {
                obj.insert("pairs".into(), json!(n));
            }
            push_metrics(&mut obj, r);
            Value::Object(obj).to_string()
        }
        ReportFormat::Csv => {
            let pairs = pairs.map(|n| n.to_string()).unwrap_or_default();
            format!("{pair_id},{pairs},{}", metric_csv(r))
        }
    }
}

pub fn bench_header(format: ReportFormat) -> Option<String> {
    match format {
        ReportFormat::Json => None,
        ReportFormat::Csv => Some(format!(
            "sweep,norm,level,stride,pairs,seed,seconds,{}",
            METRIC_NAMES.join(",")
        )),
    }
}

/// One sweep cell: mean metrics over the dataset plus wall time.
#[allow(clippy::too_many_arguments)]
pub fn bench_line(
    format: ReportFormat,
    sweep: &str,
    norm: &str,
    level: usize,
    stride: usize,
    pairs: usize,
    seed: u64,
    seconds: f64,
    r: &MetricReport,
) -> String {
    match format {
        ReportFormat::Json => {
            let mut obj = Map::new();
            obj.insert("sweep".into(), json!(sweep));
            obj.insert("norm".into(), json!(norm));
            obj.insert("level".into(), json!(level));
            obj.insert("stride".into(), json!(stride));
            obj.insert("pairs".into(), json!(pairs));
            obj.insert("seed".into(), json!(seed));
            obj.insert("seconds".into(), json!(seconds));
            push_metrics(&mut obj, r);
            Value::Object(obj).to_string()
        }
        ReportFormat::Csv => format!(
            "{sweep},{norm},{level},{stride},{pairs},{seed},{seconds},{}",
            metric_csv(r)
        ),
    }
}
