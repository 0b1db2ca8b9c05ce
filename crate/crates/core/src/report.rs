//! CSV rendering. Reals carry 17 significant digits so goldens diff cleanly.

use crate::bounds::BoundReport;
use crate::simulate::EstimateReport;

/// 17 significant digits in scientific notation; `NaN`/`inf` spelled out.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Quotes a field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f.as_ref()))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

pub const ESTIMATE_HEADER: &[&str] = &[
    "trials",
    "hits",
    "censored",
    "mean_hit_time",
    "censoring_fraction",
    "standard_error",
];

pub fn estimate_csv(r: &EstimateReport) -> String {
    let mut out = csv_line(ESTIMATE_HEADER);
    out += &csv_line(&[
        r.trials.to_string(),
        r.hits.to_string(),
        r.censored.to_string(),
        fmt_real(r.mean_hit_time),
        fmt_real(r.censoring_fraction),
        fmt_real(r.standard_error),
    ]);
    out
}

pub const BOUND_HEADER: &[&str] = &[
    "name",
    "params",
    "direction",
    "bound_value",
    "measured_value",
    "log_domain",
    "satisfied",
    "slack",
];

pub fn bound_reports_csv(reports: &[BoundReport]) -> String {
    let mut out = csv_line(BOUND_HEADER);
    for r in reports {
        let params = r
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        out += &csv_line(&[
            r.name.clone(),
            params,
            r.direction.to_string(),
            fmt_real(r.bound_value),
            fmt_real(r.measured_value),
            r.log_domain.to_string(),
            r.satisfied.to_string(),
            fmt_real(r.slack),
        ]);
    }
    out
}
