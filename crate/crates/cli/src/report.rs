//! Rendering of evaluation results: an aligned human-readable block and a
//! machine-readable `key=value` block.

use graphmal_core::eval::{ConfusionMatrix, MetricsReport};

fn fmt_metric(value: Option<f64>, digits: usize) -> String {
    match value {
        Some(v) => format!("{v:.digits$}"),
        None => "undefined".to_string(),
    }
}

/// Confusion matrix plus the five metrics, aligned for reading.
pub fn render_text(cm: &ConfusionMatrix, metrics: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str("                  predicted\n");
    out.push_str("                  malware   benign\n");
    out.push_str(&format!(
        "truth  malware  {:>9} {:>8}\n",
        cm.true_positives, cm.false_negatives
    ));
    out.push_str(&format!(
        "       benign   {:>9} {:>8}\n\n",
        cm.false_positives, cm.true_negatives
    ));
    for (name, value) in [
        ("precision", metrics.precision),
        ("recall", metrics.recall),
        ("f1", metrics.f1),
        ("false_alarm_rate", metrics.false_alarm_rate),
        ("accuracy", metrics.accuracy),
    ] {
        out.push_str(&format!("{name:<17} {}\n", fmt_metric(value, 4)));
    }
    out
}

/// The same results as `key=value` lines.
pub fn render_kv(cm: &ConfusionMatrix, metrics: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("tp={}\n", cm.true_positives));
    out.push_str(&format!("fn={}\n", cm.false_negatives));
    out.push_str(&format!("fp={}\n", cm.false_positives));
    out.push_str(&format!("tn={}\n", cm.true_negatives));
    for (name, value) in [
        ("precision", metrics.precision),
        ("recall", metrics.recall),
        ("f1", metrics.f1),
        ("false_alarm_rate", metrics.false_alarm_rate),
        ("accuracy", metrics.accuracy),
    ] {
        out.push_str(&format!("{name}={}\n", fmt_metric(value, 6)));
    }
    out
}
