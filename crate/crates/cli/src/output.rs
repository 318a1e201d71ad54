//! CSV and SVG emission.
//!
//! An experiment's CSV holds two tables separated by a blank line, each
//! introduced by a `#` tag line naming its schema version: the raw records,
//! then the per-iteration summary. Empty fields mean "not applicable"
//! (step size of a perfect-reward run, interval of a single trial).

use std::fmt::Write as _;

use crate::experiment::{RunRecord, Series, SummaryRow};

pub const RECORDS_TAG: &str = "# hdmc run-records v1";
pub const SUMMARY_TAG: &str = "# hdmc summary v1";

pub const RECORD_COLUMNS: [&str; 12] = [
    "variant",
    "algorithm",
    "reward_mode",
    "step_size",
    "trial",
    "iteration",
    "discounted_return",
    "dynamics_examples",
    "reward_examples",
    "mean_log_loss",
    "mean_reward_residual",
    "diverged_fraction",
];

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "variant",
    "algorithm",
    "reward_mode",
    "step_size",
    "iteration",
    "trials",
    "mean",
    "ci95_low",
    "ci95_high",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn series_fields(s: &Series) -> [String; 3] {
    [s.method.name().to_string(), opt(s.reward_mode.map(|m| m.name())), opt(s.step_size)]
}

fn table<const N: usize>(tag: &str, columns: [&str; N], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(format!("{tag}\n").into_bytes());
    w.write_record(columns).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

pub fn records_csv(records: &[RunRecord]) -> String {
    table(
        RECORDS_TAG,
        RECORD_COLUMNS,
        records.iter().map(|r| {
            let [alg, mode, step] = series_fields(&r.series);
            vec![
                r.variant.name().to_string(),
                alg,
                mode,
                step,
                r.trial.to_string(),
                r.iteration.to_string(),
                r.discounted_return.to_string(),
                r.dynamics_examples.to_string(),
                r.reward_examples.to_string(),
                r.mean_log_loss.to_string(),
                r.mean_reward_residual.to_string(),
                r.diverged_fraction.to_string(),
            ]
        }),
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    table(
        SUMMARY_TAG,
        SUMMARY_COLUMNS,
        rows.iter().map(|r| {
            let [alg, mode, step] = series_fields(&r.series);
            vec![
                r.variant.name().to_string(),
                alg,
                mode,
                step,
                r.iteration.to_string(),
                r.interval.n.to_string(),
                r.interval.mean.to_string(),
                opt(r.interval.low()),
                opt(r.interval.high()),
            ]
        }),
    )
}

/// Records, a blank line, then the summary.
pub fn experiment_csv(records: &[RunRecord], summary: &[SummaryRow]) -> String {
    format!("{}\n{}", records_csv(records), summary_csv(summary))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Mean return against iteration, one line per series with its 95% band.
pub fn line_chart(title: &str, summary: &[SummaryRow]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 200.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let lo = |r: &SummaryRow| r.interval.low().unwrap_or(r.interval.mean);
    let hi = |r: &SummaryRow| r.interval.high().unwrap_or(r.interval.mean);
    let max_it = summary.iter().map(|r| r.iteration).max().unwrap_or(1).max(2) as f64;
    let mut y0 = summary.iter().map(lo).fold(0.0, f64::min);
    let mut y1 = summary.iter().map(hi).fold(1.0, f64::max);
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let px = |it: usize| left + pw * (it as f64 - 1.0) / (max_it - 1.0);
    let py = |v: f64| top + ph * (1.0 - (v - y0) / (y1 - y0));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            left - 4.0,
            py(v) + 4.0
        );
    }
    for k in 0..=4 {
        let it = 1 + ((max_it - 1.0) * k as f64 / 4.0).round() as usize;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{it}</text>"#,
            px(it),
            top + ph + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">iteration</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">discounted return</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, s) in series_of_summary(summary).iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let rows: Vec<&SummaryRow> = summary.iter().filter(|r| r.series == *s).collect();
        let upper = rows.iter().map(|r| format!("{:.2},{:.2}", px(r.iteration), py(hi(r))));
        let lower = rows.iter().rev().map(|r| format!("{:.2},{:.2}", px(r.iteration), py(lo(r))));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.iteration), py(r.interval.mean)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = top + 10.0 + 16.0 * i as f64;
        let lx = left + pw + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            ly + 4.0,
            escape(&s.label())
        );
    }
    out.push_str("</svg>\n");
    out
}

fn series_of_summary(summary: &[SummaryRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in summary {
        if !out.contains(&r.series) {
            out.push(r.series);
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Keeps only the records of `series`.
pub fn only(records: &[RunRecord], series: &Series) -> Vec<RunRecord> {
    records.iter().filter(|r| r.series == *series).cloned().collect()
}

