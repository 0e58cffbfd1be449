//! CSV and SVG output, and reading per-trial CSVs back.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Algorithm, GapHistogram, HarnessError, TrialRecord, TrialSummary, GAP_BIN_WIDTH};
use crate::model::{ArmId, Instance};
use crate::regret::RegretTrace;
use crate::Result;

pub const TRIALS_HEADER: [&str; 14] = [
    "trial_id",
    "algorithm",
    "n",
    "param_r_or_C",
    "epsilon",
    "delta",
    "order_seed",
    "reward_seed",
    "returned_arm",
    "best_arm",
    "gap",
    "total_pulls",
    "peak_residency",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 13] = [
    "algorithm",
    "trials",
    "successes",
    "success_rate",
    "failed_trials",
    "mean_gap",
    "max_gap",
    "gap_le_0.05",
    "mean_total_pulls",
    "max_total_pulls",
    "mean_peak_residency",
    "max_peak_residency",
    "mean_regret",
];

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path).map_err(HarnessError::from)?)
}

/// Per-trial CSV. Wall-clock times are written as 0 unless
/// `record_wall_time` is set, so reruns produce identical files.
pub fn write_trials_csv(
    path: impl AsRef<Path>,
    rows: &[TrialRecord],
    record_wall_time: bool,
) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(TRIALS_HEADER).map_err(HarnessError::from)?;
    for r in rows {
        let wall = if record_wall_time { r.wall_ms } else { 0.0 };
        w.write_record([
            r.trial_id.to_string(),
            r.algorithm.to_string(),
            r.n.to_string(),
            r.param.to_string(),
            r.epsilon.to_string(),
            r.delta.to_string(),
            r.order_seed.map(|s| s.to_string()).unwrap_or_default(),
            r.reward_seed.to_string(),
            r.returned_arm.to_string(),
            r.best_arm.to_string(),
            r.gap.to_string(),
            r.total_pulls.to_string(),
            r.peak_residency.to_string(),
            wall.to_string(),
        ])
        .map_err(HarnessError::from)?;
    }
    w.flush().map_err(HarnessError::from)?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        HarnessError::Malformed(format!(
            "row {line}: bad {} value `{raw}`",
            TRIALS_HEADER[i]
        ))
        .into()
    })
}

/// Read a per-trial CSV written by [`write_trials_csv`].
pub fn read_trials_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(HarnessError::from)?;
    let header = r.headers().map_err(HarnessError::from)?.clone();
    if header.iter().ne(TRIALS_HEADER) {
        return Err(HarnessError::Malformed(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        ))
        .into());
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(HarnessError::from)?;
        let line = k as u64 + 2;
        let order_raw = rec.get(6).unwrap_or("");
        let algorithm: Algorithm = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: String| HarnessError::Malformed(format!("row {line}: {e}")))?;
        rows.push(TrialRecord {
            trial_id: field(&rec, 0, line)?,
            algorithm,
            n: field(&rec, 2, line)?,
            param: field(&rec, 3, line)?,
            epsilon: field(&rec, 4, line)?,
            delta: field(&rec, 5, line)?,
            order_seed: if order_raw.is_empty() {
                None
            } else {
                Some(field(&rec, 6, line)?)
            },
            reward_seed: field(&rec, 7, line)?,
            returned_arm: ArmId(field(&rec, 8, line)?),
            best_arm: ArmId(field(&rec, 9, line)?),
            gap: field(&rec, 10, line)?,
            total_pulls: field(&rec, 11, line)?,
            peak_residency: field(&rec, 12, line)?,
            wall_ms: field(&rec, 13, line)?,
            horizon: None,
            regret: None,
        });
    }
    Ok(rows)
}

/// One-row aggregate CSV.
pub fn write_aggregate_csv(path: impl AsRef<Path>, summary: &TrialSummary) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(AGGREGATE_HEADER)
        .map_err(HarnessError::from)?;
    w.write_record([
        summary.algorithm.map(|a| a.to_string()).unwrap_or_default(),
        summary.trials.to_string(),
        summary.success_count.to_string(),
        summary.success_rate().to_string(),
        summary.failures.len().to_string(),
        summary.mean_gap.to_string(),
        summary.max_gap.to_string(),
        summary.fraction_gap_at_most(0.05).to_string(),
        summary.mean_total_pulls.to_string(),
        summary.max_total_pulls.to_string(),
        summary.mean_peak_residency.to_string(),
        summary.max_peak_residency.to_string(),
        summary
            .mean_regret
            .map(|r| r.to_string())
            .unwrap_or_default(),
    ])
    .map_err(HarnessError::from)?;
    w.flush().map_err(HarnessError::from)?;
    Ok(())
}

/// `trial_id,T,regret` for regret runs.
pub fn write_regret_csv(path: impl AsRef<Path>, rows: &[TrialRecord]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["trial_id", "T", "regret"])
        .map_err(HarnessError::from)?;
    for r in rows {
        if let (Some(t), Some(reg)) = (r.horizon, r.regret) {
            w.write_record([r.trial_id.to_string(), t.to_string(), reg.to_string()])
                .map_err(HarnessError::from)?;
        }
    }
    w.flush().map_err(HarnessError::from)?;
    Ok(())
}

/// `t,arm,cumulative_regret`, down-sampled to at most `max_rows` rows.
pub fn write_trace_csv(
    path: impl AsRef<Path>,
    trace: &RegretTrace,
    instance: &Instance,
    max_rows: usize,
) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["t", "arm", "cumulative_regret"])
        .map_err(HarnessError::from)?;
    for p in trace.sampled_curve(instance, max_rows)? {
        w.write_record([
            p.t.to_string(),
            p.arm.to_string(),
            p.cumulative_regret.to_string(),
        ])
        .map_err(HarnessError::from)?;
    }
    w.flush().map_err(HarnessError::from)?;
    Ok(())
}

/// Bar chart of the gap histogram: one bar per bin from 0 up to the last
/// populated bin, returned-arm gap on x, trial count on y.
pub fn histogram_svg(hist: &GapHistogram, title: &str) -> String {
    let bins = hist.populated_span().max(1);
    let peak = hist.counts[..bins]
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(1);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let plot_w = (bins as f64 * 12.0).clamp(240.0, 960.0);
    let plot_h = 300.0;
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;
    let bar_w = plot_w / bins as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (k, &c) in hist.counts[..bins].iter().enumerate() {
        let h = c as f64 / peak as f64 * plot_h;
        let x = left + k as f64 * bar_w;
        let y = top + plot_h - h;
        let _ = writeln!(
            s,
            r##"<rect class="bar" data-bin="{k}" data-count="{c}" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="#4a78b5"/>"##,
            (bar_w - 1.0).max(0.5)
        );
    }
    let axis_y = top + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        left + plot_w
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>"#
    );
    let ticks = bins.min(10);
    for i in 0..=ticks {
        let b = bins * i / ticks;
        let x = left + b as f64 * bar_w;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.3}</text>"#,
            axis_y + 14.0,
            b as f64 * GAP_BIN_WIDTH
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">gap between best mean and returned mean</text>"#,
        left + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{peak}</text>"#,
        left - 6.0,
        top + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">trials</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn write_histogram_svg(path: impl AsRef<Path>, hist: &GapHistogram, title: &str) -> Result<()> {
    fs::write(path, histogram_svg(hist, title)).map_err(HarnessError::from)?;
    Ok(())
}
