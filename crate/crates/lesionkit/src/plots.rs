//! Loss and ROC artefacts: CSV tables plus minimal SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use lesionkit_core::metrics::RocCurve;
use lesionkit_core::trainer::EpochLog;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

struct Series<'a> {
    name: &'a str,
    colour: &'a str,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    x_range: (f64, f64),
    y_range: (f64, f64),
    series: &[Series<'_>],
) -> String {
    let span = |(lo, hi): (f64, f64)| if hi > lo { hi - lo } else { 1.0 };
    let sx = |x: f64| MARGIN + (x - x_range.0) / span(x_range) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y_range.0) / span(y_range) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>
<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>
<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        W / 2.0,
        escape(title),
        H - MARGIN,
        W - MARGIN,
        H - MARGIN,
        H - MARGIN,
        W / 2.0,
        H - 12.0,
        escape(x_label),
        H / 2.0,
        H / 2.0,
        escape(y_label),
    );
    for (x, anchor) in [(x_range.0, "start"), (x_range.1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{}</text>"#,
            sx(x),
            H - MARGIN + 14.0,
            fmt_tick(x)
        );
    }
    for y in [y_range.0, y_range.1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
            MARGIN - 4.0,
            sy(y) + 4.0,
            fmt_tick(y)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let pts = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{pts}"><title>{}</title></polyline>"#,
            ser.colour,
            escape(ser.name)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            W - MARGIN - 90.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            ser.colour,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

pub fn loss_csv(logs: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss\n");
    for l in logs {
        let _ = writeln!(s, "{},{},{}", l.epoch, l.train_loss, l.val_loss);
    }
    s
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr\n");
    for (x, y) in &roc.points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

pub fn loss_svg(logs: &[EpochLog]) -> String {
    let pick = |f: fn(&EpochLog) -> f64| {
        logs.iter()
            .map(|l| (l.epoch as f64, f(l)))
            .collect::<Vec<_>>()
    };
    let train = pick(|l| l.train_loss);
    let val = pick(|l| l.val_loss);
    let ys = train
        .iter()
        .chain(&val)
        .map(|p| p.1)
        .filter(|v| v.is_finite());
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let y_range = if lo.is_finite() {
        (lo.min(0.0), hi)
    } else {
        (0.0, 1.0)
    };
    let x_hi = logs.last().map_or(1.0, |l| l.epoch as f64);
    line_chart(
        "Loss by epoch",
        "epoch",
        "loss",
        (0.0, x_hi),
        y_range,
        &[
            Series {
                name: "train",
                colour: "#1f77b4",
                points: train,
            },
            Series {
                name: "validation",
                colour: "#d62728",
                points: val,
            },
        ],
    )
}

pub fn roc_svg(title: &str, roc: &RocCurve) -> String {
    line_chart(
        &format!("{title} (AUC {:.3})", roc.auc),
        "false positive rate",
        "true positive rate",
        (0.0, 1.0),
        (0.0, 1.0),
        &[Series {
            name: "ROC",
            colour: "#2ca02c",
            points: roc.points.clone(),
        }],
    )
}

/// Writes `loss.{csv,svg}` and, for each curve given, `roc_<part>.{csv,svg}`.
pub fn emit_plots(
    row_dir: &Path,
    logs: &[EpochLog],
    val_roc: Option<&RocCurve>,
    test_roc: Option<&RocCurve>,
) -> io::Result<()> {
    fs::create_dir_all(row_dir)?;
    fs::write(row_dir.join("loss.csv"), loss_csv(logs))?;
    fs::write(row_dir.join("loss.svg"), loss_svg(logs))?;
    for (part, title, roc) in [
        ("val", "Validation ROC", val_roc),
        ("test", "Test ROC", test_roc),
    ] {
        if let Some(roc) = roc {
            fs::write(row_dir.join(format!("roc_{part}.csv")), roc_csv(roc))?;
            fs::write(row_dir.join(format!("roc_{part}.svg")), roc_svg(title, roc))?;
        }
    }
    Ok(())
}
