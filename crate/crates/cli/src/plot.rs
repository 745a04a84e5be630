//! Training curves as a standalone SVG: accuracy on the left, loss on the
//! right, train and validation series in each.

use std::fmt::Write;

use gradecast_core::train::{EpochRecord, TrainHistory};

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const TRAIN_COLOR: &str = "#1f77b4";
const VAL_COLOR: &str = "#ff7f0e";

struct Series<'a> {
    name: &'a str,
    class: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    y_max: f64,
    series: Vec<Series<'a>>,
}

fn series<'a>(
    history: &TrainHistory,
    name: &'a str,
    class: &'a str,
    color: &'a str,
    value: impl Fn(&EpochRecord) -> Option<f64>,
) -> Option<Series<'a>> {
    let points: Option<Vec<(f64, f64)>> = history
        .epochs
        .iter()
        .map(|e| value(e).map(|v| (e.epoch as f64, v)))
        .collect();
    points.map(|points| Series {
        name,
        class,
        color,
        points,
    })
}

fn nice_max(max: f64) -> f64 {
    if !(max.is_finite() && max > 0.0) {
        return 1.0;
    }
    let step = 10f64.powf(max.log10().floor() - 1.0);
    ((max * 1.05) / step).ceil() * step
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_panel(out: &mut String, panel: &Panel, x_offset: f64, first_epoch: f64, last_epoch: f64) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let x0 = x_offset + MARGIN_L;
    let y0 = MARGIN_T + plot_h;
    let span = last_epoch - first_epoch;
    let sx = |epoch: f64| {
        if span == 0.0 {
            x0 + plot_w / 2.0
        } else {
            x0 + (epoch - first_epoch) / span * plot_w
        }
    };
    let sy = |v: f64| y0 - (v / panel.y_max).clamp(0.0, 1.0) * plot_h;

    let _ = writeln!(out, "<g class=\"panel\">");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        x0 + plot_w / 2.0,
        MARGIN_T - 18.0,
        escape(panel.title)
    );
    let _ = writeln!(
        out,
        "<line class=\"axis\" x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{:.1}\" y2=\"{y0:.1}\" stroke=\"#000\"/>",
        x0 + plot_w
    );
    let _ = writeln!(
        out,
        "<line class=\"axis\" x1=\"{x0:.1}\" y1=\"{MARGIN_T:.1}\" x2=\"{x0:.1}\" y2=\"{y0:.1}\" stroke=\"#000\"/>"
    );
    for i in 0..=4 {
        let v = panel.y_max * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{x0:.1}\" y2=\"{y:.1}\" stroke=\"#000\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{v:.2}</text>",
            x0 - 4.0,
            x0 - 7.0,
            y + 4.0
        );
    }
    let ticks: Vec<f64> = if span == 0.0 {
        vec![first_epoch]
    } else {
        let step = (span / 6.0).ceil().max(1.0);
        let mut t = Vec::new();
        let mut e = first_epoch;
        while e <= last_epoch {
            t.push(e);
            e += step;
        }
        t
    };
    for e in ticks {
        let x = sx(e);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#000\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{e}</text>",
            y0 + 4.0,
            y0 + 17.0
        );
    }
    let _ = writeln!(
        out,
        "<text class=\"x-label\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">epoch</text>",
        x0 + plot_w / 2.0,
        y0 + 36.0
    );
    let _ = writeln!(
        out,
        "<text class=\"y-label\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
        x_offset + 16.0,
        MARGIN_T + plot_h / 2.0,
        x_offset + 16.0,
        MARGIN_T + plot_h / 2.0,
        escape(panel.y_label)
    );

    for s in &panel.series {
        if s.points.len() == 1 {
            let (e, v) = s.points[0];
            let _ = writeln!(
                out,
                "<circle class=\"{}\" data-series=\"{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>",
                s.class,
                s.name,
                sx(e),
                sy(v),
                s.color
            );
        } else {
            let points: Vec<String> = s
                .points
                .iter()
                .map(|&(e, v)| format!("{:.2},{:.2}", sx(e), sy(v)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline class=\"{}\" data-series=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
                s.class,
                s.name,
                s.color,
                points.join(" ")
            );
        }
    }

    let _ = writeln!(out, "<g class=\"legend\">");
    for (i, s) in panel.series.iter().enumerate() {
        let lx = x0 + plot_w - 130.0;
        let ly = MARGIN_T + 12.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"14\" height=\"4\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>",
            ly - 4.0,
            s.color,
            lx + 20.0,
            ly + 1.0,
            escape(s.name)
        );
    }
    let _ = writeln!(out, "</g>\n</g>");
}

/// Renders both charts. Returns `None` for an empty history.
pub fn render_svg(history: &TrainHistory) -> Option<String> {
    let first = history.first()?.epoch as f64;
    let last = history.last()?.epoch as f64;

    let accuracy = Panel {
        title: "Training and Validation Accuracy",
        y_label: "accuracy",
        y_max: 1.0,
        series: [
            series(history, "Training Accuracy", "train-accuracy", TRAIN_COLOR, |e| {
                Some(e.train_accuracy)
            }),
            series(history, "Validation Accuracy", "val-accuracy", VAL_COLOR, |e| {
                e.val_accuracy
            }),
        ]
        .into_iter()
        .flatten()
        .collect(),
    };
    let loss_max = history
        .epochs
        .iter()
        .flat_map(|e| [Some(e.train_loss), e.val_loss])
        .flatten()
        .fold(0.0, f64::max);
    let loss = Panel {
        title: "Training and Validation Loss",
        y_label: "loss",
        y_max: nice_max(loss_max),
        series: [
            series(history, "Training Loss", "train-loss", TRAIN_COLOR, |e| {
                Some(e.train_loss)
            }),
            series(history, "Validation Loss", "val-loss", VAL_COLOR, |e| e.val_loss),
        ]
        .into_iter()
        .flatten()
        .collect(),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">",
        w = 2.0 * PANEL_W,
        h = PANEL_H
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>");
    draw_panel(&mut out, &accuracy, 0.0, first, last);
    draw_panel(&mut out, &loss, PANEL_W, first, last);
    out.push_str("</svg>\n");
    Some(out)
}
