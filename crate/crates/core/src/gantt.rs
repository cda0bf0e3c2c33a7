//! Static Gantt rendering of a schedule trace: one lane per GPU index,
//! colored bars per application, time axis in seconds. Output is plain SVG
//! text and byte-identical for identical inputs.

use std::collections::BTreeMap;

use crate::sim::{EventKind, ScheduleTrace};

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

const LANE_HEIGHT: f64 = 28.0;
const LANE_GAP: f64 = 6.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 42.0;
const MARGIN_RIGHT: f64 = 150.0;
const PLOT_WIDTH: f64 = 760.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// A tick step of 1, 2, or 5 times a power of ten near `span / 6`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a trace as a standalone SVG document.
pub fn render_gantt(trace: &ScheduleTrace) -> String {
    let lanes = trace.platform.total_gpus.max(1);
    let plot_height = lanes as f64 * (LANE_HEIGHT + LANE_GAP) - LANE_GAP;
    let width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT;
    let height = MARGIN_TOP + plot_height + MARGIN_BOTTOM;

    // (app, start, end, gpus), in launch order.
    let mut spans: Vec<(String, f64, f64, Vec<u32>)> = Vec::new();
    let mut finish_times: BTreeMap<&str, f64> = BTreeMap::new();
    for ev in &trace.events {
        if ev.kind == EventKind::Finish {
            finish_times.insert(&ev.app_id, ev.time_s);
        }
    }
    for ev in &trace.events {
        if ev.kind == EventKind::Launch {
            let end = finish_times.get(ev.app_id.as_str()).copied().unwrap_or(trace.makespan_s);
            spans.push((ev.app_id.clone(), ev.time_s, end, ev.gpus.clone()));
        }
    }

    let mut colors: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, (app, ..)) in spans.iter().enumerate() {
        colors.entry(app).or_insert(PALETTE[i % PALETTE.len()]);
    }

    let makespan = trace.makespan_s;
    let scale = if makespan > 0.0 { PLOT_WIDTH / makespan } else { 0.0 };
    let x = |t: f64| MARGIN_LEFT + t * scale;
    let lane_y = |gpu: u32| MARGIN_TOP + gpu as f64 * (LANE_HEIGHT + LANE_GAP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"20\" font-size=\"14\">{} schedule on {} (makespan {} s)</text>\n",
        fmt(MARGIN_LEFT),
        xml_escape(&trace.policy),
        xml_escape(&trace.platform.name),
        fmt(makespan)
    ));

    // Lane backgrounds and labels.
    for gpu in 0..lanes {
        let y = lane_y(gpu);
        svg.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#f2f2f2\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(y),
            fmt(PLOT_WIDTH),
            fmt(LANE_HEIGHT)
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">GPU {}</text>\n",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + LANE_HEIGHT / 2.0 + 4.0),
            gpu
        ));
    }

    // Bars.
    for (app, start, end, gpus) in &spans {
        let color = colors[app.as_str()];
        for gpu in gpus {
            let y = lane_y(*gpu);
            let w = (end - start) * scale;
            svg.push_str(&format!(
                "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"0.5\"/>\n",
                fmt(x(*start)),
                fmt(y),
                fmt(w),
                fmt(LANE_HEIGHT),
                color
            ));
            if w > 60.0 {
                svg.push_str(&format!(
                    "  <text x=\"{}\" y=\"{}\" fill=\"#fff\">{}</text>\n",
                    fmt(x(*start) + 4.0),
                    fmt(y + LANE_HEIGHT / 2.0 + 4.0),
                    xml_escape(app)
                ));
            }
        }
    }

    // Time axis.
    let axis_y = MARGIN_TOP + plot_height + 8.0;
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(axis_y),
        fmt(MARGIN_LEFT + PLOT_WIDTH),
        fmt(axis_y)
    ));
    if makespan > 0.0 {
        let step = tick_step(makespan);
        let mut t = 0.0;
        while t <= makespan + step * 1e-9 {
            svg.push_str(&format!(
                "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>\n",
                fmt(x(t)),
                fmt(axis_y),
                fmt(axis_y + 5.0)
            ));
            svg.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                fmt(x(t)),
                fmt(axis_y + 18.0),
                fmt(t)
            ));
            t += step;
        }
    } else {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">0.00</text>\n",
            fmt(MARGIN_LEFT),
            fmt(axis_y + 18.0)
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">time (s)</text>\n",
        fmt(MARGIN_LEFT + PLOT_WIDTH / 2.0),
        fmt(axis_y + 34.0)
    ));

    // Legend, one row per app in first-launch order.
    let mut seen = Vec::new();
    for (app, ..) in &spans {
        if !seen.contains(app) {
            seen.push(app.clone());
        }
    }
    for (i, app) in seen.iter().enumerate() {
        let y = MARGIN_TOP + i as f64 * 18.0;
        svg.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            fmt(MARGIN_LEFT + PLOT_WIDTH + 16.0),
            fmt(y),
            colors[app.as_str()]
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{}</text>\n",
            fmt(MARGIN_LEFT + PLOT_WIDTH + 34.0),
            fmt(y + 10.0),
            xml_escape(app)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, SimOptions};
    use crate::workload::PolicyConfig;

    #[test]
    fn single_job_renders_one_bar_per_gpu() {
        let spec = crate::fixtures::random_workload(
            3,
            &crate::fixtures::RandomFixtureConfig {
                apps: 1,
                ..Default::default()
            },
        );
        let r = simulate(&spec, &PolicyConfig::default(), SimOptions::default()).unwrap();
        let svg = render_gantt(&r.trace);
        let bars = svg.matches("stroke=\"#333\" stroke-width=\"0.5\"").count();
        assert_eq!(bars as u32, r.trace.per_app.values().next().unwrap().gpu_count);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_trace_renders_axes_only() {
        let spec = crate::workload::WorkloadSpec {
            platform: crate::workload::Platform {
                total_gpus: 4,
                numa_domains: 2,
                idle_power_per_gpu_w: 70.0,
                name: "empty".to_string(),
            },
            window_size: 0,
            applications: vec![],
        };
        let r = simulate(&spec, &PolicyConfig::default(), SimOptions::default()).unwrap();
        let svg = render_gantt(&r.trace);
        assert!(svg.contains("GPU 0"));
        assert!(svg.contains("GPU 3"));
        assert!(!svg.contains("stroke-width=\"0.5\""));
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let spec = crate::fixtures::case_study();
        let cfg = PolicyConfig::default();
        let a = render_gantt(&simulate(&spec, &cfg, SimOptions::default()).unwrap().trace);
        let b = render_gantt(&simulate(&spec, &cfg, SimOptions::default()).unwrap().trace);
        assert_eq!(a, b);
    }

    #[test]
    fn concurrent_fixture_lanes_overlap_in_time() {
        let spec = crate::fixtures::case_study();
        let r = simulate(&spec, &PolicyConfig::default(), SimOptions::default()).unwrap();
        // At least one interval runs two applications at once.
        assert!(r.trace.intervals.iter().any(|iv| iv.running_apps.len() >= 2));
        let svg = render_gantt(&r.trace);
        for app in ["pot3d", "gpt2", "vgg16"] {
            assert!(svg.contains(app));
        }
    }
}
