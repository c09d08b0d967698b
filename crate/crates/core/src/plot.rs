//! Static time-series figures (SVG) and the CSV of the plotted series.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::crane::NUM_JOINTS;
use crate::error::{Error, Result};
use crate::eval::Evaluated;
use crate::io::{write_text, SignalLog};
use crate::pressure::Dominant;

/// One stacked subplot.
#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Panel {
    pub fn new(title: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.series.push((name.into(), values));
        self
    }
}

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Render stacked panels sharing the time axis into an SVG string.
pub fn render_svg(title: &str, time: &[f64], panels: &[Panel]) -> Result<String> {
    if time.is_empty() || panels.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let mut svg = String::new();
    {
        let height = 60 + 240 * panels.len() as u32;
        let root = SVGBackend::with_string(&mut svg, (1000, height)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let root = root.titled(title, ("sans-serif", 22)).map_err(plot_err)?;
        let areas = root.split_evenly((panels.len(), 1));
        let (t0, t1) = (time[0], *time.last().unwrap_or(&time[0]));
        for (area, panel) in areas.iter().zip(panels) {
            let (mut lo, mut hi) = panel
                .series
                .iter()
                .flat_map(|(_, v)| v.iter())
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            if !lo.is_finite() {
                (lo, hi) = (0.0, 1.0);
            }
            let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
            let mut chart = ChartBuilder::on(area)
                .caption(&panel.title, ("sans-serif", 16))
                .margin(10)
                .x_label_area_size(30)
                .y_label_area_size(80)
                .build_cartesian_2d(t0..t1.max(t0 + 1e-9), (lo - pad)..(hi + pad))
                .map_err(plot_err)?;
            chart
                .configure_mesh()
                .x_desc("time (s)")
                .y_desc(&panel.y_label)
                .y_label_formatter(&|v| format!("{v:.3e}"))
                .draw()
                .map_err(plot_err)?;
            for (k, (name, values)) in panel.series.iter().enumerate() {
                let color = COLORS[k % COLORS.len()];
                chart
                    .draw_series(LineSeries::new(
                        time.iter().zip(values).map(|(t, v)| (*t, *v)),
                        color.stroke_width(1),
                    ))
                    .map_err(plot_err)?
                    .label(name)
                    .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color));
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

fn dominant_code(d: Dominant) -> i64 {
    match d {
        Dominant::Standby => 0,
        Dominant::Actuator(i) => i as i64 + 1,
    }
}

/// CSV of every plotted series plus the dominance labels.
pub fn series_csv(log: &SignalLog, ev: &Evaluated) -> Result<String> {
    let p = &ev.predictions;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time_s".to_string()];
    for a in 1..=NUM_JOINTS {
        header.extend([
            format!("p_work{a}_ref_pa"),
            format!("p_work{a}_pred_pa"),
            format!("p_work{a}_std_pa"),
            format!("f{a}_n"),
            format!("xdot{a}_mps"),
            format!("q{a}_m3ps"),
        ]);
    }
    header.extend(
        ["p_pump_meas_pa", "p_pump_ref_pa", "p_pump_pred_pa", "dominant_pred", "dominant_ref"]
            .map(String::from),
    );
    wtr.write_record(&header)?;
    for k in 0..log.len() {
        let mut row = vec![log.time[k].to_string()];
        for i in 0..NUM_JOINTS {
            let a = &p.table.actuators[i];
            row.extend([
                ev.reference.working[i][k].to_string(),
                p.working[i][k].mean.to_string(),
                p.working[i][k].variance.sqrt().to_string(),
                a.f_static[k].to_string(),
                a.xdot[k].to_string(),
                a.q_flow[k].to_string(),
            ]);
        }
        row.push(log.p_pump[k].to_string());
        row.push(ev.reference.pump[k].to_string());
        row.push(p.pump[k].to_string());
        row.push(dominant_code(p.dominant[k]).to_string());
        row.push(match &ev.reference.dominant {
            Some(d) => dominant_code(d[k].0).to_string(),
            None => String::new(),
        });
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Plot(e.to_string()))?;
    String::from_utf8(bytes).map_err(plot_err)
}

/// Write `<stem>_actuators.svg`, `<stem>_pump.svg` and `<stem>_series.csv`
/// into `dir`.
pub fn write_evaluation_plots(dir: &Path, stem: &str, log: &SignalLog, ev: &Evaluated) -> Result<Vec<PathBuf>> {
    let p = &ev.predictions;
    let per_actuator = |f: &dyn Fn(usize) -> (String, Vec<f64>)| -> Vec<(String, Vec<f64>)> {
        (0..NUM_JOINTS).map(f).collect()
    };
    let mut pressures = Panel::new("Working pressures", "Pa");
    for i in 0..NUM_JOINTS {
        pressures = pressures
            .with(format!("reference {}", i + 1), ev.reference.working[i].clone())
            .with(
                format!("predicted {}", i + 1),
                p.working[i].iter().map(|w| w.mean).collect(),
            );
    }
    let forces = Panel {
        series: per_actuator(&|i| (format!("actuator {}", i + 1), p.table.actuators[i].f_static.clone())),
        ..Panel::new("Static reaction forces", "N")
    };
    let speeds = Panel {
        series: per_actuator(&|i| (format!("actuator {}", i + 1), p.table.actuators[i].xdot.clone())),
        ..Panel::new("Piston velocities", "m/s")
    };
    let positions = Panel::new("Joint positions", "rad, m")
        .with("theta1", log.theta1.clone())
        .with("theta2", log.theta2.clone())
        .with("x_prism", log.x_prism.clone());
    let actuators = render_svg(
        &format!("{stem}: actuators"),
        &log.time,
        &[pressures, forces, speeds, positions],
    )?;

    let pump = Panel::new("Pump pressure", "Pa")
        .with("measured", log.p_pump.clone())
        .with("reference", ev.reference.pump.clone())
        .with("predicted", p.pump.clone());
    let flows = Panel {
        series: per_actuator(&|i| (format!("actuator {}", i + 1), p.table.actuators[i].q_flow.clone())),
        ..Panel::new("Meter-in flows", "m^3/s")
    };
    let pump_svg = render_svg(&format!("{stem}: pump"), &log.time, &[pump, flows])?;

    let files = [
        (dir.join(format!("{stem}_actuators.svg")), actuators),
        (dir.join(format!("{stem}_pump.svg")), pump_svg),
        (dir.join(format!("{stem}_series.csv")), series_csv(log, ev)?),
    ];
    for (path, text) in &files {
        write_text(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
