//! SVG line and scatter charts.

use std::collections::HashSet;
use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

const SIZE: (u32, u32) = (1280, 720);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    fn style(self) -> RGBColor {
        RGBColor(self.0, self.1, self.2)
    }
}

/// The default color cycle.
pub const TAB10: [Rgb; 10] = [
    Rgb(0x1F, 0x77, 0xB4),
    Rgb(0xFF, 0x7F, 0x0E),
    Rgb(0x2C, 0xA0, 0x2C),
    Rgb(0xD6, 0x27, 0x28),
    Rgb(0x94, 0x67, 0xBD),
    Rgb(0x8C, 0x56, 0x4B),
    Rgb(0xE3, 0x77, 0xC2),
    Rgb(0x7F, 0x7F, 0x7F),
    Rgb(0xBC, 0xBD, 0x22),
    Rgb(0x17, 0xBE, 0xCF),
];

const NAMED: [(&str, Rgb); 21] = [
    ("blue", Rgb(0x00, 0x00, 0xFF)),
    ("green", Rgb(0x00, 0x80, 0x00)),
    ("red", Rgb(0xFF, 0x00, 0x00)),
    ("cyan", Rgb(0x00, 0xFF, 0xFF)),
    ("magenta", Rgb(0xFF, 0x00, 0xFF)),
    ("yellow", Rgb(0xFF, 0xFF, 0x00)),
    ("black", Rgb(0x00, 0x00, 0x00)),
    ("white", Rgb(0xFF, 0xFF, 0xFF)),
    ("orange", Rgb(0xFF, 0xA5, 0x00)),
    ("purple", Rgb(0x80, 0x00, 0x80)),
    ("brown", Rgb(0xA5, 0x2A, 0x2A)),
    ("pink", Rgb(0xFF, 0xC0, 0xCB)),
    ("gray", Rgb(0x80, 0x80, 0x80)),
    ("grey", Rgb(0x80, 0x80, 0x80)),
    ("olive", Rgb(0x80, 0x80, 0x00)),
    ("navy", Rgb(0x00, 0x00, 0x80)),
    ("teal", Rgb(0x00, 0x80, 0x80)),
    ("lime", Rgb(0x00, 0xFF, 0x00)),
    ("maroon", Rgb(0x80, 0x00, 0x00)),
    ("gold", Rgb(0xFF, 0xD7, 0x00)),
    ("darkblue", Rgb(0x00, 0x00, 0x8B)),
];

const TAB_NAMES: [&str; 10] = ["blue", "orange", "green", "red", "purple", "brown", "pink", "gray", "olive", "cyan"];

/// Parses `#rrggbb`, `#rgb`, `C0`..`C9`, `tab:<name>`, one-letter codes
/// (`b g r c m y k w`) and common color names.
pub fn parse_color(spec: &str) -> Result<Rgb> {
    let s = spec.trim().to_ascii_lowercase();
    let bad = || Error::Invalid(format!("unrecognized color {spec:?}"));
    if let Some(hex) = s.strip_prefix('#') {
        let nibble = |c: u8| (c as char).to_digit(16).map(|d| d as u8).ok_or_else(bad);
        let b = hex.as_bytes();
        return match b.len() {
            6 => Ok(Rgb(
                nibble(b[0])? * 16 + nibble(b[1])?,
                nibble(b[2])? * 16 + nibble(b[3])?,
                nibble(b[4])? * 16 + nibble(b[5])?,
            )),
            3 => Ok(Rgb(nibble(b[0])? * 17, nibble(b[1])? * 17, nibble(b[2])? * 17)),
            _ => Err(bad()),
        };
    }
    if let Some(i) = s.strip_prefix('c').and_then(|d| d.parse::<usize>().ok()) {
        return Ok(TAB10[i % 10]);
    }
    if let Some(name) = s.strip_prefix("tab:") {
        let name = if name == "grey" { "gray" } else { name };
        return TAB_NAMES.iter().position(|n| *n == name).map(|i| TAB10[i]).ok_or_else(bad);
    }
    let name = match s.as_str() {
        "b" => "blue",
        "g" => "green",
        "r" => "red",
        "c" => "cyan",
        "m" => "magenta",
        "y" => "yellow",
        "k" => "black",
        "w" => "white",
        other => other,
    };
    NAMED.iter().find(|(n, _)| *n == name).map(|(_, c)| *c).ok_or_else(bad)
}

/// A color cycle: curve `i` gets color `i mod len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette(Vec<Rgb>);

impl Default for Palette {
    fn default() -> Self {
        Palette(TAB10.to_vec())
    }
}

impl Palette {
    /// Parses a space-separated color list.
    pub fn parse(list: &str) -> Result<Self> {
        let colors = list.split_whitespace().map(parse_color).collect::<Result<Vec<_>>>()?;
        if colors.is_empty() {
            return Err(Error::Invalid("empty color cycle".into()));
        }
        Ok(Palette(colors))
    }

    pub fn color(&self, i: usize) -> Rgb {
        self.0[i % self.0.len()]
    }
}

/// One curve of a chart.
pub(crate) struct Trace {
    pub label: String,
    pub color: Rgb,
    pub points: Vec<(f64, f64)>,
}

fn upper(values: impl Iterator<Item = f64>) -> f64 {
    let max = values.fold(0.0, f64::max);
    if max > 0.0 {
        max * 1.05
    } else {
        1.0
    }
}

pub(crate) fn line_chart(path: &Path, title: &str, y_desc: &str, traces: &[Trace]) -> Result<()> {
    chart(path, title, y_desc, traces, false)
}

pub(crate) fn scatter_chart(path: &Path, title: &str, y_desc: &str, traces: &[Trace]) -> Result<()> {
    chart(path, title, y_desc, traces, true)
}

fn chart(path: &Path, title: &str, y_desc: &str, traces: &[Trace], scatter: bool) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| Error::Plot(format!("{}: {e}", path.display()));
    let x_max = upper(traces.iter().flat_map(|t| t.points.iter().map(|p| p.0)));
    let y_max = upper(traces.iter().flat_map(|t| t.points.iter().map(|p| p.1)));

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(0.0..x_max, 0.0..y_max)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc("Time (s)")
        .y_desc(y_desc)
        .max_light_lines(0)
        .draw()
        .map_err(|e| err(&e))?;

    for t in traces {
        let style = t.color.style();
        let anno = if scatter {
            // Points landing on an already drawn pixel add nothing but bytes.
            let mut seen = HashSet::new();
            let pixels = t.points.iter().copied().filter(|&(x, y)| {
                let px = (x / x_max * SIZE.0 as f64) as u32;
                let py = (y / y_max * SIZE.1 as f64) as u32;
                seen.insert((px, py))
            });
            chart.draw_series(pixels.map(|p| Circle::new(p, 1, style.filled())))
        } else {
            chart.draw_series(LineSeries::new(t.points.iter().copied(), style.stroke_width(2)))
        }
        .map_err(|e| err(&e))?;
        anno.label(t.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], style.stroke_width(3)));
    }
    if !traces.is_empty() {
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::UpperRight)
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}
