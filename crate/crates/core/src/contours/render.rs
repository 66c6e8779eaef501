use std::fmt::Write as _;

use super::ContourSet;
use crate::channel::ChannelPointSet;
use crate::size_class::SizeClass;
use crate::svg::{escape, fmt_num};

/// Half-range of the violin and viola colour scale (mm).
pub const VIOLIN_VIOLA_COLOUR_RANGE_MM: f64 = 28.0;
/// Half-range of the cello colour scale (mm).
pub const CELLO_COLOUR_RANGE_MM: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

// blue → green → yellow
const RAMP: [(f64, [f64; 3]); 5] = [
    (0.00, [48.0, 18.0, 122.0]),
    (0.25, [49.0, 104.0, 142.0]),
    (0.50, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.00, [253.0, 231.0, 37.0]),
];

/// Ramp sampled at `t ∈ [0, 1]`; values outside are clamped.
pub fn colour_ramp(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let k = RAMP
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(RAMP.len() - 2);
    let (t0, c0) = RAMP[k];
    let (t1, c1) = RAMP[k + 1];
    let u = (t - t0) / (t1 - t0);
    let ch = |i: usize| (c0[i] + (c1[i] - c0[i]) * u).round() as u8;
    Rgb(ch(0), ch(1), ch(2))
}

/// Symmetric colour scale over `[-range_mm, +range_mm]`.
///
/// The ramp runs from zero outwards, so a level and its mirror share a colour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColourScale {
    pub range_mm: f64,
}

impl ColourScale {
    pub fn new(range_mm: f64) -> Self {
        ColourScale { range_mm }
    }

    pub fn for_size_class(class: SizeClass) -> Self {
        match class {
            SizeClass::ViolinViola => ColourScale::new(VIOLIN_VIOLA_COLOUR_RANGE_MM),
            SizeClass::Cello => ColourScale::new(CELLO_COLOUR_RANGE_MM),
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        z.abs() <= self.range_mm
    }

    pub fn colour(&self, z: f64) -> Rgb {
        colour_ramp(z.abs() / self.range_mm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub text: String,
    pub warnings: Vec<String>,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 700.0;
const PLOT_X: f64 = 60.0;
const PLOT_Y: f64 = 40.0;
const PLOT_W: f64 = 680.0;
const PLOT_H: f64 = 620.0;
const BAR_X: f64 = 790.0;
const BAR_W: f64 = 22.0;
const BAR_STEPS: usize = 64;

/// Top-down contour plot with a vertical colour bar.
///
/// The red bracket beside the bar marks the plate's elevation range; channel
/// points, when given, are drawn last as orange dots.
pub fn render_contours_svg(
    contours: &ContourSet,
    channel: Option<&ChannelPointSet>,
    scale: ColourScale,
) -> SvgDocument {
    let mut warnings = Vec::new();
    for level in &contours.levels {
        if !scale.contains(level.z) && !level.polylines.is_empty() {
            warnings.push(format!(
                "level {} mm outside colour range ±{} mm; clamped",
                fmt_num(level.z, 3),
                fmt_num(scale.range_mm, 0)
            ));
        }
    }
    for (name, z) in [("z_min", contours.z_min), ("z_max", contours.z_max)] {
        if !scale.contains(z) {
            warnings.push(format!(
                "{name} {} mm outside colour range ±{} mm; clamped",
                fmt_num(z, 3),
                fmt_num(scale.range_mm, 0)
            ));
        }
    }

    // data extent in the Oxy projection
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |x: f64, y: f64| {
        lo[0] = lo[0].min(x);
        lo[1] = lo[1].min(y);
        hi[0] = hi[0].max(x);
        hi[1] = hi[1].max(y);
    };
    for level in &contours.levels {
        for poly in &level.polylines {
            for p in poly.points() {
                grow(p.x, p.y);
            }
        }
    }
    if let Some(ch) = channel {
        for p in &ch.points {
            grow(p.x, p.y);
        }
    }
    if lo[0] > hi[0] {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let dx = (hi[0] - lo[0]).max(1e-9);
    let dy = (hi[1] - lo[1]).max(1e-9);
    let s = (PLOT_W / dx).min(PLOT_H / dy);
    let ox = PLOT_X + (PLOT_W - dx * s) / 2.0;
    let oy = PLOT_Y + (PLOT_H + dy * s) / 2.0;
    let px = |x: f64| ox + (x - lo[0]) * s;
    let py = |y: f64| oy - (y - lo[1]) * s;
    let bar_y = |z: f64| {
        let t = (z.clamp(-scale.range_mm, scale.range_mm) + scale.range_mm) / (2.0 * scale.range_mm);
        PLOT_Y + PLOT_H * (1.0 - t)
    };

    let mut out = String::new();
    let o = &mut out;
    writeln!(o, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt_num(WIDTH, 0),
        h = fmt_num(HEIGHT, 0)
    )
    .unwrap();
    writeln!(o, "<metadata>").unwrap();
    writeln!(o, "plate: {}", escape(&contours.plate_id)).unwrap();
    writeln!(o, "side: {}", contours.side).unwrap();
    writeln!(o, "colour range: ±{} mm", scale.range_mm).unwrap();
    writeln!(
        o,
        "elevation range: {} .. {} mm",
        fmt_num(contours.z_min, 3),
        fmt_num(contours.z_max, 3)
    )
    .unwrap();
    for w in &warnings {
        writeln!(o, "warning: {}", escape(w)).unwrap();
    }
    writeln!(o, "</metadata>").unwrap();
    writeln!(
        o,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        fmt_num(WIDTH, 0),
        fmt_num(HEIGHT, 0)
    )
    .unwrap();

    // axes
    writeln!(
        o,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="0.8"/>"#,
        fmt_num(PLOT_X, 1),
        fmt_num(PLOT_Y, 1),
        fmt_num(PLOT_W, 1),
        fmt_num(PLOT_H, 1)
    )
    .unwrap();
    let label = |o: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        writeln!(
            o,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{}">{}</text>"#,
            fmt_num(x, 2),
            fmt_num(y, 2),
            anchor,
            escape(text)
        )
        .unwrap();
    };
    label(o, px(lo[0]), PLOT_Y + PLOT_H + 16.0, "start", &format!("{} mm", fmt_num(lo[0], 1)));
    label(o, px(hi[0]), PLOT_Y + PLOT_H + 16.0, "end", &format!("{} mm", fmt_num(hi[0], 1)));
    label(o, PLOT_X - 4.0, py(lo[1]), "end", &fmt_num(lo[1], 1));
    label(o, PLOT_X - 4.0, py(hi[1]) + 10.0, "end", &fmt_num(hi[1], 1));
    label(o, PLOT_X + PLOT_W / 2.0, PLOT_Y - 14.0, "middle", &contours.plate_id);

    // colour bar, top = +range
    let cell = PLOT_H / BAR_STEPS as f64;
    for i in 0..BAR_STEPS {
        let t = 1.0 - (i as f64 + 0.5) / BAR_STEPS as f64;
        let z = (2.0 * t - 1.0) * scale.range_mm;
        writeln!(
            o,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            fmt_num(BAR_X, 2),
            fmt_num(PLOT_Y + i as f64 * cell, 2),
            fmt_num(BAR_W, 2),
            fmt_num(cell + 0.05, 2),
            scale.colour(z).hex()
        )
        .unwrap();
    }
    for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let z = frac * scale.range_mm;
        label(o, BAR_X + BAR_W + 6.0, bar_y(z) + 4.0, "start", &fmt_num(z, 0));
    }
    let (b0, b1) = (bar_y(contours.z_min), bar_y(contours.z_max));
    let bx = BAR_X - 5.0;
    writeln!(
        o,
        r#"<polyline points="{a},{b0} {c},{b0} {c},{b1} {a},{b1}" fill="none" stroke="red" stroke-width="3"/>"#,
        a = fmt_num(BAR_X, 2),
        c = fmt_num(bx, 2),
        b0 = fmt_num(b0, 2),
        b1 = fmt_num(b1, 2)
    )
    .unwrap();

    // contour lines
    for level in &contours.levels {
        let colour = scale.colour(level.z).hex();
        for poly in &level.polylines {
            let mut d = String::new();
            for (k, p) in poly.points().iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{} {}",
                    if k == 0 { "M" } else { " L" },
                    fmt_num(px(p.x), 2),
                    fmt_num(py(p.y), 2)
                );
            }
            if poly.is_closed() {
                d.push_str(" Z");
            }
            writeln!(
                o,
                r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="0.7"/>"#
            )
            .unwrap();
        }
    }

    if let Some(ch) = channel {
        for p in &ch.points {
            writeln!(
                o,
                r#"<circle cx="{}" cy="{}" r="1.2" fill="orange"/>"#,
                fmt_num(px(p.x), 2),
                fmt_num(py(p.y), 2)
            )
            .unwrap();
        }
    }
    writeln!(o, "</svg>").unwrap();
    SvgDocument {
        text: out,
        warnings,
    }
}
