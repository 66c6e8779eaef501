use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use super::symmetry::AngleRecord;
use crate::error::{Error, Result};
use crate::svg::{escape, fmt_num};

/// Width of the angle histogram bins, in degrees.
pub const DEFAULT_BIN_WIDTH_DEG: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramKind {
    SbBackSigned,
    SymHorizontal,
    SbHorizontal,
    BackHorizontal,
}

impl HistogramKind {
    pub const ALL: [HistogramKind; 4] = [
        HistogramKind::SbBackSigned,
        HistogramKind::SymHorizontal,
        HistogramKind::SbHorizontal,
        HistogramKind::BackHorizontal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HistogramKind::SbBackSigned => "sb_back_signed",
            HistogramKind::SymHorizontal => "sym_horizontal",
            HistogramKind::SbHorizontal => "sb_horizontal",
            HistogramKind::BackHorizontal => "back_horizontal",
        }
    }

    fn title(self) -> &'static str {
        match self {
            HistogramKind::SbBackSigned => "Sound board / back (signed)",
            HistogramKind::SymHorizontal => "Plane of symmetry / horizontal",
            HistogramKind::SbHorizontal => "Sound board / horizontal",
            HistogramKind::BackHorizontal => "Back / horizontal",
        }
    }

    fn colour(self) -> &'static str {
        match self {
            HistogramKind::SbBackSigned => "#d62728",
            HistogramKind::SymHorizontal => "#e6b800",
            HistogramKind::SbHorizontal => "#1f77b4",
            HistogramKind::BackHorizontal => "#2ca02c",
        }
    }

    fn value(self, r: &AngleRecord) -> f64 {
        match self {
            HistogramKind::SbBackSigned => r.sb_back_signed,
            HistogramKind::SymHorizontal => r.sym_horizontal,
            HistogramKind::SbHorizontal => r.sb_horizontal,
            HistogramKind::BackHorizontal => r.back_horizontal,
        }
    }
}

/// Bin `index` covers `[index·w, (index+1)·w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub index: i64,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleHistogram {
    pub kind: HistogramKind,
    /// Non-empty bins in increasing order.
    pub bins: Vec<HistogramBin>,
}

impl AngleHistogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.ids.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleHistograms {
    pub bin_width: f64,
    pub histograms: Vec<AngleHistogram>,
}

pub fn angle_report(records: &[AngleRecord], bin_width: f64) -> Result<AngleHistograms> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut sorted: Vec<&AngleRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.instrument_id.cmp(&b.instrument_id));
    let histograms = HistogramKind::ALL
        .iter()
        .map(|&kind| {
            let mut bins: BTreeMap<i64, Vec<String>> = BTreeMap::new();
            for r in &sorted {
                let k = (kind.value(r) / bin_width).floor() as i64;
                bins.entry(k).or_default().push(r.instrument_id.clone());
            }
            AngleHistogram {
                kind,
                bins: bins
                    .into_iter()
                    .map(|(index, ids)| HistogramBin { index, ids })
                    .collect(),
            }
        })
        .collect();
    Ok(AngleHistograms {
        bin_width,
        histograms,
    })
}

impl AngleHistograms {
    pub fn get(&self, kind: HistogramKind) -> &AngleHistogram {
        self.histograms
            .iter()
            .find(|h| h.kind == kind)
            .expect("all kinds present")
    }

    fn bin_edges(&self, index: i64) -> (f64, f64) {
        (index as f64 * self.bin_width, (index + 1) as f64 * self.bin_width)
    }

    /// Columns: histogram, bin_low_deg, bin_high_deg, count, ids (`;`-joined).
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["histogram", "bin_low_deg", "bin_high_deg", "count", "ids"])?;
        for h in &self.histograms {
            for b in &h.bins {
                let (lo, hi) = self.bin_edges(b.index);
                w.write_record([
                    h.kind.as_str().to_string(),
                    fmt_num(lo, 4),
                    fmt_num(hi, 4),
                    b.ids.len().to_string(),
                    b.ids.join(";"),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Stacked bar chart, one labelled cell per instrument.
    pub fn to_svg(&self, kind: HistogramKind) -> String {
        const COL: f64 = 34.0;
        const CELL: f64 = 14.0;
        const LEFT: f64 = 50.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 60.0;
        let h = self.get(kind);
        let (first, last) = match (h.bins.first(), h.bins.last()) {
            (Some(a), Some(b)) => (a.index.min(0), b.index.max(0)),
            _ => (0, 0),
        };
        let ncols = (last - first + 1) as f64;
        let max_count = h.bins.iter().map(|b| b.ids.len()).max().unwrap_or(0).max(1) as f64;
        let plot_h = max_count * CELL;
        let width = LEFT + ncols * COL + 20.0;
        let height = TOP + plot_h + BOTTOM;
        let base = TOP + plot_h;

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
            fmt_num(width, 1),
            fmt_num(height, 1),
            fmt_num(width, 1),
            fmt_num(height, 1)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            fmt_num(width, 1),
            fmt_num(height, 1)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="20" font-family="sans-serif" font-size="13">{} (bin {}°)</text>"#,
            fmt_num(LEFT, 1),
            escape(kind.title()),
            fmt_num(self.bin_width, 4)
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            fmt_num(LEFT, 1),
            fmt_num(base, 1),
            fmt_num(LEFT + ncols * COL, 1),
            fmt_num(base, 1)
        )
        .unwrap();
        for k in first..=last {
            let x = LEFT + (k - first) as f64 * COL;
            let (lo, _) = self.bin_edges(k);
            writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="9" transform="rotate(60 {} {})">{}</text>"#,
                fmt_num(x, 1),
                fmt_num(base + 12.0, 1),
                fmt_num(x, 1),
                fmt_num(base + 12.0, 1),
                fmt_num(lo, 2)
            )
            .unwrap();
        }
        for b in &h.bins {
            let x = LEFT + (b.index - first) as f64 * COL;
            for (row, id) in b.ids.iter().enumerate() {
                let y = base - (row + 1) as f64 * CELL;
                writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="white"/>"#,
                    fmt_num(x + 1.0, 1),
                    fmt_num(y, 1),
                    fmt_num(COL - 2.0, 1),
                    fmt_num(CELL, 1),
                    kind.colour()
                )
                .unwrap();
                writeln!(
                    s,
                    r#"<text x="{}" y="{}" font-family="sans-serif" font-size="8" text-anchor="middle">{}</text>"#,
                    fmt_num(x + COL / 2.0, 1),
                    fmt_num(y + CELL - 4.0, 1),
                    escape(id)
                )
                .unwrap();
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, signed: f64, rest: f64) -> AngleRecord {
        AngleRecord {
            instrument_id: id.into(),
            sb_back_signed: signed,
            sym_horizontal: rest,
            sb_horizontal: rest,
            back_horizontal: rest,
        }
    }

    #[test]
    fn zero_angles_single_bin() {
        let h = angle_report(&[rec("2769", 0.0, 0.0)], DEFAULT_BIN_WIDTH_DEG).unwrap();
        for hist in &h.histograms {
            assert_eq!(hist.bins.len(), 1);
            assert_eq!(hist.bins[0].index, 0);
            assert_eq!(hist.bins[0].ids, vec!["2769".to_string()]);
        }
    }

    #[test]
    fn boundary_split_and_sign_side() {
        let h = angle_report(
            &[rec("a", 0.03, 0.04), rec("b", -0.02, 0.06)],
            DEFAULT_BIN_WIDTH_DEG,
        )
        .unwrap();
        let sym = h.get(HistogramKind::SymHorizontal);
        assert_eq!(
            sym.bins.iter().map(|b| b.index).collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(sym.bins[0].ids, vec!["a"]);
        assert_eq!(sym.bins[1].ids, vec!["b"]);
        let signed = h.get(HistogramKind::SbBackSigned);
        assert_eq!(
            signed.bins.iter().map(|b| b.index).collect::<Vec<_>>(),
            vec![-1, 0]
        );
        assert_eq!(h.bin_edges(-1), (-0.05, 0.0));
    }

    #[test]
    fn empty_records_give_empty_histograms() {
        let h = angle_report(&[], DEFAULT_BIN_WIDTH_DEG).unwrap();
        assert!(h.histograms.iter().all(|x| x.bins.is_empty()));
        assert!(h.to_svg(HistogramKind::SbHorizontal).contains("</svg>"));
        assert!(angle_report(&[], 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let h = angle_report(&[rec("b", 0.01, 0.2), rec("a", 0.02, 0.2)], 0.05).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("histogram,bin_low_deg,bin_high_deg,count,ids")
        );
        assert_eq!(lines.next(), Some("sb_back_signed,0.0000,0.0500,2,a;b"));
    }
}
