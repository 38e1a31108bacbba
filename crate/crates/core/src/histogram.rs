//! Label histograms: a `bin_left,count` table and a standalone SVG plot.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
    pub seed_label: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub count: u64,
}

impl Histogram {
    /// Equal-width bins spanning the samples and the seed label.
    pub fn new(samples: &[f64], seed_label: f64, num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        let lo = samples.iter().copied().fold(seed_label, f64::min);
        let hi = samples.iter().copied().fold(seed_label, f64::max);
        let width = if hi > lo { (hi - lo) / num_bins as f64 } else { 1.0 };
        let mut bins: Vec<HistogramBin> =
            (0..num_bins).map(|i| HistogramBin { bin_left: lo + i as f64 * width, count: 0 }).collect();
        for &s in samples {
            let i = (((s - lo) / width) as usize).min(num_bins - 1);
            bins[i].count += 1;
        }
        Ok(Histogram { bin_width: width, bins, seed_label })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for b in &self.bins {
            w.serialize(b)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R, seed_label: f64) -> Result<Self> {
        let mut bins = Vec::new();
        for rec in csv::Reader::from_reader(input).deserialize::<HistogramBin>() {
            bins.push(rec?);
        }
        let bin_width = match bins.as_slice() {
            [a, b, ..] => b.bin_left - a.bin_left,
            _ => 1.0,
        };
        Ok(Histogram { bin_width, bins, seed_label })
    }

    /// Bar chart of the bins with the seed label drawn as a vertical line.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, margin) = (640.0, 360.0, 40.0);
        let lo = self.bins.first().map_or(0.0, |b| b.bin_left);
        let hi = self.bins.last().map_or(1.0, |b| b.bin_left + self.bin_width);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let max = self.bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
        let x = |v: f64| margin + (v - lo) / span * (w - 2.0 * margin);
        let bar_w = (w - 2.0 * margin) / self.bins.len().max(1) as f64;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
        for b in &self.bins {
            let bh = b.count as f64 / max * (h - 2.0 * margin);
            let _ = writeln!(
                s,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#4a78b5"/>"##,
                x(b.bin_left),
                h - margin - bh,
                bar_w,
                bh
            );
        }
        let sx = x(self.seed_label);
        let _ = writeln!(s, r##"<line x1="{sx:.3}" y1="{margin}" x2="{sx:.3}" y2="{}" stroke="#c0392b" stroke-width="2"/>"##, h - margin);
        let _ = writeln!(s, r##"<text x="{sx:.3}" y="{}" font-family="sans-serif" font-size="11" fill="#c0392b">seed {:.4}</text>"##, margin - 4.0, self.seed_label);
        let _ = writeln!(s, r#"<line x1="{margin}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, h - margin, w - margin);
        let _ = writeln!(s, r#"<text x="{margin}" y="{}" font-family="sans-serif" font-size="11">{lo:.4}</text>"#, h - margin + 16.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{hi:.4}</text>"#, w - margin, h - margin + 16.0);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_cover_samples_and_seed() {
        let h = Histogram::new(&[0.0, 0.1, 0.2, 0.2, 0.4], 0.5, 5).unwrap();
        assert_eq!(h.bins.iter().map(|b| b.count).sum::<u64>(), 5);
        assert_eq!(h.bins[0].bin_left, 0.0);
        assert!((h.bin_width - 0.1).abs() < 1e-15);
        assert_eq!(h.bins[1].count, 1);
        assert_eq!(h.bins[3].count + h.bins[4].count, 1);
    }

    #[test]
    fn csv_round_trip_and_svg() {
        let h = Histogram::new(&[1.0, 2.0, 2.5, 3.0], 2.0, 4).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("bin_left,count\n"));
        let back = Histogram::read_csv(buf.as_slice(), 2.0).unwrap();
        assert_eq!(back.bins, h.bins);
        let svg = h.to_svg("labels <test>");
        assert!(svg.starts_with("<svg") && svg.contains("&lt;test&gt;") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 5);
    }

    #[test]
    fn constant_samples() {
        let h = Histogram::new(&[0.3; 10], 0.3, 3).unwrap();
        assert_eq!(h.bins[0].count, 10);
    }
}
