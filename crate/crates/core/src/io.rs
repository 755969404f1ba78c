//! Plain-text formats for contours and sampled potentials.
//!
//! Numbers are written with 12 significant digits so that repeated runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C;

use crate::contour::{SampledContour, BRANCH_POINTS};
use crate::error::{Error, Result};

pub const CONTOUR_HEADER: &str = "s,re_x,im_x,re_dx,im_dx";
pub const UEFF_HEADER: &str = "s,re_z,im_z,re_U,im_U";

/// Fixed 12-significant-digit scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        fmt_num(v).parse().unwrap_or(v)
    } else {
        v
    }
}

pub fn write_contour_csv<W: Write>(c: &SampledContour, mut w: W) -> Result<()> {
    writeln!(w, "{CONTOUR_HEADER}")?;
    for p in &c.samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(p.s),
            fmt_num(p.x.re),
            fmt_num(p.x.im),
            fmt_num(p.dx.re),
            fmt_num(p.dx.im)
        )?;
    }
    Ok(())
}

fn parse_row(line: &str, lineno: usize, width: usize) -> Result<Vec<f64>> {
    let cells: Vec<&str> = line.split(',').map(str::trim).collect();
    if cells.len() != width {
        return Err(Error::InvalidInput(format!("line {lineno}: expected {width} columns, found {}", cells.len())));
    }
    cells
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| Error::InvalidInput(format!("line {lineno}: bad number {c:?}"))))
        .collect()
}

/// Reads a contour written by [`write_contour_csv`] back as a tabulated path.
pub fn read_contour_csv<R: BufRead>(r: R) -> Result<SampledContour> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidInput("empty contour file".into()))??;
    if header.trim() != CONTOUR_HEADER {
        return Err(Error::InvalidInput(format!("contour header must be {CONTOUR_HEADER:?}")));
    }
    let mut pts = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_row(&line, i + 2, 5)?;
        pts.push((v[0], C::new(v[1], v[2]), C::new(v[3], v[4])));
    }
    SampledContour::tabulated(pts)
}

pub fn write_ueff_csv<W: Write>(rows: &[(f64, C, C)], mut w: W) -> Result<()> {
    writeln!(w, "{UEFF_HEADER}")?;
    for (s, z, u) in rows {
        writeln!(w, "{},{},{},{},{}", fmt_num(*s), fmt_num(z.re), fmt_num(z.im), fmt_num(u.re), fmt_num(u.im))?;
    }
    Ok(())
}

const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 40.0;

/// Renders the contour as a single polyline with the branch points at `±1`
/// marked by crosses. Only the leading version comment depends on anything
/// other than the samples.
pub fn contour_svg(c: &SampledContour, title: &str) -> String {
    let mut lo = C::new(-1.5, -1.5);
    let mut hi = C::new(1.5, 1.5);
    for x in c.points() {
        lo = C::new(lo.re.min(x.re), lo.im.min(x.im));
        hi = C::new(hi.re.max(x.re), hi.im.max(x.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    // centre the bounding box; y grows downward in SVG
    let cx = 0.5 * (lo.re + hi.re);
    let cy = 0.5 * (lo.im + hi.im);
    let map = |x: C| (SVG_SIZE / 2.0 + (x.re - cx) * scale, SVG_SIZE / 2.0 - (x.im - cy) * scale);

    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(out, "<!-- toboggan {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    let (ax0, ay) = map(C::new(lo.re, 0.0));
    let (ax1, _) = map(C::new(hi.re, 0.0));
    let (ox, ay0) = map(C::new(0.0, lo.im));
    let (_, ay1) = map(C::new(0.0, hi.im));
    let _ = writeln!(out, "<g stroke=\"#999\" stroke-width=\"1\">");
    let _ = writeln!(out, "<line x1=\"{ax0:.3}\" y1=\"{ay:.3}\" x2=\"{ax1:.3}\" y2=\"{ay:.3}\"/>");
    let _ = writeln!(out, "<line x1=\"{ox:.3}\" y1=\"{ay0:.3}\" x2=\"{ox:.3}\" y2=\"{ay1:.3}\"/>");
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#555\">");
    let _ = writeln!(out, "<text x=\"{:.3}\" y=\"{:.3}\">Re x</text>", ax1 - 30.0, ay - 6.0);
    let _ = writeln!(out, "<text x=\"{:.3}\" y=\"{:.3}\">Im x</text>", ox + 6.0, ay1 + 12.0);
    let _ = writeln!(out, "<text x=\"{SVG_MARGIN}\" y=\"20\">{}</text>", escape(title));
    let _ = writeln!(out, "</g>");

    let mut pts = String::new();
    for (i, x) in c.points().enumerate() {
        let (px, py) = map(x);
        if i > 0 {
            pts.push(' ');
        }
        let _ = write!(pts, "{px:.3},{py:.3}");
    }
    let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"1.5\" points=\"{pts}\"/>");

    let _ = writeln!(out, "<g stroke=\"#c0392b\" stroke-width=\"2\">");
    for b in [BRANCH_POINTS.0, BRANCH_POINTS.1] {
        let (bx, by) = map(b);
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"/>",
            bx - 5.0,
            by - 5.0,
            bx + 5.0,
            by + 5.0
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"/>",
            bx - 5.0,
            by + 5.0,
            bx + 5.0,
            by - 5.0
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
