//! File formats: binary PGM for display, CSV for lossless floats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a field
//! written and read back is bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::prior::AnisotropyField;
use crate::radon::Sinogram;

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: `{}`: {e}", lineno + 1, tok.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_to_grid(rows: Vec<Vec<f64>>) -> Result<(usize, usize, Vec<f64>)> {
    let height = rows.len();
    if height == 0 {
        return Err(Error::Parse("empty CSV grid".into()));
    }
    let width = rows[0].len();
    if let Some(k) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Parse(format!(
            "ragged CSV: row {} has {} columns, expected {width}",
            k + 1,
            rows[k].len()
        )));
    }
    Ok((height, width, rows.into_iter().flatten().collect()))
}

fn write_rows(out: &mut String, width: usize, values: &[f64]) {
    for row in values.chunks(width) {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
}

pub fn scalar_field_to_csv(u: &ScalarField) -> String {
    let mut out = String::with_capacity(u.len() * 20);
    write_rows(&mut out, u.width(), u.as_slice());
    out
}

pub fn scalar_field_from_csv(text: &str) -> Result<ScalarField> {
    let (h, w, values) = rows_to_grid(parse_rows(text)?)?;
    ScalarField::new(h, w, values)
}

pub fn write_csv(path: impl AsRef<Path>, u: &ScalarField) -> Result<()> {
    fs::write(path, scalar_field_to_csv(u))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<ScalarField> {
    scalar_field_from_csv(&fs::read_to_string(path)?)
}

/// Encodes a field as 8-bit binary PGM, mapping `[lo, hi]` linearly onto
/// `[0, 255]` with clamping.
pub fn encode_pgm(u: &ScalarField, lo: f64, hi: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", u.width(), u.height()).into_bytes();
    let span = hi - lo;
    out.extend(u.as_slice().iter().map(|&v| {
        if span <= 0.0 {
            0u8
        } else {
            (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8
        }
    }));
    out
}

/// Writes a display PGM scaled to the field's own range.
pub fn write_pgm(path: impl AsRef<Path>, u: &ScalarField) -> Result<()> {
    fs::write(path, encode_pgm(u, u.min(), u.max()))?;
    Ok(())
}

/// Writes a PGM with a fixed display window.
pub fn write_pgm_range(path: impl AsRef<Path>, u: &ScalarField, lo: f64, hi: f64) -> Result<()> {
    fs::write(path, encode_pgm(u, lo, hi))?;
    Ok(())
}

/// Decodes an 8-bit binary PGM (P5) into intensities in `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<ScalarField> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if tokens[0] != "P5" {
        return Err(Error::Parse(format!(
            "unsupported PGM magic `{}`",
            tokens[0]
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("PGM header `{s}`: {e}")))
    };
    let (width, height, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported PGM max value {maxval}")));
    }
    let raster = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
    ScalarField::new(
        height,
        width,
        raster.iter().map(|&b| b as f64 / maxval as f64).collect(),
    )
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ScalarField> {
    decode_pgm(&fs::read(path)?)
}

/// Reads a scalar field, choosing the format from the extension (`.pgm`
/// or CSV otherwise).
pub fn read_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_csv(path),
    }
}

pub fn sinogram_to_csv(s: &Sinogram) -> String {
    let mut out = format!("angles={} bins={}\n", s.n_angles(), s.n_bins());
    write_rows(&mut out, s.n_bins(), s.as_slice());
    out
}

pub fn sinogram_from_csv(text: &str) -> Result<Sinogram> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let mut angles = None;
    let mut bins = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("angles", v)) => angles = v.parse::<usize>().ok(),
            Some(("bins", v)) => bins = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let (Some(a), Some(b)) = (angles, bins) else {
        return Err(Error::Parse(format!(
            "sinogram header must read `angles=A bins=B`, got `{header}`"
        )));
    };
    let (h, w, values) = rows_to_grid(parse_rows(body)?)?;
    if (h, w) != (a, b) {
        return Err(Error::Parse(format!(
            "sinogram header says {a}x{b} but body is {h}x{w}"
        )));
    }
    Sinogram::new(a, b, values)
}

pub fn write_sinogram(path: impl AsRef<Path>, s: &Sinogram) -> Result<()> {
    fs::write(path, sinogram_to_csv(s))?;
    Ok(())
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    sinogram_from_csv(&fs::read_to_string(path)?)
}

/// Debug dump: one row `i,j,a11,a12,a22` per pixel.
pub fn anisotropy_to_csv(a: &AnisotropyField) -> String {
    let mut out = String::from("i,j,a11,a12,a22\n");
    for i in 0..a.height() {
        for j in 0..a.width() {
            let [a11, a12, a22] = a.matrix(i, j);
            writeln!(out, "{i},{j},{a11},{a12},{a22}").unwrap();
        }
    }
    out
}
