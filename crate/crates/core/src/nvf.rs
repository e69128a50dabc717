//! The NVF1 field file format and CSV export.
//!
//! An NVF1 file starts with six ASCII lines: the magic `NVF1`, `n`, `s`, the
//! plane (`z` or `k`), the kind (`real` or `complex`) and the encoding
//! `le-f64`. Then come the samples as little-endian 64-bit floats in
//! row-major order, with interleaved `(re, im)` pairs for complex fields.
//! The half-width is written in Rust's shortest round-trip notation, so a
//! header read back gives the identical grid.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::data::is_real_field;
use crate::error::{NvError, Result};
use crate::grid::{ComplexField, Grid2D, Plane};

pub const MAGIC: &str = "NVF1";
pub const ENCODING: &str = "le-f64";

/// Largest grid exported as CSV.
pub const CSV_MAX_N: usize = 256;

/// Whether the samples are stored with imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

impl FieldKind {
    pub fn tag(self) -> &'static str {
        match self {
            FieldKind::Real => "real",
            FieldKind::Complex => "complex",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "real" => Ok(FieldKind::Real),
            "complex" => Ok(FieldKind::Complex),
            other => Err(NvError::Format(format!("unknown field kind {other:?}"))),
        }
    }

    /// `Real` when every imaginary part is exactly zero.
    pub fn of(field: &ComplexField) -> Self {
        if field.values().iter().all(|v| v.im == 0.0) {
            FieldKind::Real
        } else {
            FieldKind::Complex
        }
    }
}

/// The six header fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvfHeader {
    pub n: usize,
    pub s: f64,
    pub plane: Plane,
    pub kind: FieldKind,
}

impl NvfHeader {
    pub fn to_text(&self) -> String {
        format!(
            "{MAGIC}\n{}\n{}\n{}\n{}\n{ENCODING}\n",
            self.n,
            self.s,
            self.plane.tag(),
            self.kind.tag()
        )
    }

    /// Parses the header from its six lines.
    pub fn parse(lines: &[String]) -> Result<Self> {
        if lines.len() != 6 {
            return Err(NvError::Format(format!("NVF1 header has {} lines, expected 6", lines.len())));
        }
        if lines[0] != MAGIC {
            return Err(NvError::Format(format!("bad magic {:?}", lines[0])));
        }
        let n = lines[1]
            .parse()
            .map_err(|_| NvError::Format(format!("bad sample count {:?}", lines[1])))?;
        let s = lines[2]
            .parse()
            .map_err(|_| NvError::Format(format!("bad half-width {:?}", lines[2])))?;
        let plane = Plane::from_tag(&lines[3]).map_err(|_| NvError::Format(format!("bad plane {:?}", lines[3])))?;
        let kind = FieldKind::from_tag(&lines[4])?;
        if lines[5] != ENCODING {
            return Err(NvError::Format(format!("unsupported encoding {:?}", lines[5])));
        }
        Ok(Self { n, s, plane, kind })
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.n, self.s, self.plane)
    }
}

/// Writes `field` as NVF1. A `Real` kind requires a real field (within the
/// library's reality tolerance) and drops the imaginary parts.
pub fn write_nvf(mut w: impl Write, field: &ComplexField, kind: FieldKind) -> Result<()> {
    if kind == FieldKind::Real && !is_real_field(field) {
        return Err(NvError::InvalidArgument("cannot store a complex field as real".into()));
    }
    let grid = field.grid();
    let header = NvfHeader {
        n: grid.n(),
        s: grid.half_width(),
        plane: grid.plane(),
        kind,
    };
    w.write_all(header.to_text().as_bytes())?;
    let per = if kind == FieldKind::Real { 8 } else { 16 };
    let mut buf = Vec::with_capacity(per * grid.len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        if kind == FieldKind::Complex {
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads an NVF1 stream.
pub fn read_nvf(r: impl Read) -> Result<(ComplexField, NvfHeader)> {
    let mut r = BufReader::new(r);
    let mut lines = Vec::with_capacity(6);
    for _ in 0..6 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(NvError::Format("truncated NVF1 header".into()));
        }
        let trimmed = line.strip_suffix('\n').ok_or_else(|| NvError::Format("truncated NVF1 header".into()))?;
        lines.push(trimmed.to_string());
    }
    let header = NvfHeader::parse(&lines)?;
    let grid = header.grid()?;
    let per = if header.kind == FieldKind::Real { 1 } else { 2 };
    let mut bytes = vec![0u8; 8 * per * grid.len()];
    r.read_exact(&mut bytes)
        .map_err(|_| NvError::Format("NVF1 payload shorter than the header announces".into()))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NvError::Format("trailing bytes after the NVF1 payload".into()));
    }
    let floats: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let values = if per == 1 {
        floats.iter().map(|&re| Complex64::new(re, 0.0)).collect()
    } else {
        floats.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
    };
    let field = ComplexField::from_values(grid, values)?;
    if !field.is_finite() {
        return Err(NvError::Format("NVF1 payload has non-finite samples".into()));
    }
    Ok((field, header))
}

/// Writes `field` to `path`, choosing the kind from its imaginary parts.
pub fn save(path: &Path, field: &ComplexField) -> Result<()> {
    write_nvf(BufWriter::new(File::create(path)?), field, FieldKind::of(field))
}

pub fn load(path: &Path) -> Result<ComplexField> {
    Ok(read_nvf(File::open(path)?)?.0)
}

/// CSV with header `x,y,re,im` and one row per sample, row-major.
pub fn write_csv(mut w: impl Write, field: &ComplexField) -> Result<()> {
    let grid = field.grid();
    if grid.n() > CSV_MAX_N {
        return Err(NvError::InvalidArgument(format!(
            "CSV export is limited to n <= {CSV_MAX_N}, got {}",
            grid.n()
        )));
    }
    writeln!(w, "x,y,re,im")?;
    for (idx, v) in field.values().iter().enumerate() {
        let p = grid.point_flat(idx);
        writeln!(w, "{},{},{},{}", p.re, p.im, v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(kind: FieldKind) -> ComplexField {
        let g = Grid2D::new(8, 2.5, Plane::K).unwrap();
        ComplexField::from_fn(g, |k| match kind {
            FieldKind::Real => Complex64::new(k.re * 0.1 + k.im, 0.0),
            FieldKind::Complex => Complex64::new(k.re / 3.0, k.norm_sqr().sin()),
        })
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in [FieldKind::Real, FieldKind::Complex] {
            let f = sample(kind);
            let mut buf = Vec::new();
            write_nvf(&mut buf, &f, kind).unwrap();
            let (back, header) = read_nvf(buf.as_slice()).unwrap();
            assert_eq!(back, f);
            assert_eq!(header.kind, kind);
            assert_eq!(buf.len(), header.to_text().len() + 64 * if kind == FieldKind::Real { 8 } else { 16 });
        }
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_nvf(&mut buf, &sample(FieldKind::Real), FieldKind::Real).unwrap();
        assert!(buf.starts_with(b"NVF1\n8\n2.5\nk\nreal\nle-f64\n"));
    }

    #[test]
    fn malformed_input_is_rejected() {
        let mut buf = Vec::new();
        write_nvf(&mut buf, &sample(FieldKind::Complex), FieldKind::Complex).unwrap();
        assert!(read_nvf(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_nvf(extra.as_slice()).is_err());
        let bad = String::from_utf8_lossy(&buf[..30]).replace("NVF1", "NVF2");
        assert!(read_nvf(bad.as_bytes()).is_err());
        assert!(write_nvf(Vec::new(), &sample(FieldKind::Complex), FieldKind::Real).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sample(FieldKind::Complex)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,re,im");
        assert_eq!(lines.len(), 65);
        assert!(lines[1].starts_with("-2.5,-2.5,"));
    }
}
