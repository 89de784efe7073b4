//! Plain-text formats.
//!
//! * spectra: header `l,m,re,im`, one record per coefficient;
//! * sphere samples: header `theta,phi,re,im`, one record per node;
//! * potentials: `#`-prefixed `key=value` header lines, then `x,y,z,re_q,im_q`.
//!
//! Floats are written with `{:e}`, the shortest representation that parses
//! back to the same bits, so files round-trip exactly.

use num_complex::Complex64;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sphere::{HarmonicSpectrum, SphereQuadrature};

pub const SPECTRUM_HEADER: &str = "l,m,re,im";
pub const SAMPLES_HEADER: &str = "theta,phi,re,im";
pub const POTENTIAL_HEADER: &str = "x,y,z,re_q,im_q";

/// One `theta,phi,re,im` record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSample {
    pub theta: f64,
    pub phi: f64,
    pub value: Complex64,
}

fn records<R: BufRead>(reader: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t == header {
            continue;
        }
        out.push((i + 1, t.split(',').map(|s| s.trim().to_string()).collect()));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: usize, fields: &[String], idx: usize, name: &str) -> Result<T> {
    fields
        .get(idx)
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("missing field {name}"),
        })?
        .parse()
        .map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse {name} from {:?}", fields[idx]),
        })
}

fn expect_width(line: usize, fields: &[String], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    Ok(())
}

pub fn write_spectrum<W: Write>(mut w: W, spec: &HarmonicSpectrum) -> Result<()> {
    writeln!(w, "{SPECTRUM_HEADER}")?;
    for (l, m, c) in spec.iter() {
        writeln!(w, "{l},{m},{:e},{:e}", c.re, c.im)?;
    }
    Ok(())
}

/// Reads `l,m,re,im` records; unlisted coefficients are zero and the degree
/// is the largest `l` present. Duplicate entries are rejected.
pub fn read_spectrum<R: BufRead>(r: R) -> Result<HarmonicSpectrum> {
    let recs = records(r, SPECTRUM_HEADER)?;
    let mut entries = Vec::with_capacity(recs.len());
    let mut degree = 0usize;
    for (line, f) in &recs {
        expect_width(*line, f, 4)?;
        let l: usize = field(*line, f, 0, "l")?;
        let m: i64 = field(*line, f, 1, "m")?;
        let re: f64 = field(*line, f, 2, "re")?;
        let im: f64 = field(*line, f, 3, "im")?;
        if m.unsigned_abs() as usize > l {
            return Err(Error::Parse {
                line: *line,
                message: format!("|m| = {} exceeds l = {l}", m.abs()),
            });
        }
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Parse {
                line: *line,
                message: "non-finite coefficient".into(),
            });
        }
        degree = degree.max(l);
        entries.push((*line, l, m, Complex64::new(re, im)));
    }
    if entries.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "spectrum file has no records".into(),
        });
    }
    let mut spec = HarmonicSpectrum::zeros(degree);
    let mut seen = vec![false; (degree + 1) * (degree + 1)];
    for (line, l, m, c) in entries {
        let idx = crate::specfun::lm_index(l, m);
        if seen[idx] {
            return Err(Error::Parse {
                line,
                message: format!("duplicate coefficient ({l},{m})"),
            });
        }
        seen[idx] = true;
        spec.set(l, m, c)?;
    }
    Ok(spec)
}

pub fn write_samples<W: Write>(mut w: W, quad: &SphereQuadrature, values: &[Complex64]) -> Result<()> {
    writeln!(w, "{SAMPLES_HEADER}")?;
    for (d, v) in quad.nodes().iter().zip(values) {
        writeln!(w, "{:e},{:e},{:e},{:e}", d.theta(), d.phi(), v.re, v.im)?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<SphereSample>> {
    records(r, SAMPLES_HEADER)?
        .iter()
        .map(|(line, f)| {
            expect_width(*line, f, 4)?;
            Ok(SphereSample {
                theta: field(*line, f, 0, "theta")?,
                phi: field(*line, f, 1, "phi")?,
                value: Complex64::new(field(*line, f, 2, "re")?, field(*line, f, 3, "im")?),
            })
        })
        .collect()
}

/// Identifies the product quadrature a sample set lives on: `2n²` records in
/// the node order of [`SphereQuadrature::new`], coordinates matching to 1e-9.
pub fn samples_on_quadrature(samples: &[SphereSample]) -> Result<(SphereQuadrature, Vec<Complex64>)> {
    let half = samples.len() / 2;
    let n = (half as f64).sqrt().round() as usize;
    if n == 0 || 2 * n * n != samples.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples do not form a product sphere quadrature (need 2n^2 records)",
            samples.len()
        )));
    }
    let quad = SphereQuadrature::new(n)?;
    for (i, (s, d)) in samples.iter().zip(quad.nodes()).enumerate() {
        let dphi = (s.phi - d.phi()).rem_euclid(2.0 * std::f64::consts::PI);
        let dphi = dphi.min(2.0 * std::f64::consts::PI - dphi);
        let pole = d.theta().sin() < 1e-12;
        if (s.theta - d.theta()).abs() > 1e-9 || (!pole && dphi > 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "sample {} at (theta={}, phi={}) is not node ({}, {}) of the order-{n} sphere quadrature",
                i + 1,
                s.theta,
                s.phi,
                d.theta(),
                d.phi()
            )));
        }
    }
    Ok((quad, samples.iter().map(|s| s.value).collect()))
}

/// Contents of a potential file.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFile {
    /// `key=value` pairs from the `#` header, in file order.
    pub header: Vec<(String, String)>,
    pub points: Vec<[f64; 3]>,
    pub values: Vec<Complex64>,
}

impl PotentialFile {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn write_potential<W: Write>(
    mut w: W,
    header: &[(&str, String)],
    points: &[[f64; 3]],
    values: &[Complex64],
) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    for (k, v) in header {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{POTENTIAL_HEADER}")?;
    for (x, q) in points.iter().zip(values) {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", x[0], x[1], x[2], q.re, q.im)?;
    }
    Ok(())
}

pub fn read_potential<R: BufRead>(r: R) -> Result<PotentialFile> {
    let mut header = Vec::new();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if t.is_empty() || t == POTENTIAL_HEADER {
            continue;
        }
        let f: Vec<String> = t.split(',').map(|s| s.trim().to_string()).collect();
        expect_width(i + 1, &f, 5)?;
        points.push([field(i + 1, &f, 0, "x")?, field(i + 1, &f, 1, "y")?, field(i + 1, &f, 2, "z")?]);
        values.push(Complex64::new(field(i + 1, &f, 3, "re_q")?, field(i + 1, &f, 4, "im_q")?));
    }
    Ok(PotentialFile { header, points, values })
}

/// Reads a pattern given either as a spectrum or as sphere samples, telling
/// them apart by the header line.
pub enum PatternFile {
    Spectrum(HarmonicSpectrum),
    Samples(Vec<SphereSample>),
}

pub fn read_pattern<R: BufRead>(r: R) -> Result<PatternFile> {
    let text = std::io::read_to_string(r)?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first == SAMPLES_HEADER {
        Ok(PatternFile::Samples(read_samples(text.as_bytes())?))
    } else {
        Ok(PatternFile::Spectrum(read_spectrum(text.as_bytes())?))
    }
}
