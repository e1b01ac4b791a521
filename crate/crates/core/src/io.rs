//! File formats: JSON datasets of manifold points, CSV matrices with `#`
//! header lines, and PGM images.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::GrassmannPoint;
use crate::kernel::Point;
use crate::linalg::{Matrix, Vector};
use crate::spd::{make_spd, SpdMatrix};

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::BadShape("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        matrix_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A labelled (or unlabelled) set of manifold points with explicit shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dataset {
    Spd {
        dim: usize,
        points: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<i64>>,
    },
    Grassmann {
        ambient_dim: usize,
        subspace_dim: usize,
        points: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<i64>>,
    },
    Euclidean {
        dim: usize,
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<i64>>,
    },
}

impl Dataset {
    pub fn from_spd(points: &[SpdMatrix], labels: Option<Vec<i64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptySet)?.dim();
        Ok(Dataset::Spd {
            dim,
            points: points.iter().map(|p| rows_of(p.as_matrix())).collect(),
            labels,
        })
    }

    pub fn from_grassmann(points: &[GrassmannPoint], labels: Option<Vec<i64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySet)?;
        Ok(Dataset::Grassmann {
            ambient_dim: first.ambient_dim(),
            subspace_dim: first.subspace_dim(),
            points: points.iter().map(|p| rows_of(p.basis())).collect(),
            labels,
        })
    }

    pub fn from_euclidean(points: &[Vector], labels: Option<Vec<i64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptySet)?.len();
        Ok(Dataset::Euclidean {
            dim,
            points: points.iter().map(|p| p.iter().cloned().collect()).collect(),
            labels,
        })
    }

    pub fn labels(&self) -> Option<&[i64]> {
        match self {
            Dataset::Spd { labels, .. }
            | Dataset::Grassmann { labels, .. }
            | Dataset::Euclidean { labels, .. } => labels.as_deref(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Spd { points, .. } | Dataset::Grassmann { points, .. } => points.len(),
            Dataset::Euclidean { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Validated points; shapes are checked against the declared metadata.
    pub fn to_points(&self) -> Result<Vec<Point>> {
        let pts = match self {
            Dataset::Spd { dim, points, .. } => points
                .iter()
                .map(|rows| {
                    let m = matrix_from_rows(rows)?;
                    if m.shape() != (*dim, *dim) {
                        return Err(Error::dims(
                            format!("{dim}x{dim}"),
                            format!("{:?}", m.shape()),
                        ));
                    }
                    Ok(Point::Spd(make_spd(&m, None)?))
                })
                .collect::<Result<Vec<_>>>()?,
            Dataset::Grassmann {
                ambient_dim,
                subspace_dim,
                points,
                ..
            } => points
                .iter()
                .map(|rows| {
                    let m = matrix_from_rows(rows)?;
                    if m.shape() != (*ambient_dim, *subspace_dim) {
                        return Err(Error::dims(
                            format!("{ambient_dim}x{subspace_dim}"),
                            format!("{:?}", m.shape()),
                        ));
                    }
                    Ok(Point::Grassmann(GrassmannPoint::new(&m)?))
                })
                .collect::<Result<Vec<_>>>()?,
            Dataset::Euclidean { dim, points, .. } => points
                .iter()
                .map(|v| {
                    if v.len() != *dim {
                        return Err(Error::dims(dim, v.len()));
                    }
                    Ok(Point::Euclidean(Vector::from_column_slice(v)))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if let Some(labels) = self.labels() {
            if labels.len() != pts.len() {
                return Err(Error::dims(pts.len(), labels.len()));
            }
        }
        Ok(pts)
    }
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `#`-prefixed header lines followed by comma-separated rows.
pub fn write_matrix_csv<W: Write>(mut w: W, header: &[String], m: &Matrix) -> Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Reads a CSV matrix, skipping blank lines and `#` comments.
pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: bad number '{}'", lineno + 1, c.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    matrix_from_rows(&rows)
}

/// Header lines (`key=value`) of a CSV written by [`write_matrix_csv`].
pub fn read_csv_header<R: BufRead>(r: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let Some(rest) = line.trim().strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.trim().split_once('=') {
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

/// Parses a binary (P5) or ASCII (P2) PGM image into intensities in [0, 1].
pub fn read_pgm(bytes: &[u8]) -> Result<Matrix> {
    let mut pos = 0usize;
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos)?;
    let parse = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad PGM header field '{s}'")))
    };
    let width = parse(next_token(&mut pos)?)?;
    let height = parse(next_token(&mut pos)?)?;
    let maxval = parse(next_token(&mut pos)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("bad PGM maxval {maxval}")));
    }
    let scale = 1.0 / maxval as f64;
    let n = width * height;
    match magic.as_str() {
        "P2" => {
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                vals.push(parse(next_token(&mut pos)?)? as f64 * scale);
            }
            Ok(Matrix::from_row_slice(height, width, &vals))
        }
        "P5" => {
            pos += 1; // single whitespace after maxval
            let bpp = if maxval < 256 { 1 } else { 2 };
            let data = bytes
                .get(pos..pos + n * bpp)
                .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
            let vals: Vec<f64> = if bpp == 1 {
                data.iter().map(|&b| b as f64 * scale).collect()
            } else {
                data.chunks(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
                    .collect()
            };
            Ok(Matrix::from_row_slice(height, width, &vals))
        }
        other => Err(Error::Parse(format!("unsupported image format '{other}'"))),
    }
}

/// Binary 8-bit PGM of intensities clamped to [0, 1].
pub fn write_pgm(image: &Matrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.ncols(), image.nrows()).into_bytes();
    for r in 0..image.nrows() {
        for c in 0..image.ncols() {
            out.push((image[(r, c)].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_preserves_bits() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.1 + 0.2, -1e-300, 1.0 / 3.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &["m=2".into(), "gamma=0.5".into()], &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# m=2\n# gamma=0.5\n1.0,"));
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), m);
        let header = read_csv_header(&buf[..]).unwrap();
        assert_eq!(header[1], ("gamma".into(), "0.5".into()));
    }

    #[test]
    fn csv_errors() {
        assert!(read_matrix_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,x\n".as_bytes()).is_err());
        assert!(read_matrix_csv("# only header\n".as_bytes()).is_err());
    }

    #[test]
    fn pgm_formats() {
        let ascii = b"P2\n# comment\n3 2\n255\n0 255 51\n102 0 255\n";
        let img = read_pgm(ascii).unwrap();
        assert_eq!(img.shape(), (2, 3));
        assert_eq!(img[(0, 1)], 1.0);
        assert!((img[(0, 2)] - 0.2).abs() < 1e-15);
        let bin = write_pgm(&img);
        assert_eq!(read_pgm(&bin).unwrap(), img);
        assert!(read_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(read_pgm(b"P5\n4 4\n255\n\0").is_err());
    }

    #[test]
    fn dataset_validates_shapes() {
        let ds: Dataset =
            serde_json::from_str(r#"{"kind":"spd","dim":2,"points":[[[2,0],[0,3]]],"labels":[1]}"#)
                .unwrap();
        assert_eq!(ds.to_points().unwrap().len(), 1);
        let bad: Dataset =
            serde_json::from_str(r#"{"kind":"spd","dim":3,"points":[[[2,0],[0,3]]]}"#).unwrap();
        assert!(matches!(bad.to_points(), Err(Error::DimMismatch { .. })));
        let bad: Dataset =
            serde_json::from_str(r#"{"kind":"euclidean","dim":1,"points":[[1],[2]],"labels":[0]}"#)
                .unwrap();
        assert!(bad.to_points().is_err());
    }
}
