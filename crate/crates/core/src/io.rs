//! Field CSV files, PGM heatmaps and run manifests.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::SpatialField;

/// Scientific notation with 17 significant digits, enough to round-trip any
/// `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(v: Option<&Vec<f64>>, i: usize) -> String {
    v.map(|v| fmt_f64(v[i])).unwrap_or_default()
}

/// Writes `id,row,col,y,h,eps`. Grid coordinates are 1-based and `row`,
/// `col`, `h`, `eps` are left empty when unknown.
pub fn write_field<W: Write>(field: &SpatialField, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "row", "col", "y", "h", "eps"])?;
    for i in 0..field.n() {
        let (row, col) = match field.grid {
            Some((_, cols)) => ((i / cols + 1).to_string(), (i % cols + 1).to_string()),
            None => (String::new(), String::new()),
        };
        wtr.write_record([
            field.ids[i].clone(),
            row,
            col,
            fmt_f64(field.y[i]),
            fmt_opt(field.h.as_ref(), i),
            fmt_opt(field.eps.as_ref(), i),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a field CSV. Only `id` and `y` are required; rows are taken in
/// file order, which must match the weight-matrix indices.
pub fn read_field<R: Read>(reader: R) -> Result<SpatialField> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or_else(|| Error::InvalidInput("field file needs an 'id' column".into()))?;
    let y_col = col("y").ok_or_else(|| Error::InvalidInput("field file needs a 'y' column".into()))?;
    let (h_col, eps_col) = (col("h"), col("eps"));
    let (row_col, col_col) = (col("row"), col("col"));

    let parse = |s: &str, line: usize, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("line {line}: cannot parse {what} '{s}'")))
    };
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut h = Vec::new();
    let mut eps = Vec::new();
    let mut max_rc = (0usize, 0usize);
    let mut has_grid = row_col.is_some() && col_col.is_some();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        ids.push(field(id_col).to_string());
        y.push(parse(field(y_col), line, "y")?);
        if let Some(c) = h_col {
            if !field(c).is_empty() {
                h.push(parse(field(c), line, "h")?);
            }
        }
        if let Some(c) = eps_col {
            if !field(c).is_empty() {
                eps.push(parse(field(c), line, "eps")?);
            }
        }
        if let (Some(rc), Some(cc)) = (row_col, col_col) {
            match (field(rc).parse::<usize>(), field(cc).parse::<usize>()) {
                (Ok(r), Ok(c)) => max_rc = (max_rc.0.max(r), max_rc.1.max(c)),
                _ => has_grid = false,
            }
        }
    }
    let n = y.len();
    let mut out = SpatialField::from_observations(y);
    out.ids = ids;
    out.h = (h.len() == n && n > 0).then_some(h);
    out.eps = (eps.len() == n && n > 0).then_some(eps);
    if has_grid && max_rc.0 * max_rc.1 == n && n > 0 {
        out.grid = Some(max_rc);
    }
    Ok(out)
}

pub fn save_field(field: &SpatialField, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, std::fs::File::create(path)?)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SpatialField> {
    read_field(std::fs::File::open(path)?)
}

/// Plain (ASCII) PGM of a row-major lattice field, min-max scaled to
/// `0..=255`. A constant field is all black.
pub fn write_pgm<W: Write>(values: &[f64], rows: usize, cols: usize, mut writer: W) -> Result<()> {
    if rows * cols != values.len() {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            actual: values.len(),
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    writeln!(writer, "P2\n{cols} {rows}\n255")?;
    for r in 0..rows {
        let line: Vec<String> = values[r * cols..(r + 1) * cols]
            .iter()
            .map(|v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round().to_string()
                } else {
                    "0".to_string()
                }
            })
            .collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command: its arguments, seeds, the
/// software version and digests of every input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub seeds: Vec<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub runtime_secs: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: Vec<String>) -> Self {
        RunManifest {
            command,
            seeds: Vec::new(),
            version: version_string(),
            inputs: Vec::new(),
            runtime_secs: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Written next to the first output as `<output>.manifest.json`.
    pub fn manifest_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

pub fn version_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn field_round_trip() {
        let mut f = SpatialField::from_observations(vec![0.25, -1.0 / 3.0, 2.0, 1e-9]);
        f.h = Some(vec![1.0, 2.0, 3.0, 4.0]);
        f.eps = Some(vec![0.25, -1.0 / 3.0 / 2f64.sqrt(), 2.0 / 3f64.sqrt(), 5e-10]);
        f.grid = Some((2, 2));
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,row,col,y,h,eps\n1,1,1,"));
        assert_eq!(read_field(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn minimal_field_file() {
        let f = read_field("id,y\na,1.5\nb,-2\n".as_bytes()).unwrap();
        assert_eq!(f.y, vec![1.5, -2.0]);
        assert_eq!(f.ids, vec!["a", "b"]);
        assert!(f.h.is_none() && f.grid.is_none());
        assert!(read_field("id,z\n1,2\n".as_bytes()).is_err());
        assert!(read_field("id,y\n1,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn pgm_scaling() {
        let mut buf = Vec::new();
        write_pgm(&[0.0, 1.0, 2.0, 4.0], 2, 2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "P2\n2 2\n255\n0 64\n128 255\n");
        assert!(write_pgm(&[1.0; 3], 2, 2, Vec::new()).is_err());
    }

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
