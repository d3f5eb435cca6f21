//! Band-point CSV, run manifest and gnuplot script.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::sweep::{BandPoint, PointFlag};

pub const CSV_HEADER: [&str; 11] = [
    "alpha",
    "kx",
    "ky",
    "kz",
    "omega_over_2pi",
    "eta_re",
    "eta_im",
    "residual",
    "p_norm",
    "s_abs",
    "flag",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed row {row}: {message}")]
    Malformed { row: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `ω` whose `ω/2π` reproduces `nu` exactly, so a re-written file is
/// byte-identical.
fn omega_from_normalized(nu: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let guess = nu * two_pi;
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..4 {
        if hi / two_pi == nu {
            return hi;
        }
        if lo / two_pi == nu {
            return lo;
        }
        hi = hi.next_up();
        lo = lo.next_down();
    }
    guess
}

pub fn write_points<W: Write>(writer: W, points: &[BandPoint]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            num(p.alpha),
            num(p.k[0]),
            num(p.k[1]),
            num(p.k[2]),
            num(p.omega_over_2pi()),
            opt(p.eta.map(|e| e.re)),
            opt(p.eta.map(|e| e.im)),
            opt(p.residual),
            opt(p.p_norm),
            opt(p.s_abs),
            p.flag.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| OutputError::Csv(e.into()))?;
    Ok(())
}

pub fn read_points<R: Read>(reader: R) -> Result<Vec<BandPoint>, OutputError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(OutputError::Malformed {
            row: 0,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |j: usize| -> Result<Option<f64>, OutputError> {
            let s = rec.get(j).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| OutputError::Malformed {
                row,
                message: format!("column {} is not a number: {s:?}", CSV_HEADER[j]),
            })
        };
        let need = |j: usize| {
            field(j)?.ok_or_else(|| OutputError::Malformed {
                row,
                message: format!("column {} is empty", CSV_HEADER[j]),
            })
        };
        let flag = PointFlag::parse(rec.get(10).unwrap_or("")).ok_or_else(|| OutputError::Malformed {
            row,
            message: "unknown flag".into(),
        })?;
        let eta = match (field(5)?, field(6)?) {
            (Some(re), Some(im)) => Some(Complex64::new(re, im)),
            (None, None) => None,
            _ => {
                return Err(OutputError::Malformed {
                    row,
                    message: "eta needs both parts".into(),
                })
            }
        };
        out.push(BandPoint {
            alpha: need(0)?,
            k: [need(1)?, need(2)?, need(3)?],
            omega: omega_from_normalized(need(4)?),
            eta,
            residual: field(7)?,
            p_norm: field(8)?,
            s_abs: field(9)?,
            flag,
        });
    }
    Ok(out)
}

pub fn write_points_file(path: &Path, points: &[BandPoint]) -> Result<(), OutputError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_points(std::io::BufWriter::new(file), points)
}

pub fn read_points_file(path: &Path) -> Result<Vec<BandPoint>, OutputError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_points(std::io::BufReader::new(file))
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub thresholds: serde_json::Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<serde_json::Value>,
    pub extra: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            thresholds: serde_json::Value::Null,
            outputs: Vec::new(),
            warnings: Vec::new(),
            failures: Vec::new(),
            extra: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(io_err(path))
    }
}

/// Gnuplot script plotting `ω/2π` against `α`, one data set per flag.
pub fn gnuplot_script(csv_name: &str, title: &str) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    s.push_str(&format!("set title '{}'\n", title.replace('\'', "")));
    s.push_str("set xlabel 'alpha'\nset ylabel 'omega / 2 pi'\n");
    s.push_str("set xrange [0:3*pi]\n");
    s.push_str("set xtics ('G' 0, 'X' pi, 'M' 2*pi, 'R' 3*pi)\n");
    s.push_str("set grid xtics\n");
    let flags = ["standard", "physical", "complex"];
    let plots: Vec<String> = flags
        .iter()
        .map(|f| {
            format!(
                "'{csv_name}' using 1:(strcol(11) eq '{f}' ? $5 : 1/0) skip 1 with points pt 7 ps 0.5 title '{f}'"
            )
        })
        .collect();
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn write_gnuplot(path: &Path, csv_name: &str, title: &str) -> Result<(), OutputError> {
    fs::write(path, gnuplot_script(csv_name, title)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<BandPoint> {
        vec![
            BandPoint {
                alpha: 0.1,
                k: [0.1, 0.0, 0.0],
                omega: 0.7,
                eta: None,
                residual: None,
                p_norm: None,
                s_abs: None,
                flag: PointFlag::Standard,
            },
            BandPoint {
                alpha: 1.0 / 3.0,
                k: [1.0 / 3.0, 0.0, 0.0],
                omega: 1.234567890123,
                eta: Some(Complex64::new(0.3333333333333333, -1e-17)),
                residual: Some(1.5e-13),
                p_norm: Some(0.0),
                s_abs: Some(2e-300),
                flag: PointFlag::Physical,
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut buf = Vec::new();
        write_points(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("alpha,kx,ky,kz,omega_over_2pi,eta_re,eta_im,residual,p_norm,s_abs,flag\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,,,,,standard"));
        let back = read_points(buf.as_slice()).unwrap();
        let want = sample();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&want) {
            assert_eq!(a.alpha, b.alpha);
            assert_eq!(a.k, b.k);
            assert_eq!(a.eta, b.eta);
            assert_eq!(a.residual, b.residual);
            assert_eq!(a.flag, b.flag);
            assert!((a.omega - b.omega).abs() <= 1e-15 * b.omega);
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_header = "a,b\n1,2\n";
        assert!(read_points(bad_header.as_bytes()).is_err());
        let mut buf = Vec::new();
        write_points(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("physical", "weird");
        assert!(matches!(read_points(text.as_bytes()), Err(OutputError::Malformed { row: 2, .. })));
    }

    #[test]
    fn gnuplot_mentions_csv() {
        let s = gnuplot_script("bands.csv", "rods");
        assert!(s.contains("'bands.csv'"));
        assert!(s.contains("set xtics"));
    }

    #[test]
    fn manifest_writes_json() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("admissible", serde_json::json!({"a": 1}), 7);
        m.warnings.push("w".into());
        let p = dir.path().join("manifest.json");
        m.write(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config"]["a"], 1);
    }
}
