//! File formats: dataset CSV, columnar binary samples with a JSON index,
//! curve CSV and JSON helpers.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! reads back bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::basis::SplineConfig;
use crate::config::Method;
use crate::data::{Dataset, Matrix};
use crate::inference::CurveEstimate;
use crate::sampler::{ChainSamples, PosteriorSamples};
use crate::{Error, Result};

pub const SAMPLES_MAGIC: &[u8; 8] = b"QVCSAMP1";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e.to_string()))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

/// Header `V, E_1..E_q, X_1..X_p, Y`.
pub fn dataset_header(p: usize, q: usize) -> Vec<String> {
    let mut h = vec!["V".to_string()];
    h.extend((1..=q).map(|k| format!("E_{k}")));
    h.extend((1..=p).map(|k| format!("X_{k}")));
    h.push("Y".into());
    h
}

pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(dataset_header(dataset.p(), dataset.q())).map_err(|e| csv_err(path, e))?;
    let mut row = Vec::with_capacity(dataset.p() + dataset.q() + 2);
    for i in 0..dataset.n() {
        row.clear();
        row.push(dataset.v[i].to_string());
        row.extend(dataset.e.row(i).iter().map(f64::to_string));
        row.extend(dataset.x.row(i).iter().map(f64::to_string));
        row.push(dataset.y[i].to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let q = header.iter().filter(|h| h.starts_with("E_")).count();
    let p = header.iter().filter(|h| h.starts_with("X_")).count();
    if header != dataset_header(p, q) {
        return Err(Error::format(
            path,
            format!("expected columns V, E_1..E_q, X_1..X_p, Y; found {}", header.join(",")),
        ));
    }
    let (mut v, mut e, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|err| Error::format(path, format!("row {}: {err}", line + 2)))?;
        v.push(vals[0]);
        e.extend_from_slice(&vals[1..1 + q]);
        x.extend_from_slice(&vals[1 + q..1 + q + p]);
        y.push(vals[1 + q + p]);
    }
    let n = y.len();
    Dataset::new(v, Matrix::from_row_major(n, p, x)?, Matrix::from_row_major(n, q, e)?, y)
}

/// Per-chain entry of the sample index. Offsets are byte offsets into the
/// binary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainIndex {
    pub chain: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub draws: usize,
    pub arrays: Vec<ArrayIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayIndex {
    pub name: String,
    /// `f64le` or `u8`.
    pub dtype: String,
    pub offset: u64,
    pub len: usize,
    /// Values per draw.
    pub width: usize,
}

/// JSON sidecar describing a samples binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesIndex {
    pub format: String,
    pub data_file: String,
    pub method: Method,
    pub tau: f64,
    pub spline: SplineConfig,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: Vec<ChainIndex>,
}

fn f64_arrays(ch: &ChainSamples) -> [(&'static str, &[f64]); 6] {
    [
        ("alpha", &ch.alpha),
        ("beta", &ch.beta),
        ("scale", &ch.scale),
        ("shrinkage", &ch.shrinkage),
        ("slab", &ch.slab),
        ("pi0", &ch.pi0),
    ]
}

/// Sidecar path for a samples binary: `x.bin` → `x.json`.
pub fn samples_index_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `bin` and its JSON index next to it. The output depends only on
/// the samples, so identical fits produce identical files.
pub fn write_samples(bin: &Path, samples: &PosteriorSamples) -> Result<()> {
    samples.validate()?;
    let mut w = create(bin)?;
    let werr = |e| Error::io(bin, e);
    w.write_all(SAMPLES_MAGIC).map_err(werr)?;
    let mut offset = SAMPLES_MAGIC.len() as u64;
    let mut chains = Vec::with_capacity(samples.chains.len());
    let s_width = |name: &str| match name {
        "alpha" => samples.alpha_width(),
        "beta" => samples.q,
        "slab" | "inclusion" => samples.p,
        _ => 1,
    };
    for ch in &samples.chains {
        let mut arrays = Vec::new();
        for (name, data) in f64_arrays(ch) {
            for v in data {
                w.write_all(&v.to_le_bytes()).map_err(werr)?;
            }
            arrays.push(ArrayIndex {
                name: name.into(),
                dtype: "f64le".into(),
                offset,
                len: data.len(),
                width: s_width(name),
            });
            offset += 8 * data.len() as u64;
        }
        w.write_all(&ch.inclusion).map_err(werr)?;
        arrays.push(ArrayIndex {
            name: "inclusion".into(),
            dtype: "u8".into(),
            offset,
            len: ch.inclusion.len(),
            width: s_width("inclusion"),
        });
        offset += ch.inclusion.len() as u64;
        chains.push(ChainIndex {
            chain: ch.chain,
            seed: ch.seed,
            stream_id: ch.stream_id,
            draws: ch.draws,
            arrays,
        });
    }
    w.flush().map_err(werr)?;
    let index = SamplesIndex {
        format: "qvcss-samples-1".into(),
        data_file: bin.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        method: samples.method,
        tau: samples.tau,
        spline: samples.spline,
        n: samples.n,
        p: samples.p,
        d: samples.d,
        q: samples.q,
        iterations: samples.iterations,
        burn_in: samples.burn_in,
        thin: samples.thin,
        seed: samples.seed,
        chains,
    };
    write_json(&samples_index_path(bin), &index)
}

/// Reads a samples binary through its JSON index.
pub fn read_samples(bin: &Path) -> Result<PosteriorSamples> {
    let index: SamplesIndex = read_json(&samples_index_path(bin))?;
    let mut bytes = Vec::new();
    open(bin)?.read_to_end(&mut bytes).map_err(|e| Error::io(bin, e))?;
    if bytes.len() < 8 || &bytes[..8] != SAMPLES_MAGIC {
        return Err(Error::format(bin, "not a samples file (bad magic)"));
    }
    let slice = |a: &ArrayIndex, elem: usize| -> Result<&[u8]> {
        let start = a.offset as usize;
        let end = start + a.len * elem;
        bytes
            .get(start..end)
            .ok_or_else(|| Error::format(bin, format!("array {} runs past end of file", a.name)))
    };
    let mut chains = Vec::with_capacity(index.chains.len());
    for ci in &index.chains {
        let get = |name: &str| {
            ci.arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::format(bin, format!("index lacks array {name}")))
        };
        let floats = |name: &str| -> Result<Vec<f64>> {
            let raw = slice(get(name)?, 8)?;
            Ok(raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        chains.push(ChainSamples {
            chain: ci.chain,
            seed: ci.seed,
            stream_id: ci.stream_id,
            draws: ci.draws,
            alpha: floats("alpha")?,
            beta: floats("beta")?,
            scale: floats("scale")?,
            shrinkage: floats("shrinkage")?,
            slab: floats("slab")?,
            pi0: floats("pi0")?,
            inclusion: slice(get("inclusion")?, 1)?.to_vec(),
        });
    }
    let samples = PosteriorSamples {
        method: index.method,
        tau: index.tau,
        spline: index.spline,
        n: index.n,
        p: index.p,
        d: index.d,
        q: index.q,
        iterations: index.iterations,
        burn_in: index.burn_in,
        thin: index.thin,
        seed: index.seed,
        chains,
    };
    samples.validate().map_err(|e| Error::format(bin, e.to_string()))?;
    Ok(samples)
}

/// Long-format curve table: `j, v, median, lower, upper`.
pub fn write_curves_csv(path: &Path, curves: &[CurveEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["j", "v", "median", "lower", "upper"]).map_err(|e| csv_err(path, e))?;
    for c in curves {
        for t in 0..c.grid.len() {
            w.write_record([
                c.j.to_string(),
                c.grid[t].to_string(),
                c.median[t].to_string(),
                c.lower[t].to_string(),
                c.upper[t].to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curves_csv(path: &Path) -> Result<Vec<CurveEstimate>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut out: Vec<CurveEstimate> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |msg: String| Error::format(path, format!("row {}: {msg}", line + 2));
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", rec.len())));
        }
        let j: usize = rec[0].parse().map_err(|e| bad(format!("{e}")))?;
        let num = |k: usize| rec[k].parse::<f64>().map_err(|e| bad(format!("{e}")));
        let (v, m, l, u) = (num(1)?, num(2)?, num(3)?, num(4)?);
        if out.last().is_none_or(|c| c.j != j) {
            if out.iter().any(|c| c.j == j) {
                return Err(bad(format!("curve {j} is not contiguous")));
            }
            out.push(CurveEstimate {
                j,
                grid: Vec::new(),
                median: Vec::new(),
                lower: Vec::new(),
                upper: Vec::new(),
            });
        }
        let c = out.last_mut().expect("pushed above");
        c.grid.push(v);
        c.median.push(m);
        c.lower.push(l);
        c.upper.push(u);
    }
    out.sort_by_key(|c| c.j);
    Ok(out)
}
