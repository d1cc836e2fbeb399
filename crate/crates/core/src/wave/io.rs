//! Seismogram export and import.
//!
//! Two interchangeable formats. Per-trace CSV carries a `t,value` header
//! row and one sample per line, for plotting and diffing. The binary
//! container is little-endian throughout: magic `SEIS`, format version
//! (u32), sample interval dt (f64), sample count (u64), receiver count
//! (u64), then every receiver's samples in station order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::wave::{Seismogram, SeismogramSet};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SEIS";
const VERSION: u32 = 1;

pub fn write_trace_csv<W: Write>(trace: &Seismogram, mut w: W) -> Result<()> {
    writeln!(w, "t,value")?;
    for (i, v) in trace.samples.iter().enumerate() {
        writeln!(w, "{},{:e}", trace.time(i), v)?;
    }
    Ok(())
}

/// Writes one CSV per receiver into `dir`, named `{stem}_r{NN}.csv`, and
/// returns the paths in station order.
pub fn export_csv(set: &SeismogramSet, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(set.len());
    for tr in &set.traces {
        let path = dir.join(format!("{stem}_r{:02}.csv", tr.receiver_index));
        let mut w = BufWriter::new(File::create(&path)?);
        write_trace_csv(tr, &mut w)?;
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_binary(set: &SeismogramSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&set.dt.to_le_bytes())?;
    w.write_all(&(set.nt() as u64).to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    for tr in &set.traces {
        for v in &tr.samples {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary(path: &Path) -> Result<SeismogramSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config("not a seismogram file: bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::config(format!("unsupported seismogram format version {version}")));
    }
    let dt = read_f64(&mut r)?;
    let nt = read_u64(&mut r)? as usize;
    let nrec = read_u64(&mut r)? as usize;
    if !(dt > 0.0) || nt == 0 || nrec == 0 || nt > 100_000_000 || nrec > 1_000_000 {
        return Err(Error::config("seismogram header out of range"));
    }
    let mut traces = Vec::with_capacity(nrec);
    for k in 0..nrec {
        let mut samples = Vec::with_capacity(nt);
        for _ in 0..nt {
            samples.push(read_f64(&mut r)?);
        }
        traces.push(Seismogram::new(k + 1, dt, samples));
    }
    Ok(SeismogramSet::new(traces))
}
