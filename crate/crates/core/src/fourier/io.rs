//! Flat binary and CSV snapshots of space-time fields.
//!
//! Binary layout (little-endian): `n: u64, N: u64, L: f64, c: u64, M: u64,
//! t0: f64, dt: f64`, followed by `M * c * N^n` complex values as `(re, im)`
//! pairs of `f64`, ordered snapshot, component, row-major grid index.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Grid, SpaceTimeField, SpatialField, TimeGrid};
use crate::error::{Error, Result};

/// Largest grid written by [`write_csv`].
pub const CSV_MAX_VALUES: usize = 1 << 16;

pub fn encode(field: &SpaceTimeField) -> Vec<u8> {
    let grid = field.grid();
    let time = field.time();
    let mut out = Vec::with_capacity(56 + 16 * field.snapshots().len() * field.snapshot(0).data().len());
    out.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(grid.points() as u64).to_le_bytes());
    out.extend_from_slice(&grid.period().to_le_bytes());
    out.extend_from_slice(&(field.comps() as u64).to_le_bytes());
    out.extend_from_slice(&(time.samples() as u64).to_le_bytes());
    out.extend_from_slice(&time.t0().to_le_bytes());
    out.extend_from_slice(&time.dt().to_le_bytes());
    for s in field.snapshots() {
        for z in s.data() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SpaceTimeField> {
    let mut cur = bytes;
    let mut word = || -> Result<[u8; 8]> {
        if cur.len() < 8 {
            return Err(Error::Shape("truncated field stream".into()));
        }
        let (head, rest) = cur.split_at(8);
        cur = rest;
        Ok(head.try_into().expect("8 bytes"))
    };
    let dim = u64::from_le_bytes(word()?) as usize;
    let points = u64::from_le_bytes(word()?) as usize;
    let period = f64::from_le_bytes(word()?);
    let comps = u64::from_le_bytes(word()?) as usize;
    let samples = u64::from_le_bytes(word()?) as usize;
    let t0 = f64::from_le_bytes(word()?);
    let dt = f64::from_le_bytes(word()?);
    let grid = Grid::new(dim, points, period)?;
    let time = TimeGrid::new(t0, dt, samples)?;
    let width = comps * grid.len();
    let mut snapshots = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut data = Vec::with_capacity(width);
        for _ in 0..width {
            let re = f64::from_le_bytes(word()?);
            let im = f64::from_le_bytes(word()?);
            data.push(Complex64::new(re, im));
        }
        snapshots.push(SpatialField::new(grid, comps, data)?);
    }
    if !cur.is_empty() {
        return Err(Error::Shape(format!("{} trailing bytes after field data", cur.len())));
    }
    SpaceTimeField::new(time, snapshots)
}

pub fn write_binary(field: &SpaceTimeField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(&encode(field)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<SpaceTimeField> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// One row per value: `t,component,index,x0,x1,x2,re,im`.
pub fn write_csv(field: &SpaceTimeField, out: &mut impl Write) -> Result<()> {
    let width = field.snapshot(0).data().len();
    if width * field.snapshots().len() > CSV_MAX_VALUES {
        return Err(Error::Shape(format!(
            "{} values exceed the CSV limit of {CSV_MAX_VALUES}",
            width * field.snapshots().len()
        )));
    }
    let io = |e| Error::io("<csv>", e);
    writeln!(out, "t,component,index,x0,x1,x2,re,im").map_err(io)?;
    let grid = *field.grid();
    for (j, s) in field.snapshots().iter().enumerate() {
        let t = field.time().time(j);
        for c in 0..s.comps() {
            for (idx, z) in s.component(c).iter().enumerate() {
                let x = grid.position(idx);
                writeln!(
                    out,
                    "{t:.16e},{c},{idx},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    x[0], x[1], x[2], z.re, z.im
                )
                .map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Values column pair of a CSV written by [`write_csv`], in file order.
pub fn read_csv_values(input: impl Read) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::Shape(format!("line {}: expected 8 columns", n + 1)));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Shape(format!("line {}: {e}", n + 1)))
        };
        out.push(Complex64::new(parse(cols[6])?, parse(cols[7])?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceTimeField {
        let grid = Grid::new(2, 4, 1.5).unwrap();
        let time = TimeGrid::new(-0.5, 0.25, 3).unwrap();
        SpaceTimeField::from_fn(time, grid, 3, |t, c, x| {
            Complex64::new(t + c as f64, x[0] - x[1] * 0.1)
        })
    }

    #[test]
    fn binary_round_trip() {
        let f = sample();
        let bytes = encode(&f);
        assert_eq!(bytes.len(), 56 + 16 * 3 * 3 * 16);
        assert_eq!(decode(&bytes).unwrap(), f);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.5);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[32..40].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), -0.5);
        assert_eq!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()), 0.25);
    }

    #[test]
    fn csv_round_trip_values() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let vals = read_csv_values(buf.as_slice()).unwrap();
        let want: Vec<Complex64> = f.snapshots().iter().flat_map(|s| s.data().to_vec()).collect();
        assert_eq!(vals, want);
    }
}
