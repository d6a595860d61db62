//! Flat binary field container.
//!
//! Layout (little-endian): magic `KGF1`, `n` (u64), `h` (f64), origin
//! (3 x f64), component count (u64), then node-interleaved complex values in
//! x-fastest order: for each node, each component contributes (re, im).

use super::{Grid3, Rep, ScalarField, SpinorState, VectorField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"KGF1";

fn write_header<W: Write>(w: &mut W, grid: &Grid3, comps: u64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.h().to_le_bytes())?;
    for o in grid.origin() {
        w.write_all(&o.to_le_bytes())?;
    }
    w.write_all(&comps.to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<(Grid3, u64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::validation("bad field container magic"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let h = f64::from_le_bytes(b8);
    let mut origin = [0.0; 3];
    for o in origin.iter_mut() {
        r.read_exact(&mut b8)?;
        *o = f64::from_le_bytes(b8);
    }
    r.read_exact(&mut b8)?;
    let comps = u64::from_le_bytes(b8);
    Ok((Grid3::new(n, h, origin)?, comps))
}

fn write_interleaved<W: Write>(w: &mut W, comps: &[&[Complex64]]) -> Result<()> {
    let len = comps[0].len();
    let mut buf = Vec::with_capacity(len * comps.len() * 16);
    for i in 0..len {
        for c in comps {
            buf.extend_from_slice(&c[i].re.to_le_bytes());
            buf.extend_from_slice(&c[i].im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_interleaved<R: Read>(r: &mut R, len: usize, ncomp: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut raw = vec![0u8; len * ncomp * 16];
    r.read_exact(&mut raw)?;
    let mut comps = vec![Vec::with_capacity(len); ncomp];
    let mut off = 0;
    for _ in 0..len {
        for comp in comps.iter_mut() {
            let re = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(raw[off + 8..off + 16].try_into().unwrap());
            comp.push(Complex64::new(re, im));
            off += 16;
        }
    }
    Ok(comps)
}

pub fn write_scalar<W: Write>(w: &mut W, f: &ScalarField) -> Result<()> {
    write_header(w, &f.grid, 1)?;
    write_interleaved(w, &[&f.values])
}

pub fn read_scalar<R: Read>(r: &mut R) -> Result<ScalarField> {
    let (grid, comps) = read_header(r)?;
    if comps != 1 {
        return Err(Error::validation(format!(
            "expected 1 component, found {comps}"
        )));
    }
    let mut data = read_interleaved(r, grid.len(), 1)?;
    Ok(ScalarField {
        grid,
        values: data.remove(0),
    })
}

pub fn write_vector<W: Write>(w: &mut W, f: &VectorField) -> Result<()> {
    write_header(w, &f.grid, 3)?;
    write_interleaved(w, &[&f.comps[0], &f.comps[1], &f.comps[2]])
}

pub fn read_vector<R: Read>(r: &mut R) -> Result<VectorField> {
    let (grid, comps) = read_header(r)?;
    if comps != 3 {
        return Err(Error::validation(format!(
            "expected 3 components, found {comps}"
        )));
    }
    let mut data = read_interleaved(r, grid.len(), 3)?;
    let c2 = data.pop().unwrap();
    let c1 = data.pop().unwrap();
    let c0 = data.pop().unwrap();
    Ok(VectorField {
        grid,
        comps: [c0, c1, c2],
    })
}

pub fn write_spinor<W: Write>(w: &mut W, s: &SpinorState) -> Result<()> {
    write_header(w, &s.grid, 2)?;
    write_interleaved(w, &[&s.comps[0], &s.comps[1]])
}

/// The container does not carry the representation tag or momentum shift;
/// the caller supplies them.
pub fn read_spinor<R: Read>(r: &mut R, rep: Rep) -> Result<SpinorState> {
    let (grid, comps) = read_header(r)?;
    if comps != 2 {
        return Err(Error::validation(format!(
            "expected 2 components, found {comps}"
        )));
    }
    let mut data = read_interleaved(r, grid.len(), 2)?;
    let c1 = data.pop().unwrap();
    let c0 = data.pop().unwrap();
    Ok(SpinorState {
        grid,
        comps: [c0, c1],
        rep,
        shift: [0.0; 3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::dot;

    #[test]
    fn test_scalar_roundtrip() {
        let grid = Grid3::centered(8, 4.0).unwrap();
        let f = ScalarField::from_fn(grid, |x| Complex64::new(x[0] * x[1], -x[2]));
        let mut buf = Vec::new();
        write_scalar(&mut buf, &f).unwrap();
        let g = read_scalar(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn test_vector_and_spinor_roundtrip() {
        let grid = Grid3::centered(8, 4.0).unwrap();
        let v = VectorField::from_real_fn(grid, |x| [x[0], x[1], (-dot(x, x)).exp()]);
        let mut buf = Vec::new();
        write_vector(&mut buf, &v).unwrap();
        let w = read_vector(&mut buf.as_slice()).unwrap();
        assert_eq!(v, w);

        let s = SpinorState::from_fns(
            grid,
            Rep::Diagonal,
            |x| Complex64::new(x[0], x[1]),
            |x| Complex64::new(-x[2], 1.0),
        );
        let mut buf = Vec::new();
        write_spinor(&mut buf, &s).unwrap();
        let t = read_spinor(&mut buf.as_slice(), Rep::Diagonal).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn test_bad_magic_rejected() {
        let data = b"XXXX____________";
        assert!(read_scalar(&mut data.as_slice()).is_err());
    }
}
