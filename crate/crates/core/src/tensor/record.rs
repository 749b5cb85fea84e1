//! Binary tensor record: `rank: u64`, `rank` dims as `u64`, then the values as
//! `f64` in storage order. Everything little-endian.

use super::Tensor;
use crate::error::{Error, Result};
use std::io::{Read, Write};

const MAX_RANK: u64 = 64;

pub fn write_record<W: Write>(w: &mut W, t: &Tensor) -> Result<()> {
    w.write_all(&(t.rank() as u64).to_le_bytes())?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_record<R: Read>(r: &mut R) -> Result<Tensor> {
    let rank = read_u64(r)?;
    if rank > MAX_RANK {
        return Err(Error::Checkpoint(format!("implausible tensor rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank as usize);
    let mut len: u64 = 1;
    for _ in 0..rank {
        let d = read_u64(r)?;
        len = len
            .checked_mul(d)
            .filter(|&l| l < (1 << 34))
            .ok_or_else(|| Error::Checkpoint("tensor record too large".into()))?;
        dims.push(d as usize);
    }
    let mut data = Vec::with_capacity(len as usize);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Tensor::from_vec(&dims, data).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_little_endian_header_then_values() {
        let t = Tensor::from_vec(&[2, 1], vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_record(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 8 * (1 + 2 + 2));
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1.5f64.to_le_bytes());
        let back = read_record(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_record_fails() {
        let t = Tensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_record(&mut buf, &t).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_record(&mut buf.as_slice()).is_err());
    }
}
