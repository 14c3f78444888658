//! Binary parameter snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "EMPWSNAP"
//! version  u32      currently 1
//! meta     u32 length + UTF-8 bytes (free-form, JSON by convention)
//! count    u32      number of tensors
//! per tensor:
//!   name   u32 length + UTF-8 bytes
//!   ndim   u32
//!   dims   ndim x u64
//!   values product(dims) x f64 (IEEE 754 binary64)
//! ```

use std::io::{Read, Write};

use super::Tensor;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"EMPWSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    pub meta: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Snapshot {
    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Snapshot(format!("missing tensor {name:?}")))
    }
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Snapshot(format!("{v} overflows u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    put_str(&mut w, &snap.meta)?;
    put_u32(&mut w, snap.tensors.len())?;
    for (name, t) in &snap.tensors {
        put_str(&mut w, name)?;
        put_u32(&mut w, t.shape().len())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn get<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
    Ok(buf)
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    Ok(u32::from_le_bytes(get(r)?) as usize)
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let len = get_u32(r)?;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Snapshot("truncated string".into()));
    }
    String::from_utf8(buf).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    if &get::<8, _>(&mut r)? != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(get(&mut r)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let meta = get_str(&mut r)?;
    let count = get_u32(&mut r)?;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name = get_str(&mut r)?;
        let ndim = get_u32(&mut r)?;
        let shape = (0..ndim)
            .map(|_| Ok(u64::from_le_bytes(get(&mut r)?) as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let values = (0..n)
            .map(|_| Ok(f64::from_le_bytes(get(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        tensors.push((name, Tensor::new(shape, values)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    Ok(Snapshot { meta, tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        Snapshot {
            meta: "{\"k\":3}".into(),
            tensors: vec![
                ("a".into(), Tensor::vector(vec![1.5, -0.0, 1e-300]).unwrap()),
                ("b".into(), Tensor::new(vec![2, 1], vec![3.0, 4.0]).unwrap()),
            ],
        }
    }

    #[test]
    fn roundtrip_bit_exact() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &sample()).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.get("a").unwrap().values()[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn layout_is_documented_one() {
        let snap = Snapshot {
            meta: String::new(),
            tensors: vec![("w".into(), Tensor::vector(vec![1.0]).unwrap())],
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        let mut expected = b"EMPWSNAP".to_vec();
        expected.extend(1u32.to_le_bytes());
        expected.extend(0u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.push(b'w');
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u64.to_le_bytes());
        expected.extend(1.0f64.to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &sample()).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot(bad.as_slice()).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot(long.as_slice()).is_err());
        assert!(sample().get("zzz").is_err());
    }
}
