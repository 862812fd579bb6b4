//! Binary parameter checkpoints.
//!
//! Layout (little-endian): magic bytes `NARB`, version `u32`, then one record
//! per parameter: name length `u32`, name bytes, ndim `u32`, dims `u32` each,
//! values `f64` each. Records run until end of file.

use super::{AutodiffError, ParamSet, Tensor};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NARB";
const VERSION: u32 = 1;

pub fn save_checkpoint(params: &ParamSet, path: &Path) -> Result<(), AutodiffError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, tensor) in params.iter() {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(tensor.dims().len() as u32).to_le_bytes())?;
        for &d in tensor.dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet, AutodiffError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AutodiffError::Checkpoint(format!(
            "bad magic bytes {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(AutodiffError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut params = ParamSet::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read(&mut len_buf)? {
            0 => break,
            4 => {}
            _ => return Err(AutodiffError::Checkpoint("truncated record".into())),
        }
        let name_len = u32::from_le_bytes(len_buf) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| AutodiffError::Checkpoint(format!("bad parameter name: {e}")))?;
        let ndim = read_u32(&mut r)? as usize;
        if ndim == 0 || ndim > 2 {
            return Err(AutodiffError::Checkpoint(format!(
                "parameter {name}: unsupported ndim {ndim}"
            )));
        }
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(read_u32(&mut r)? as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        let tensor = match dims.len() {
            1 => Tensor::vector(data),
            _ => Tensor::matrix(dims[0], dims[1], data),
        };
        params.insert(&name, tensor);
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, AutodiffError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut params = ParamSet::new();
        params.insert("w", Tensor::matrix(2, 3, vec![1.0, -2.5, 0.0, 1e-300, 3.25, 9.0]));
        params.insert("b", Tensor::vector(vec![0.5, -0.5]));
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(&params, f.path()).unwrap();
        let loaded = load_checkpoint(f.path()).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn rejects_wrong_magic() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), b"XXXX\x01\x00\x00\x00").unwrap();
        assert!(load_checkpoint(f.path()).is_err());
    }
}
