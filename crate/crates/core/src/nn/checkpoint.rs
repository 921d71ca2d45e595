//! Binary parameter blocks: a little-endian `u64` dim count, the `u64` layer
//! dims, then every parameter as a little-endian `f64`.

use super::{DenseNet, Head};
use crate::{Error, Result};

pub fn encode(net: &DenseNet, out: &mut Vec<u8>) {
    out.extend_from_slice(&(net.dims().len() as u64).to_le_bytes());
    for &d in net.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Option<&'a [u8]> {
    if bytes.len() < n {
        return None;
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Some(head)
}

fn take_u64(bytes: &mut &[u8]) -> Option<u64> {
    take(bytes, 8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
}

/// Decodes one parameter block from the front of `bytes`, advancing it.
/// Fails when the stored dims differ from `expected_dims`.
pub fn decode(bytes: &mut &[u8], expected_dims: &[usize], head: Head) -> std::result::Result<DenseNet, String> {
    let n_dims = take_u64(bytes).ok_or("truncated header")? as usize;
    if n_dims > 64 {
        return Err(format!("implausible dim count {n_dims}"));
    }
    let dims = (0..n_dims)
        .map(|_| take_u64(bytes).map(|d| d as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or("truncated dims")?;
    if dims != expected_dims {
        return Err(format!(
            "architecture mismatch: stored {dims:?}, expected {expected_dims:?}"
        ));
    }
    let count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let raw = take(bytes, count * 8).ok_or("truncated parameters")?;
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseNet::from_params(&dims, head, params).map_err(|e| e.to_string())
}

/// Writes `nets` back to back into one file.
pub fn save(path: &std::path::Path, nets: &[&DenseNet]) -> Result<()> {
    let mut buf = Vec::new();
    for net in nets {
        encode(net, &mut buf);
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads nets written by [`save`], one per `(dims, head)` entry.
pub fn load(path: &std::path::Path, specs: &[(&[usize], Head)]) -> Result<Vec<DenseNet>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = bytes.as_slice();
    let fail = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let nets = specs
        .iter()
        .map(|(dims, head)| decode(&mut cursor, dims, *head).map_err(fail))
        .collect::<Result<Vec<_>>>()?;
    if !cursor.is_empty() {
        return Err(fail(format!("{} trailing bytes", cursor.len())));
    }
    Ok(nets)
}
