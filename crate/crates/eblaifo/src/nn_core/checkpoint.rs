//! Flat binary parameter checkpoints.
//!
//! Layout: magic "NNC1", sha-256 digest of the architecture description
//! (input shape + layer specs), parameter count as little-endian u64, then
//! each parameter as a little-endian f64. Loading verifies the digest so a
//! checkpoint can only be restored into the architecture that produced it.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::network::Network;
use super::tensor::Scalar;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NNC1";

/// Architecture digest; identical for identically shaped networks regardless
/// of float type or parameter values.
pub fn spec_digest<T: Scalar>(net: &Network<T>) -> [u8; 32] {
    let desc = format!("{:?}|{:?}", net.input_shape, net.specs());
    let mut hasher = Sha256::new();
    hasher.update(desc.as_bytes());
    hasher.finalize().into()
}

pub fn save_params<T: Scalar>(net: &Network<T>, path: &Path) -> Result<()> {
    let params = net.params_flat();
    let mut out = Vec::with_capacity(4 + 32 + 8 + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&spec_digest(net));
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_f64().unwrap().to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::file(path, e.to_string()))
}

pub fn load_params<T: Scalar>(net: &mut Network<T>, path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e.to_string()))?;
    if bytes.len() < 44 || &bytes[0..4] != MAGIC {
        return Err(Error::file(path, "not a parameter checkpoint"));
    }
    if bytes[4..36] != spec_digest(net) {
        return Err(Error::file(
            path,
            format!("architecture digest mismatch for network {:?}", net.name),
        ));
    }
    let count = u64::from_le_bytes(bytes[36..44].try_into().unwrap()) as usize;
    if count != net.num_params() || bytes.len() != 44 + count * 8 {
        return Err(Error::file(path, "parameter count mismatch"));
    }
    let flat: Vec<T> = bytes[44..]
        .chunks_exact(8)
        .map(|c| T::from_f64(f64::from_le_bytes(c.try_into().unwrap())).unwrap())
        .collect();
    net.set_params_flat(&flat)
}
