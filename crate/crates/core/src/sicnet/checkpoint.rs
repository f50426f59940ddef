//! Model checkpoint format.
//!
//! Versioned little-endian binary layout, fixed field order so save/load
//! round-trips are bit-exact:
//!
//! ```text
//! magic      8 bytes  b"SICNETCK"
//! version    u32      currently 1
//! k          u32      number of blocks / user stage
//! m          u32      constellation size
//! input_dim  u32      1 (real) or 2 (complex)
//! per block:
//!   layer_count u32
//!   per layer:
//!     in_dim  u32
//!     out_dim u32
//!     act     u8      0 = identity, 1 = relu, 2 = softmax
//!     weights out_dim * in_dim f64, row-major, little-endian
//!     bias    out_dim f64, little-endian
//! ```
//!
//! The loader validates the header, all dimension chaining, and activation
//! codes before allocating anything big, so feeding it arbitrary bytes
//! yields an error rather than a panic or an absurd allocation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Matrix, Mlp};
use crate::sicnet::SicNetModel;

const MAGIC: &[u8; 8] = b"SICNETCK";
const VERSION: u32 = 1;
/// Caps accepted by the loader; real models are far below these.
const MAX_BLOCKS: u32 = 64;
const MAX_LAYERS: u32 = 64;
const MAX_DIM: u32 = 1 << 16;

impl SicNetModel {
    /// Serializes the model to a writer.
    pub fn save_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.user_index() as u32).to_le_bytes())?;
        w.write_all(&(self.constellation_size() as u32).to_le_bytes())?;
        w.write_all(&(self.input_dim_y() as u32).to_le_bytes())?;
        for block in self.blocks() {
            w.write_all(&(block.layers().len() as u32).to_le_bytes())?;
            for layer in block.layers() {
                w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
                w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
                let act = match layer.activation {
                    Activation::Identity => 0u8,
                    Activation::Relu => 1,
                    Activation::Softmax => 2,
                };
                w.write_all(&[act])?;
                for v in layer.weights.as_slice() {
                    w.write_all(&v.to_le_bytes())?;
                }
                for v in &layer.bias {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Writes a checkpoint file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.save_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Parses a checkpoint from a reader.
    pub fn load_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed("not a model checkpoint (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Malformed(format!("unsupported checkpoint version {version}")));
        }
        let k = read_u32(&mut r)?;
        let m = read_u32(&mut r)?;
        let input_dim = read_u32(&mut r)?;
        if k == 0 || k > MAX_BLOCKS {
            return Err(Error::Malformed(format!("block count {k} out of range")));
        }
        if m < 2 || m > MAX_DIM {
            return Err(Error::Malformed(format!("constellation size {m} out of range")));
        }
        if input_dim != 1 && input_dim != 2 {
            return Err(Error::Malformed(format!("input dimension {input_dim} out of range")));
        }
        let mut blocks = Vec::with_capacity(k as usize);
        for b in 0..k {
            let layer_count = read_u32(&mut r)?;
            if layer_count == 0 || layer_count > MAX_LAYERS {
                return Err(Error::Malformed(format!(
                    "block {b}: layer count {layer_count} out of range"
                )));
            }
            let mut layers = Vec::with_capacity(layer_count as usize);
            for l in 0..layer_count {
                let in_dim = read_u32(&mut r)?;
                let out_dim = read_u32(&mut r)?;
                if in_dim == 0 || in_dim > MAX_DIM || out_dim == 0 || out_dim > MAX_DIM {
                    return Err(Error::Malformed(format!(
                        "block {b} layer {l}: dimensions {in_dim}x{out_dim} out of range"
                    )));
                }
                let mut act_byte = [0u8; 1];
                read_exact(&mut r, &mut act_byte)?;
                let activation = match act_byte[0] {
                    0 => Activation::Identity,
                    1 => Activation::Relu,
                    2 => Activation::Softmax,
                    other => {
                        return Err(Error::Malformed(format!("unknown activation code {other}")))
                    }
                };
                let weights = read_f64s(&mut r, in_dim as usize * out_dim as usize)?;
                let bias = read_f64s(&mut r, out_dim as usize)?;
                let weights = Matrix::from_vec(out_dim as usize, in_dim as usize, weights)?;
                layers.push(
                    DenseLayer::new(weights, bias, activation)
                        .map_err(|e| Error::Malformed(e.to_string()))?,
                );
            }
            blocks.push(Mlp::new(layers).map_err(|e| Error::Malformed(e.to_string()))?);
        }
        // Trailing bytes mean the stream is not a checkpoint we wrote.
        let mut probe = [0u8; 1];
        if r.read(&mut probe).map_err(to_malformed)? != 0 {
            return Err(Error::Malformed("trailing bytes after checkpoint".into()));
        }
        SicNetModel::from_parts(k as usize, m as usize, input_dim as usize, blocks)
            .map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Parses a checkpoint from a byte slice.
    pub fn load_bytes(bytes: &[u8]) -> Result<Self> {
        Self::load_from(bytes)
    }

    /// Reads a checkpoint file.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load_from(BufReader::new(file)).map_err(|e| match e {
            Error::Malformed(msg) => Error::Malformed(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn to_malformed(e: std::io::Error) -> Error {
    Error::Malformed(format!("truncated checkpoint: {e}"))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(to_malformed)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    read_exact(r, &mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sicnet::default_hidden_widths;

    fn sample_model() -> SicNetModel {
        SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 77).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = sample_model();
        let mut bytes = Vec::new();
        model.save_to(&mut bytes).unwrap();
        let loaded = SicNetModel::load_bytes(&bytes).unwrap();
        assert_eq!(model, loaded);
        // And through a file.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        model.save(&path).unwrap();
        assert_eq!(SicNetModel::load(&path).unwrap(), model);
    }

    #[test]
    fn torn_and_garbage_inputs_are_rejected() {
        let model = sample_model();
        let mut bytes = Vec::new();
        model.save_to(&mut bytes).unwrap();

        assert!(SicNetModel::load_bytes(&[]).is_err());
        assert!(SicNetModel::load_bytes(b"SICNETXX").is_err());
        for cut in [4usize, 9, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(SicNetModel::load_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        // Trailing junk.
        let mut extended = bytes.clone();
        extended.push(0);
        assert!(SicNetModel::load_bytes(&extended).is_err());
        // Version bump.
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(SicNetModel::load_bytes(&wrong_version).is_err());
    }

    #[test]
    fn dimension_tampering_is_rejected() {
        let model = sample_model();
        let mut bytes = Vec::new();
        model.save_to(&mut bytes).unwrap();
        // Corrupt the block count.
        let mut tampered = bytes.clone();
        tampered[12] = 0;
        assert!(SicNetModel::load_bytes(&tampered).is_err());
        // Claim an enormous constellation.
        let mut tampered = bytes.clone();
        tampered[16..20].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(SicNetModel::load_bytes(&tampered).is_err());
    }
}
