//! Checkpoint container: magic `PDST`, format version, network spec, then the
//! float64 little-endian parameter payload in canonical layout. Round-trips
//! are bit-exact.

use std::fs;
use std::path::Path;

use super::params::ParameterStore;
use super::spec::{count_parameters, ConvSpec, NetworkSpec};
use crate::{PdError, Result};

const MAGIC: &[u8; 4] = b"PDST";
const VERSION: u32 = 1;

// Decoder hygiene caps: reject absurd headers before allocating.
const MAX_DIM: usize = 1 << 16;
const MAX_LAYERS: usize = 1 << 10;
const MAX_PARAMS: u64 = 1 << 31;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(PdError::Checkpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let v = self.u32()? as usize;
        if v == 0 || v > MAX_DIM {
            return Err(PdError::Checkpoint(format!("{what} out of range: {v}")));
        }
        Ok(v)
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Serializes a spec and its parameters into the container format.
pub fn write_checkpoint_bytes(spec: &NetworkSpec, params: &ParameterStore) -> Result<Vec<u8>> {
    let expect = count_parameters(spec)?;
    if params.len() != expect {
        return Err(PdError::ShapeMismatch(format!(
            "checkpoint: store has {} values, spec needs {expect}",
            params.len()
        )));
    }
    let mut out = Vec::with_capacity(64 + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    push_u32(&mut out, spec.input_channels);
    push_u32(&mut out, spec.input_height);
    push_u32(&mut out, spec.input_width);
    push_u32(&mut out, spec.conv_layers.len());
    for conv in &spec.conv_layers {
        push_u32(&mut out, conv.filters);
        push_u32(&mut out, conv.kernel);
        push_u32(&mut out, conv.stride);
    }
    push_u32(&mut out, spec.dense_layers.len());
    for &units in &spec.dense_layers {
        push_u32(&mut out, units);
    }
    push_u32(&mut out, spec.output_units);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in &params.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a checkpoint from untrusted bytes, validating the header against
/// the spec invariants and the payload length against the derived count.
pub fn read_checkpoint_bytes(bytes: &[u8]) -> Result<(NetworkSpec, ParameterStore)> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(PdError::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(PdError::Checkpoint(format!("unsupported format version {version}")));
    }
    let input_channels = r.dim("input_channels")?;
    let input_height = r.dim("input_height")?;
    let input_width = r.dim("input_width")?;
    let n_conv = r.u32()? as usize;
    if n_conv > MAX_LAYERS {
        return Err(PdError::Checkpoint(format!("too many conv layers: {n_conv}")));
    }
    let mut conv_layers = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv_layers.push(ConvSpec {
            filters: r.dim("filters")?,
            kernel: r.dim("kernel")?,
            stride: r.dim("stride")?,
        });
    }
    let n_dense = r.u32()? as usize;
    if n_dense > MAX_LAYERS {
        return Err(PdError::Checkpoint(format!("too many dense layers: {n_dense}")));
    }
    let mut dense_layers = Vec::with_capacity(n_dense);
    for _ in 0..n_dense {
        dense_layers.push(r.dim("dense units")?);
    }
    let output_units = r.dim("output_units")?;
    let spec = NetworkSpec {
        input_channels,
        input_height,
        input_width,
        conv_layers,
        dense_layers,
        output_units,
    };
    spec.validate().map_err(|e| PdError::Checkpoint(e.to_string()))?;

    let declared = r.u64()?;
    if declared > MAX_PARAMS {
        return Err(PdError::Checkpoint(format!("parameter count too large: {declared}")));
    }
    let expect = count_parameters(&spec).map_err(|e| PdError::Checkpoint(e.to_string()))? as u64;
    if declared != expect {
        return Err(PdError::Checkpoint(format!(
            "payload declares {declared} parameters, spec needs {expect}"
        )));
    }
    let payload = r.take(declared as usize * 8)?;
    if r.pos != bytes.len() {
        return Err(PdError::Checkpoint("trailing bytes after payload".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((spec, ParameterStore { values }))
}

pub fn save_checkpoint(path: &Path, spec: &NetworkSpec, params: &ParameterStore) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, write_checkpoint_bytes(spec, params)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkSpec, ParameterStore)> {
    read_checkpoint_bytes(&fs::read(path)?)
}
