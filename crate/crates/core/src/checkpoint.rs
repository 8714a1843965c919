//! Trained-model files.
//!
//! ```text
//! b"TAGACKPT"
//! u32 LE   format version (1)
//! u32 LE   header length
//! bytes    JSON header
//! f32 LE   every parameter, layer by layer (weight, neighbor weight, bias, ε)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::{TrainConfig, ViewConfig};
use crate::embed::ProviderDescriptor;
use crate::error::CheckpointError;
use crate::gnn::{init_params, Activation, Architecture, GnnParameters};

const MAGIC: &[u8; 8] = b"TAGACKPT";
const VERSION: u32 = 1;

/// Parameters are stored as `f32`; they are rounded on construction so a
/// checkpoint in memory and one read back from disk are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: GnnParameters,
    pub provider: ProviderDescriptor,
    pub steps: usize,
    pub view: ViewConfig,
    pub train: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    activation: Activation,
    num_layers: usize,
    dim: usize,
    seed: u64,
    provider: ProviderDescriptor,
    steps: usize,
    view: ViewConfig,
    train: TrainConfig,
    payload_len: usize,
}

impl Checkpoint {
    pub fn new(
        mut params: GnnParameters,
        provider: ProviderDescriptor,
        steps: usize,
        view: ViewConfig,
        train: TrainConfig,
    ) -> Self {
        params.for_each_mut(|x| *x = f64::from(*x as f32));
        Self { params, provider, steps, view, train }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CheckpointError> {
        let flat = self.params.flatten();
        let header = Header {
            architecture: self.params.architecture,
            activation: self.params.activation,
            num_layers: self.params.num_layers(),
            dim: self.params.dim,
            seed: self.params.seed,
            provider: self.provider.clone(),
            steps: self.steps,
            view: self.view,
            train: self.train,
            payload_len: flat.len(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 4 * flat.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for x in flat {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let word = |at: usize| -> Result<u32, CheckpointError> {
            let b = bytes.get(at..at + 4).ok_or(CheckpointError::Truncated)?;
            Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
        };
        let version = word(8)?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let header_len = word(12)? as usize;
        let json = bytes.get(16..16 + header_len).ok_or(CheckpointError::Truncated)?;
        let header: Header = serde_json::from_slice(json)?;
        if header.num_layers == 0 || header.dim == 0 {
            return Err(CheckpointError::Payload("model needs at least one layer and one feature".into()));
        }
        let payload = &bytes[16 + header_len..];
        let mut params = init_params(header.architecture, header.num_layers, header.dim, header.seed);
        params.activation = header.activation;
        if header.payload_len != params.num_scalars() {
            return Err(CheckpointError::Payload(format!(
                "header declares {} values, architecture needs {}",
                header.payload_len,
                params.num_scalars()
            )));
        }
        if payload.len() < 4 * header.payload_len {
            return Err(CheckpointError::Truncated);
        }
        if payload.len() > 4 * header.payload_len {
            return Err(CheckpointError::Payload("trailing bytes after parameters".into()));
        }
        let flat: Vec<f64> =
            payload.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))).collect();
        params.assign_flat(&flat);
        if !params.is_finite() {
            return Err(CheckpointError::Payload("non-finite parameter".into()));
        }
        Ok(Self { params, provider: header.provider, steps: header.steps, view: header.view, train: header.train })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
