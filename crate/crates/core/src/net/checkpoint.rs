//! Binary container: magic, format version, length-prefixed JSON header,
//! then the parameters as little-endian f64.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layout, NetConfig, NetError, QNetwork};
use crate::graph::RelationTable;

const MAGIC: &[u8; 8] = b"GSPQNET\0";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    domain: String,
    config: NetConfig,
    relations: RelationTable,
    version: u64,
    num_params: usize,
}

fn bad(msg: impl Into<String>) -> NetError {
    NetError::Checkpoint(msg.into())
}

impl QNetwork {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            domain: self.domain.clone(),
            config: self.cfg.clone(),
            relations: self.relations.clone(),
            version: self.version,
            num_params: self.params.len(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(24 + json.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated file"))?;
        if &magic != MAGIC {
            return Err(bad("not a network checkpoint"));
        }
        let mut u4 = [0u8; 4];
        r.read_exact(&mut u4).map_err(|_| bad("truncated file"))?;
        let fmt = u32::from_le_bytes(u4);
        if fmt != CHECKPOINT_FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {fmt}")));
        }
        let mut u8b = [0u8; 8];
        r.read_exact(&mut u8b).map_err(|_| bad("truncated file"))?;
        let hlen = u64::from_le_bytes(u8b) as usize;
        if r.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&r[..hlen]).map_err(|e| bad(format!("header: {e}")))?;
        r = &r[hlen..];
        header.config.validate()?;
        let layout = Layout::new(&header.relations, &header.config);
        if layout.total != header.num_params || r.len() != 8 * header.num_params {
            return Err(bad("parameter count does not match the architecture"));
        }
        let params = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(QNetwork {
            domain: header.domain,
            cfg: header.config,
            relations: header.relations,
            layout,
            params,
            version: header.version,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
