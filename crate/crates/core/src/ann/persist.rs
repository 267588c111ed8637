//! Versioned little-endian index file.
//!
//! ```text
//! magic     8 bytes  "OFANNIDX"
//! version   u32      1
//! dimension u32
//! m, ef_construction, ef_search  u32 each
//! seed      u64
//! graphs    u32      number of partitions, then per partition:
//!   category u8, nodes u32, entry u32 (u32::MAX when empty)
//!   per node: id (u32 length + UTF-8), layers u32, per layer: links u32 + u32 ids
//!   vectors: nodes * dimension f64
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::AtomicU64;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::hnsw::Graph;
use super::{AnnIndex, IndexParams};
use crate::catalog::Category;
use crate::embedding::EMBEDDING_DIM;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"OFANNIDX";
const VERSION: u32 = 1;
const NO_ENTRY: u32 = u32::MAX;

fn bad(msg: impl Into<String>) -> Error {
    Error::IndexFormat(msg.into())
}

fn to_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| bad("value exceeds u32"))
}

impl AnnIndex {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(to_u32(self.dim)?)?;
        w.write_u32::<LittleEndian>(to_u32(self.params.m)?)?;
        w.write_u32::<LittleEndian>(to_u32(self.params.ef_construction)?)?;
        w.write_u32::<LittleEndian>(to_u32(self.params.ef_search)?)?;
        w.write_u64::<LittleEndian>(self.params.seed)?;
        w.write_u32::<LittleEndian>(to_u32(self.graphs.len())?)?;
        for (category, g) in &self.graphs {
            w.write_u8(category.index() as u8)?;
            w.write_u32::<LittleEndian>(to_u32(g.len())?)?;
            w.write_u32::<LittleEndian>(g.entry.unwrap_or(NO_ENTRY))?;
            for (id, layers) in g.ids.iter().zip(&g.links) {
                w.write_u32::<LittleEndian>(to_u32(id.len())?)?;
                w.write_all(id.as_bytes())?;
                w.write_u32::<LittleEndian>(to_u32(layers.len())?)?;
                for links in layers {
                    w.write_u32::<LittleEndian>(to_u32(links.len())?)?;
                    for &n in links {
                        w.write_u32::<LittleEndian>(n)?;
                    }
                }
            }
            for &x in &g.vectors {
                w.write_f64::<LittleEndian>(x)?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<AnnIndex> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dim = r.read_u32::<LittleEndian>()? as usize;
        if dim != EMBEDDING_DIM {
            return Err(bad(format!("dimension {dim}, expected {EMBEDDING_DIM}")));
        }
        let params = IndexParams {
            m: r.read_u32::<LittleEndian>()? as usize,
            ef_construction: r.read_u32::<LittleEndian>()? as usize,
            ef_search: r.read_u32::<LittleEndian>()? as usize,
            seed: r.read_u64::<LittleEndian>()?,
        };
        params.validate().map_err(|e| bad(e.to_string()))?;

        let n_graphs = r.read_u32::<LittleEndian>()?;
        let mut graphs = BTreeMap::new();
        for _ in 0..n_graphs {
            let code = r.read_u8()? as usize;
            let category = *Category::ALL
                .get(code)
                .ok_or_else(|| bad(format!("category code {code}")))?;
            let nodes = r.read_u32::<LittleEndian>()? as usize;
            let entry = r.read_u32::<LittleEndian>()?;
            let mut g = Graph::new(dim);
            for node in 0..nodes {
                let len = r.read_u32::<LittleEndian>()? as usize;
                let mut buf = vec![0u8; len];
                r.read_exact(&mut buf)?;
                let id = String::from_utf8(buf).map_err(|_| bad("id is not UTF-8"))?;
                let n_layers = r.read_u32::<LittleEndian>()? as usize;
                if n_layers == 0 {
                    return Err(bad("node without layers"));
                }
                let mut layers = Vec::with_capacity(n_layers);
                for _ in 0..n_layers {
                    let n_links = r.read_u32::<LittleEndian>()? as usize;
                    let mut links = Vec::with_capacity(n_links);
                    for _ in 0..n_links {
                        let n = r.read_u32::<LittleEndian>()?;
                        if n as usize >= nodes {
                            return Err(bad("link out of range"));
                        }
                        links.push(n);
                    }
                    layers.push(links);
                }
                if g.positions.insert(id.clone(), node as u32).is_some() {
                    return Err(bad(format!("duplicate id {id:?}")));
                }
                g.ids.push(id);
                g.links.push(layers);
            }
            g.vectors.reserve(nodes * dim);
            for _ in 0..nodes * dim {
                g.vectors.push(r.read_f64::<LittleEndian>()?);
            }
            g.entry = match entry {
                NO_ENTRY if nodes == 0 => None,
                e if (e as usize) < nodes => Some(e),
                _ => return Err(bad("entry point out of range")),
            };
            graphs.insert(category, g);
        }
        Ok(AnnIndex {
            params,
            dim,
            graphs,
            searches: AtomicU64::new(0),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<AnnIndex> {
        let bytes = std::fs::read(path)?;
        AnnIndex::read_from(bytes.as_slice())
    }
}
