//! Distributed data files and block slicing.
//!
//! A data file holds one contiguous slice per node, node-major:
//!
//! ```text
//! offset 0   "SDAT"
//!        4   u32 version (1)
//!        8   u32 num_nodes
//!       12   u32 elems_per_node
//!       16   u8  element kind (1 float, 2 double, 3 localint, 4 vector, 5 complex)
//!       17   payload, little-endian
//! ```

use std::path::Path;

use thiserror::Error;

use crate::scalar::{Lane, NpKind};

pub const MAGIC: &[u8; 4] = b"SDAT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 17;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt data file: {0}")]
    Corrupt(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// A decoded data file. Payload is kept as machine words, `kind.words()`
/// per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistFile {
    pub kind: NpKind,
    pub num_nodes: u32,
    pub elems_per_node: u32,
    pub words: Vec<u32>,
}

impl DistFile {
    pub fn new(kind: NpKind, num_nodes: u32, elems_per_node: u32, words: Vec<u32>) -> Result<Self, DistError> {
        let expected = num_nodes as u64 * elems_per_node as u64 * kind.words() as u64;
        if words.len() as u64 != expected {
            return Err(DistError::Shape(format!(
                "{} payload words for {num_nodes} nodes x {elems_per_node} {kind} elements (expected {expected})",
                words.len()
            )));
        }
        Ok(Self {
            kind,
            num_nodes,
            elems_per_node,
            words,
        })
    }

    /// Build from node-major lane values.
    pub fn from_lanes<T: Lane>(kind: NpKind, num_nodes: u32, elems_per_node: u32, values: &[T]) -> Result<Self, DistError> {
        if T::WORDS != kind.words() as usize {
            return Err(DistError::Shape(format!("lane type does not match {kind}")));
        }
        let mut words = vec![0u32; values.len() * T::WORDS];
        for (v, out) in values.iter().zip(words.chunks_exact_mut(T::WORDS)) {
            v.to_words(out);
        }
        Self::new(kind, num_nodes, elems_per_node, words)
    }

    pub fn to_lanes<T: Lane>(&self) -> Result<Vec<T>, DistError> {
        if T::WORDS != self.kind.words() as usize {
            return Err(DistError::Shape(format!("lane type does not match {}", self.kind)));
        }
        Ok(self.words.chunks_exact(T::WORDS).map(T::from_words).collect())
    }

    /// Words of one node's slice.
    pub fn node_words(&self, node: usize) -> &[u32] {
        let n = self.elems_per_node as usize * self.kind.words() as usize;
        &self.words[node * n..(node + 1) * n]
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.words.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.num_nodes.to_le_bytes());
        out.extend_from_slice(&self.elems_per_node.to_le_bytes());
        out.push(self.kind.file_code());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Decode and validate. With `expected` set, a file of any other
    /// element kind is rejected.
    pub fn decode(bytes: &[u8], expected: Option<NpKind>) -> Result<Self, DistError> {
        if bytes.len() < HEADER_LEN {
            return Err(DistError::Corrupt(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(DistError::Corrupt("bad magic".into()));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(DistError::Corrupt(format!("unsupported version {version}")));
        }
        let num_nodes = u32_at(8);
        let elems_per_node = u32_at(12);
        let kind = NpKind::from_file_code(bytes[16])
            .ok_or_else(|| DistError::Corrupt(format!("unknown element kind code {}", bytes[16])))?;
        if let Some(want) = expected {
            if want != kind {
                return Err(DistError::Shape(format!("file holds {kind} elements, expected {want}")));
            }
        }
        let payload = &bytes[HEADER_LEN..];
        let expected_len = num_nodes as u64 * elems_per_node as u64 * kind.words() as u64 * 4;
        if payload.len() as u64 != expected_len {
            return Err(DistError::Corrupt(format!(
                "payload is {} bytes, header implies {expected_len}",
                payload.len()
            )));
        }
        let words = payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            kind,
            num_nodes,
            elems_per_node,
            words,
        })
    }

    pub fn read(path: &Path, expected: Option<NpKind>) -> Result<Self, DistError> {
        Self::decode(&std::fs::read(path)?, expected)
    }

    pub fn write(&self, path: &Path) -> Result<(), DistError> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }
}

/// Copy `count` elements of each node's slice to `addr` in that node's
/// memory.
pub fn distributed_load(np_mem: &mut [Vec<u32>], addr: u32, count: u32, file: &DistFile) -> Result<(), DistError> {
    if file.num_nodes as usize != np_mem.len() {
        return Err(DistError::Shape(format!(
            "file has {} nodes, machine has {}",
            file.num_nodes,
            np_mem.len()
        )));
    }
    if count > file.elems_per_node {
        return Err(DistError::Shape(format!(
            "requested {count} elements per node, file has {}",
            file.elems_per_node
        )));
    }
    let n = count as usize * file.kind.words() as usize;
    let start = addr as usize;
    for (node, mem) in np_mem.iter_mut().enumerate() {
        let dest = mem.get_mut(start..start + n).ok_or_else(|| {
            DistError::Shape(format!("{n} words at address {addr} overflow NP memory"))
        })?;
        dest.copy_from_slice(&file.node_words(node)[..n]);
    }
    Ok(())
}

/// Gather `count` elements at `addr` from every node into a data file.
pub fn distributed_store(np_mem: &[Vec<u32>], addr: u32, count: u32, kind: NpKind) -> Result<DistFile, DistError> {
    let n = count as usize * kind.words() as usize;
    let start = addr as usize;
    let mut words = Vec::with_capacity(n * np_mem.len());
    for mem in np_mem {
        let src = mem.get(start..start + n).ok_or_else(|| {
            DistError::Shape(format!("{n} words at address {addr} overflow NP memory"))
        })?;
        words.extend_from_slice(src);
    }
    DistFile::new(kind, np_mem.len() as u32, count, words)
}

fn block_geometry(topology: &[usize], block: &[usize]) -> Result<(Vec<usize>, Vec<usize>), DistError> {
    if block.is_empty() || topology.len() > block.len() {
        return Err(DistError::Shape(format!(
            "block rank {} must be at least the topology rank {}",
            block.len(),
            topology.len()
        )));
    }
    let mut dims = topology.to_vec();
    dims.resize(block.len(), 1);
    let global = dims.iter().zip(block).map(|(d, b)| d * b).collect();
    Ok((dims, global))
}

fn unravel(mut i: usize, shape: &[usize], out: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        out[a] = i % shape[a];
        i /= shape[a];
    }
}

fn ravel(c: &[usize], shape: &[usize]) -> usize {
    c.iter().zip(shape).fold(0, |acc, (x, s)| acc * s + x)
}

/// Split a row-major global array into node-major blocks. The global
/// shape is `topology[a] * block[a]` on each axis; axes beyond the
/// topology rank are not distributed.
pub fn slice<T: Clone>(flat: &[T], topology: &[usize], block: &[usize]) -> Result<Vec<T>, DistError> {
    let (dims, global) = block_geometry(topology, block)?;
    let total: usize = global.iter().product();
    if flat.len() != total {
        return Err(DistError::Shape(format!("{} values, global shape needs {total}", flat.len())));
    }
    let per: usize = block.iter().product();
    let mut out = Vec::with_capacity(total);
    let (mut nc, mut lc, mut gc) = (vec![0; dims.len()], vec![0; dims.len()], vec![0; dims.len()]);
    for node in 0..dims.iter().product() {
        unravel(node, &dims, &mut nc);
        for l in 0..per {
            unravel(l, block, &mut lc);
            for a in 0..dims.len() {
                gc[a] = nc[a] * block[a] + lc[a];
            }
            out.push(flat[ravel(&gc, &global)].clone());
        }
    }
    Ok(out)
}

/// Inverse of [`slice`].
pub fn unslice<T: Clone>(sliced: &[T], topology: &[usize], block: &[usize]) -> Result<Vec<T>, DistError> {
    let (dims, global) = block_geometry(topology, block)?;
    let total: usize = global.iter().product();
    if sliced.len() != total {
        return Err(DistError::Shape(format!("{} values, global shape needs {total}", sliced.len())));
    }
    let per: usize = block.iter().product();
    let mut out = sliced.to_vec();
    let (mut nc, mut lc, mut gc) = (vec![0; dims.len()], vec![0; dims.len()], vec![0; dims.len()]);
    for (i, v) in sliced.iter().enumerate() {
        unravel(i / per, &dims, &mut nc);
        unravel(i % per, block, &mut lc);
        for a in 0..dims.len() {
            gc[a] = nc[a] * block[a] + lc[a];
        }
        out[ravel(&gc, &global)] = v.clone();
    }
    Ok(out)
}

/// Read a flat little-endian array of `kind` elements without header.
pub fn words_from_raw(bytes: &[u8], kind: NpKind) -> Result<Vec<Vec<u32>>, DistError> {
    let w = kind.words() as usize;
    if !bytes.len().is_multiple_of(4 * w) {
        return Err(DistError::Corrupt(format!(
            "{} bytes is not a whole number of {kind} elements",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4 * w)
        .map(|e| e.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
        .collect())
}

pub fn raw_from_words(elems: &[Vec<u32>]) -> Vec<u8> {
    elems.iter().flatten().flat_map(|w| w.to_le_bytes()).collect()
}
