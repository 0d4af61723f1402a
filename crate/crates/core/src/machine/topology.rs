use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("topology needs at least one axis")]
    Empty,
    #[error("topology axis {0} has size zero")]
    ZeroAxis(usize),
    #[error("bad topology `{0}` (expected sizes like 2x2 or 4)")]
    Syntax(String),
    #[error("topology has too many nodes")]
    TooLarge,
}

/// N-dimensional torus of nodes. Ids are row-major in the coordinates,
/// last axis fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Topology {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Topology {
    pub fn new(dims: Vec<usize>) -> Result<Self, TopologyError> {
        if dims.is_empty() {
            return Err(TopologyError::Empty);
        }
        if let Some(a) = dims.iter().position(|&d| d == 0) {
            return Err(TopologyError::ZeroAxis(a));
        }
        let mut strides = vec![1usize; dims.len()];
        for a in (0..dims.len() - 1).rev() {
            strides[a] = strides[a + 1].checked_mul(dims[a + 1]).ok_or(TopologyError::TooLarge)?;
        }
        strides[0].checked_mul(dims[0]).ok_or(TopologyError::TooLarge)?;
        Ok(Self { dims, strides })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn nodes(&self) -> usize {
        self.strides[0] * self.dims[0]
    }

    pub fn coords(&self, id: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| (id / s) % d)
            .collect()
    }

    pub fn id(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Node one step along `axis` in direction `sign`, wrapping.
    pub fn neighbor(&self, id: usize, axis: usize, sign: i32) -> usize {
        let d = self.dims[axis];
        let s = self.strides[axis];
        let c = (id / s) % d;
        let nc = if sign < 0 { (c + d - 1) % d } else { (c + 1) % d };
        id - c * s + nc * s
    }
}

impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims = s
            .split(['x', 'X'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TopologyError::Syntax(s.to_string()))?;
        Self::new(dims)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}
