//! Unscrambled Sobol sequence in Gray-code order.

use super::sobol_table::DIRECTION_TABLE;
use crate::error::{Error, Result};

const BITS: usize = 32;

/// Largest supported dimension.
pub const MAX_DIM: usize = DIRECTION_TABLE.len() + 1;

/// Sobol generator. The all-zero first point is skipped, so the first point
/// returned is `(0.5, …, 0.5)`.
#[derive(Clone, Debug)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut v = [0u32; BITS];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k);
        }
        directions.push(v);
        for &(s, a, m) in DIRECTION_TABLE.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for k in 0..s.min(BITS) {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for l in 1..s {
                    if (a >> (s - 1 - l)) & 1 == 1 {
                        x ^= v[k - l];
                    }
                }
                v[k] = x;
            }
            directions.push(v);
        }
        let mut sobol = Self {
            directions,
            state: vec![0; dim],
            index: 0,
        };
        sobol.advance();
        Ok(sobol)
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    fn advance(&mut self) {
        let c = (!self.index).trailing_zeros() as usize;
        assert!(c < BITS, "Sobol sequence exhausted");
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x ^= v[c];
        }
        self.index += 1;
    }

    /// Next point in `[0, 1)^dim`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let p = self.state.iter().map(|&x| f64::from(x) * scale).collect();
        self.advance();
        p
    }
}
