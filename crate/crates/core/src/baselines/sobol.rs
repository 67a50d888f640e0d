//! Sobol' sequence in up to 10 dimensions, Gray-code order, unscrambled.
//!
//! Direction numbers are the Joe & Kuo `new-joe-kuo-6.21201` set; dimension 1 is the
//! van der Corput sequence.

use crate::error::{config_err, Result};

pub const MAX_SOBOL_DIM: usize = 10;
const BITS: usize = 32;

/// `(degree s, coefficient a, initial m_1..m_s)` for dimensions 2..=10.
const PRIMITIVES: [(u32, &[u32]); MAX_SOBOL_DIM - 1] = [
    (0, &[1]),
    (1, &[1, 3]),
    (1, &[1, 3, 1]),
    (2, &[1, 1, 1]),
    (1, &[1, 1, 3, 3]),
    (4, &[1, 3, 5, 13]),
    (2, &[1, 1, 5, 5, 17]),
    (4, &[1, 1, 5, 5, 5]),
    (7, &[1, 1, 7, 11, 19]),
];

#[derive(Debug, Clone)]
pub struct SobolGenerator {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolGenerator {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIM {
            return Err(config_err(format!("Sobol' sequence supports 1..={MAX_SOBOL_DIM} dimensions, got {dim}")));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (i, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - i);
        }
        directions.push(first);
        for &(a, m) in PRIMITIVES.iter().take(dim - 1) {
            directions.push(direction_numbers(a, m));
        }
        Ok(Self { directions, state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Index of the point the next call to [`next_into`](Self::next_into) returns.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Writes the next point (starting from the all-zero point) into `out`.
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<()> {
        if self.index >= 1 << BITS {
            return Err(config_err("Sobol' sequence exhausted (2^32 points)"));
        }
        if self.index > 0 {
            let c = self.index.trailing_zeros() as usize;
            for (s, dir) in self.state.iter_mut().zip(&self.directions) {
                *s ^= dir[c];
            }
        }
        let scale = 1.0 / (1u64 << BITS) as f64;
        for (o, &s) in out.iter_mut().zip(&self.state) {
            *o = s as f64 * scale;
        }
        self.index += 1;
        Ok(())
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.next_into(&mut out)?;
        Ok(out)
    }

    pub fn skip(&mut self, count: u64) -> Result<()> {
        let mut scratch = vec![0.0; self.dim()];
        for _ in 0..count {
            self.next_into(&mut scratch)?;
        }
        Ok(())
    }
}

fn direction_numbers(a: u32, m: &[u32]) -> [u32; BITS] {
    let s = m.len();
    let mut v = [0u32; BITS];
    for (i, &mi) in m.iter().enumerate() {
        v[i] = mi << (BITS - 1 - i);
    }
    for i in s..BITS {
        let mut x = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[i - k];
            }
        }
        v[i] = x;
    }
    v
}

/// Base-2 radical inverse of `n`.
pub fn radical_inverse(n: u64) -> f64 {
    (n as u32).reverse_bits() as f64 / (1u64 << BITS) as f64
}
