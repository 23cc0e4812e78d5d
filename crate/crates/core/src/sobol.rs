//! Sobol low-discrepancy points in up to 16 dimensions with optional
//! digital (XOR) shifts for randomized replicates.

use crate::error::{Error, Result};

/// Primitive-polynomial data `(degree, coefficient bits, initial m_k)` for
/// dimensions 2..=16; dimension 1 is the van der Corput sequence.
const DIRECTIONS: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = DIRECTIONS.len() + 1;
const BITS: usize = 32;

#[derive(Debug, Clone)]
pub struct Sobol {
    dim: usize,
    v: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::SpecInvalid(format!("Sobol dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut v = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1u32 << (BITS - 1 - k);
        }
        v.push(first);
        for &(s, a, m) in DIRECTIONS.iter().take(dim - 1) {
            let s = s as usize;
            let mut dirs = [0u32; BITS];
            for k in 0..BITS {
                if k < s {
                    dirs[k] = m[k] << (BITS - 1 - k);
                } else {
                    let mut x = dirs[k - s] ^ (dirs[k - s] >> s);
                    for j in 1..s {
                        if (a >> (s - 1 - j)) & 1 == 1 {
                            x ^= dirs[k - j];
                        }
                    }
                    dirs[k] = x;
                }
            }
            v.push(dirs);
        }
        Ok(Self { dim, v })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// First `count` points (Gray-code order, starting at the origin), each
    /// XOR-ed with `shift[d]`, mapped to the open cube by taking cell centres.
    pub fn points(&self, count: usize, shift: &[u32]) -> Vec<f64> {
        let mut out = Vec::with_capacity(count * self.dim);
        let mut x = vec![0u32; self.dim];
        for i in 0..count {
            if i > 0 {
                let c = (i - 1).trailing_ones() as usize;
                for (xd, vd) in x.iter_mut().zip(&self.v) {
                    *xd ^= vd[c];
                }
            }
            for d in 0..self.dim {
                let bits = x[d] ^ shift.get(d).copied().unwrap_or(0);
                out.push((bits as f64 + 0.5) / 4_294_967_296.0);
            }
        }
        out
    }
}
