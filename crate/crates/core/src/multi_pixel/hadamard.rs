use crate::error::{Error, Result};

/// Largest supported Sylvester exponent.
pub const MAX_EXPONENT: u32 = 14;

/// Sylvester Hadamard matrix of order `2^m`; entry `(p, i)` is
/// `(-1)^popcount(p & i)`, so row and column 0 are all `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    exponent: u32,
    entries: Vec<i8>,
}

pub fn sylvester_hadamard(m: u32) -> Result<HadamardMatrix> {
    if m > MAX_EXPONENT {
        return Err(Error::Resource(format!(
            "Hadamard order 2^{m} exceeds the limit 2^{MAX_EXPONENT}"
        )));
    }
    // H_{2n} = [[H, H], [H, -H]]
    let mut entries = vec![1i8];
    let mut n = 1usize;
    for _ in 0..m {
        let mut next = vec![0i8; 4 * n * n];
        for r in 0..n {
            for c in 0..n {
                let v = entries[r * n + c];
                next[r * 2 * n + c] = v;
                next[r * 2 * n + c + n] = v;
                next[(r + n) * 2 * n + c] = v;
                next[(r + n) * 2 * n + c + n] = -v;
            }
        }
        entries = next;
        n *= 2;
    }
    Ok(HadamardMatrix { exponent: m, entries })
}

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        1 << self.exponent
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order() + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        let n = self.order();
        &self.entries[row * n..(row + 1) * n]
    }
}

/// Sylvester entry without materialising the matrix.
pub fn sylvester_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place unnormalised Walsh-Hadamard transform, `v <- H v`.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}
