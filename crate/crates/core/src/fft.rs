//! Iterative radix-2 transform with a precomputed twiddle table.
//!
//! Grid sizes are powers of two by construction, so a plain Cooley-Tukey
//! decimation-in-time pass is all that is needed. Twiddles are evaluated
//! directly from sin/cos per table entry, which keeps the roundoff of a
//! 2^18-point transform near machine epsilon.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[derive(Debug)]
pub(crate) struct Radix2Plan {
    n: usize,
    /// twiddles[k] = exp(-2 pi i k / n), k < n/2
    twiddles: Vec<Complex64>,
}

impl Radix2Plan {
    pub(crate) fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| {
                let phase = -2.0 * PI * (k as f64) / (n as f64);
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        Self { n, twiddles }
    }

    /// Unnormalized forward DFT: X_k = sum_j x_j e^{-2 pi i k j / n}.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n);
        let n = self.n;
        bit_reverse_permute(buf);
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for base in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let t = w * buf[base + half + k];
                    let u = buf[base + k];
                    buf[base + k] = u + t;
                    buf[base + half + k] = u - t;
                }
            }
            len <<= 1;
        }
    }

    /// Unnormalized inverse DFT: x_j = sum_k X_k e^{+2 pi i k j / n}.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        for z in buf.iter_mut() {
            *z = z.conj();
        }
    }
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let shift = n.leading_zeros() + 1;
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            buf.swap(i, j);
        }
    }
}
