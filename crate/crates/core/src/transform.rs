//! Floating-point FFT convolution used by the table weights, the fft
//! counting engine and the block-count diagonals.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest deviation from the nearest integer tolerated when rounding an
/// integer-valued convolution.
pub const EXACTNESS_TOLERANCE: f64 = 0.25;

fn square_in_place(buf: &mut [Complex<f64>]) {
    let len = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(buf);
    for z in buf.iter_mut() {
        *z = *z * *z;
    }
    planner.plan_fft_inverse(len).process(buf);
    let scale = 1.0 / len as f64;
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

fn padded_len(input_len: usize, out_len: usize) -> usize {
    // Linear (not cyclic) convolution up to index out_len - 1.
    (input_len + out_len).next_power_of_two().max(2)
}

/// `out[n] = sum_{k<=n} x[k] x[n-k]` for `n < out_len`, with `x` read as zero
/// past its end.
pub fn self_convolve_real(x: &[f64], out_len: usize) -> Vec<f64> {
    let used = x.len().min(out_len);
    let len = padded_len(used, out_len);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (slot, &v) in buf.iter_mut().zip(&x[..used]) {
        slot.re = v;
    }
    square_in_place(&mut buf);
    buf.truncate(out_len);
    buf.into_iter().map(|z| z.re).collect()
}

/// Integer self-convolution of non-negative counts through the float
/// transform, rounding each coefficient. Fails if any coefficient lands
/// `EXACTNESS_TOLERANCE` or farther from an integer.
pub fn self_convolve_counts<I>(counts: I, input_len: usize, out_len: usize) -> Result<Vec<u64>>
where
    I: IntoIterator<Item = u64>,
{
    let used = input_len.min(out_len);
    let len = padded_len(used, out_len);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (slot, v) in buf.iter_mut().zip(counts.into_iter().take(used)) {
        slot.re = v as f64;
    }
    square_in_place(&mut buf);
    buf.truncate(out_len);
    let mut out = Vec::with_capacity(out_len);
    for (index, z) in buf.iter().enumerate() {
        let rounded = z.re.round();
        let deviation = (z.re - rounded).abs().max(z.im.abs());
        if deviation >= EXACTNESS_TOLERANCE || rounded < 0.0 {
            return Err(Error::ExactnessGuard { index, deviation });
        }
        out.push(rounded as u64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64], out_len: usize) -> Vec<f64> {
        (0..out_len)
            .map(|n| {
                (0..=n)
                    .filter(|&k| k < x.len() && n - k < x.len())
                    .map(|k| x[k] * x[n - k])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn real_convolution_matches_direct_sum() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        for out_len in [1, 10, 37, 73, 80] {
            let fast = self_convolve_real(&x, out_len);
            let slow = direct(&x, out_len);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn count_convolution_is_exact() {
        let counts: Vec<u64> = (0..50).map(|i| (i % 4) as u64).collect();
        let got = self_convolve_counts(counts.iter().copied(), counts.len(), 99).unwrap();
        let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let want = direct(&as_f, 99);
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(*g as f64, *w);
        }
    }
}
