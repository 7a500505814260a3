//! Iterative radix-2 FFT, enough for framed spectra and overlap-add
//! convolution.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place complex FFT; `re.len()` must be a power of two.
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let (w_im, w_re) = ang.sin_cos();
        for start in (0..n).step_by(len) {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let next = cr * w_re - ci * w_im;
                ci = cr * w_im + ci * w_re;
                cr = next;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        re.iter_mut().for_each(|v| *v *= scale);
        im.iter_mut().for_each(|v| *v *= scale);
    }
}

/// `|X[k]|` for `k = 0..=nfft/2` of `frame` zero-padded to `nfft`.
pub fn magnitude_spectrum(frame: &[f64], nfft: usize) -> Vec<f64> {
    let mut re = vec![0.0; nfft];
    let mut im = vec![0.0; nfft];
    let n = frame.len().min(nfft);
    re[..n].copy_from_slice(&frame[..n]);
    fft_in_place(&mut re, &mut im, false);
    (0..=nfft / 2).map(|k| re[k].hypot(im[k])).collect()
}

/// Linear convolution, output length `a.len() + b.len() - 1`.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 64 {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    // Overlap-add with blocks the size of the short operand.
    let nfft = next_pow2(2 * short.len());
    let block = nfft - short.len() + 1;
    let mut h_re = vec![0.0; nfft];
    let mut h_im = vec![0.0; nfft];
    h_re[..short.len()].copy_from_slice(short);
    fft_in_place(&mut h_re, &mut h_im, false);

    let mut out = vec![0.0; out_len];
    let mut re = vec![0.0; nfft];
    let mut im = vec![0.0; nfft];
    for start in (0..long.len()).step_by(block) {
        let end = (start + block).min(long.len());
        re.iter_mut().for_each(|v| *v = 0.0);
        im.iter_mut().for_each(|v| *v = 0.0);
        re[..end - start].copy_from_slice(&long[start..end]);
        fft_in_place(&mut re, &mut im, false);
        for k in 0..nfft {
            let (xr, xi) = (re[k], im[k]);
            re[k] = xr * h_re[k] - xi * h_im[k];
            im[k] = xr * h_im[k] + xi * h_re[k];
        }
        fft_in_place(&mut re, &mut im, true);
        let valid = (end - start + short.len() - 1).min(out_len - start);
        for k in 0..valid {
            out[start + k] += re[k];
        }
    }
    out
}
