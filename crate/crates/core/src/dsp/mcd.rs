//! Mel-cepstral distortion between paired cepstral sequences.
//!
//! Per frame `MCD = (10 / ln 10) * sqrt(2 * sum_d (c_d - c'_d)^2)` over the
//! 13 coefficients (c0 excluded), averaged over frames.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_10;

#[allow(unused_imports)]
use num_traits::Float;

use super::mfcc::{CepstraSequence, NUM_CEPSTRA};
use crate::stats::KahanSum;
use crate::{Error, Result};

/// Frame-count mismatch tolerated (by trimming) when `align` is `None`.
pub const MAX_TRIM_FRAMES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    /// Frame `t` against frame `t`; the longer sequence is trimmed.
    #[default]
    None,
    /// Frames paired along a dynamic-time-warping path.
    Dtw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McdOutcome {
    pub mean_db: f64,
    pub frames: usize,
    /// Frames dropped from the longer sequence (align = none only).
    pub trimmed: usize,
}

const MCD_SCALE: f64 = 10.0 / LN_10;

fn sq_dist(a: &[f64; NUM_CEPSTRA], b: &[f64; NUM_CEPSTRA]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// MCD of one frame pair, dB.
pub fn frame_mcd(a: &[f64; NUM_CEPSTRA], b: &[f64; NUM_CEPSTRA]) -> f64 {
    MCD_SCALE * (2.0 * sq_dist(a, b)).sqrt()
}

pub fn mcd(
    reference: &CepstraSequence,
    processed: &CepstraSequence,
    align: Alignment,
) -> Result<McdOutcome> {
    if reference.plan != processed.plan || reference.sample_rate != processed.sample_rate {
        return Err(Error::IncompatibleCepstra(
            "frame plans or sample rates differ".into(),
        ));
    }
    if reference.is_empty() || processed.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    match align {
        Alignment::None => {
            let n = reference.len().min(processed.len());
            let trimmed = reference.len().max(processed.len()) - n;
            if trimmed > MAX_TRIM_FRAMES {
                return Err(Error::IncompatibleCepstra(alloc::format!(
                    "frame counts differ by {trimmed} (> {MAX_TRIM_FRAMES}); use DTW alignment"
                )));
            }
            let mut acc = KahanSum::new();
            acc.extend(
                reference.coeffs[..n]
                    .iter()
                    .zip(&processed.coeffs[..n])
                    .map(|(a, b)| frame_mcd(a, b)),
            );
            Ok(McdOutcome {
                mean_db: acc.total() / n as f64,
                frames: n,
                trimmed,
            })
        }
        Alignment::Dtw => {
            let path = dtw_path(&reference.coeffs, &processed.coeffs);
            let mut acc = KahanSum::new();
            acc.extend(
                path.iter()
                    .map(|&(i, j)| frame_mcd(&reference.coeffs[i], &processed.coeffs[j])),
            );
            Ok(McdOutcome {
                mean_db: acc.total() / path.len() as f64,
                frames: path.len(),
                trimmed: 0,
            })
        }
    }
}

/// Minimum-cost monotone path with steps (1,0), (0,1), (1,1) under Euclidean
/// cepstral distance. Ties prefer the diagonal, then advancing `a`.
fn dtw_path(a: &[[f64; NUM_CEPSTRA]], b: &[[f64; NUM_CEPSTRA]]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut cost = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = sq_dist(&a[i], &b[j]).sqrt();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    cost[at(i - 1, j - 1)]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    cost[at(i - 1, j)]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    cost[at(i, j - 1)]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            cost[at(i, j)] = best + d;
        }
    }
    let (mut i, mut j) = (n - 1, m - 1);
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = cost[at(i - 1, j - 1)];
            let up = cost[at(i - 1, j)];
            let left = cost[at(i, j - 1)];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        path.push((i, j));
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::FramePlan;

    fn seq(rows: Vec<[f64; NUM_CEPSTRA]>) -> CepstraSequence {
        CepstraSequence {
            coeffs: rows,
            plan: FramePlan::default(),
            sample_rate: 16_000,
        }
    }

    fn ramp(n: usize) -> Vec<[f64; NUM_CEPSTRA]> {
        (0..n)
            .map(|t| {
                let mut r = [0.0; NUM_CEPSTRA];
                for (d, v) in r.iter_mut().enumerate() {
                    *v = ((t * 7 + d * 3) % 11) as f64 / 5.0 - 1.0;
                }
                r
            })
            .collect()
    }

    #[test]
    fn identical_is_zero() {
        let a = seq(ramp(20));
        assert_eq!(mcd(&a, &a, Alignment::None).unwrap().mean_db, 0.0);
        assert_eq!(mcd(&a, &a, Alignment::Dtw).unwrap().mean_db, 0.0);
    }

    #[test]
    fn single_dimension_offset_closed_form() {
        let a = seq(ramp(10));
        let mut rows = ramp(10);
        rows.iter_mut().for_each(|r| r[4] += 0.5);
        let b = seq(rows);
        let expected = 10.0 / LN_10 * 2f64.sqrt() * 0.5;
        let got = mcd(&a, &b, Alignment::None).unwrap().mean_db;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn symmetric_without_alignment() {
        let a = seq(ramp(12));
        let b = seq(ramp(13)[1..].to_vec());
        let ab = mcd(&a, &b, Alignment::None).unwrap();
        let ba = mcd(&b, &a, Alignment::None).unwrap();
        assert_eq!(ab.mean_db, ba.mean_db);
    }

    #[test]
    fn trims_up_to_two_frames() {
        let a = seq(ramp(12));
        let b = seq(ramp(10));
        let out = mcd(&a, &b, Alignment::None).unwrap();
        assert_eq!((out.frames, out.trimmed), (10, 2));
        assert_eq!(out.mean_db, 0.0);
        assert!(mcd(&a, &seq(ramp(9)), Alignment::None).is_err());
    }

    #[test]
    fn dtw_absorbs_a_time_shift() {
        let base = ramp(30);
        let mut stretched = base.clone();
        stretched.insert(10, base[10]);
        stretched.insert(20, base[19]);
        let out = mcd(&seq(base), &seq(stretched), Alignment::Dtw).unwrap();
        assert_eq!(out.mean_db, 0.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(
            mcd(&seq(vec![]), &seq(ramp(3)), Alignment::None),
            Err(Error::EmptyOverlap)
        ));
        let mut other = seq(ramp(3));
        other.plan = FramePlan::new(20.0, 10.0, crate::dsp::Window::Hann);
        assert!(mcd(&seq(ramp(3)), &other, Alignment::None).is_err());
    }
}
