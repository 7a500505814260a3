//! Native CPU metrics: WADA-SNR, YIN F0 tracking, MFCCs and mel-cepstral
//! distortion. All functions are pure over `f64` sample buffers.

mod fft;
pub mod frame;
pub mod mcd;
pub mod mfcc;
pub mod wada;
pub mod yin;

pub use fft::{fft_convolve, magnitude_spectrum, next_pow2};
pub use frame::{FramePlan, Window};
pub use mcd::{mcd, Alignment, McdOutcome};
pub use mfcc::{mfcc, CepstraSequence, MelCepstrum, NUM_CEPSTRA};
pub use wada::wada_snr;
pub use yin::{f0_std, yin_f0, F0Track, YinSettings};
