//! Helpers shared by the unit tests: seeded signals and measurement oracles
//! that do not go through the code under test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};

pub fn seeded_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn sine(freq: f64, sample_rate: u32, n: usize, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sample_rate as f64).sin())
        .collect()
}

/// Band-limited-ish sawtooth built from its first harmonics below Nyquist.
pub fn sawtooth(freq: f64, sample_rate: u32, n: usize, amp: f64) -> Vec<f64> {
    let nyq = sample_rate as f64 / 2.0;
    let harmonics = ((nyq / freq) as usize).min(40);
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            amp * (1..=harmonics)
                .map(|h| {
                    let s = if h % 2 == 0 { -1.0 } else { 1.0 };
                    s * (2.0 * std::f64::consts::PI * freq * h as f64 * t).sin() / h as f64
                })
                .sum::<f64>()
                * 0.6
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().take(n as usize).sum::<f64>() / n;
    let mb = b.iter().take(n as usize).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Hann-windowed magnitude spectrum, zero padded 4x.
pub fn magnitude_spectrum(x: &[f64]) -> Vec<f64> {
    let n = (x.len() * 4).next_power_of_two();
    let mut buf: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / x.len() as f64).cos();
            Complex64::new(v * w, 0.0)
        })
        .collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2].iter().map(|c| c.norm()).collect()
}

/// Frequency of the largest spectral peak, in Hz.
pub fn dominant_frequency(x: &[f64], sample_rate: u32) -> f64 {
    let mag = magnitude_spectrum(x);
    let n_fft = mag.len() * 2;
    let (k, _) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let k = if k > 0 && k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        k as f64 + 0.5 * (a - c) / (a - 2.0 * b + c)
    } else {
        k as f64
    };
    k * sample_rate as f64 / n_fft as f64
}
