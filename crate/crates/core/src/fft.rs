//! Discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other length
//! goes through Bluestein's chirp-z algorithm on a padded power-of-two
//! transform. [`RealDftPlan`] computes spectra of real sequences through a
//! half-length complex transform.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

/// Radix-2 plan for one power-of-two length.
#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        Self { len, twiddles }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Unnormalized inverse.
    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        assert_eq!(data.len(), n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// Forward complex DFT plan, `X_k = Σ_j x_j e^{-2πi jk/n}`.
#[derive(Debug, Clone)]
pub struct DftPlan {
    len: usize,
    kind: PlanKind,
}

#[derive(Debug, Clone)]
enum PlanKind {
    Radix2(Radix2),
    Bluestein {
        inner: Radix2,
        /// `e^{-iπk²/n}` for k in 0..n.
        chirp: Vec<Complex64>,
        /// Transform of the conjugate chirp laid out for circular convolution.
        kernel: Vec<Complex64>,
    },
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT of an empty sequence");
        if len.is_power_of_two() {
            return Self {
                len,
                kind: PlanKind::Radix2(Radix2::new(len)),
            };
        }
        let padded = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(padded);
        let modulus = 2 * len as u128;
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                // k² mod 2n keeps the phase argument small and exact.
                let r = (k as u128 * k as u128) % modulus;
                let theta = -PI * r as f64 / len as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            let c = chirp[k].conj();
            kernel[k] = c;
            kernel[padded - k] = c;
        }
        inner.forward(&mut kernel);
        Self {
            len,
            kind: PlanKind::Bluestein {
                inner,
                chirp,
                kernel,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Transforms `data` in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            PlanKind::Radix2(r) => r.forward(data),
            PlanKind::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let padded = kernel.len();
                let mut work = vec![Complex64::new(0.0, 0.0); padded];
                for (w, (x, c)) in work.iter_mut().zip(data.iter().zip(chirp)) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                let scale = 1.0 / padded as f64;
                for (x, (w, c)) in data.iter_mut().zip(work.iter().zip(chirp)) {
                    *x = w * c * scale;
                }
            }
        }
    }
}

/// Spectrum of a real sequence.
#[derive(Debug, Clone)]
pub struct RealDftPlan {
    len: usize,
    half: Option<DftPlan>,
    full: Option<DftPlan>,
}

impl RealDftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT of an empty sequence");
        if len % 2 == 0 {
            Self {
                len,
                half: Some(DftPlan::new(len / 2)),
                full: None,
            }
        } else {
            Self {
                len,
                half: None,
                full: Some(DftPlan::new(len)),
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns `X_k` for `k = 0 .. len/2` (exclusive), the non-redundant half.
    pub fn spectrum_half(&self, input: &[f64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length does not match plan");
        let n = self.len;
        let out_len = n / 2;
        if let Some(full) = &self.full {
            let mut data: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            full.forward(&mut data);
            data.truncate(out_len);
            return data;
        }
        let plan = self.half.as_ref().expect("even plan");
        let h = n / 2;
        let mut z: Vec<Complex64> = input
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        plan.forward(&mut z);
        let mut out = Vec::with_capacity(out_len);
        for k in 0..out_len {
            let zk = z[k];
            let zc = z[(h - k) % h].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            let theta = -2.0 * PI * k as f64 / n as f64;
            let w = Complex64::new(libm::cos(theta), libm::sin(theta));
            out.push(even + w * odd);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let theta = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        x * Complex64::new(libm::cos(theta), libm::sin(theta))
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                Complex64::new(libm::sin(0.37 * t) + 0.1 * t % 3.0, libm::cos(1.3 * t * t % 7.0))
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_assorted_lengths() {
        for n in [1usize, 2, 3, 5, 8, 12, 17, 64, 100, 125, 250] {
            let x = signal(n);
            let expect = naive(&x);
            let mut got = x.clone();
            DftPlan::new(n).forward(&mut got);
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-9 * (n as f64), "n={n}");
            }
        }
    }

    #[test]
    fn real_spectrum_matches_complex() {
        for n in [2usize, 7, 10, 64, 99, 1000] {
            let x: Vec<f64> = signal(n).iter().map(|c| c.re).collect();
            let cx: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let expect = naive(&cx);
            let got = RealDftPlan::new(n).spectrum_half(&x);
            assert_eq!(got.len(), n / 2);
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-9 * (n as f64), "n={n}");
            }
        }
    }
}
