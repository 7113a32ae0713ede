//! Discrete Fourier transforms.
//!
//! Power-of-two lengths use an iterative radix-2 kernel with per-stage twiddle
//! tables; any other length goes through Bluestein's chirp-z algorithm on top of it.
//! [`RealFft`] packs a real signal of even length into a half-length complex transform.
//!
//! Conventions: `forward` computes `X_k = Σ_j x_j e^{-2πi jk/n}` and `inverse` is the
//! normalized inverse, so `inverse(forward(x)) == x`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

enum Kernel {
    Trivial,
    Radix2 {
        log2: u32,
        // twiddles for the stage of length `len` live at [len/2 - 1, len - 1)
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        m: usize,
        chirp: Vec<Complex64>,
        kernel_hat: Vec<Complex64>,
        inner: Box<FftPlan>,
    },
}

/// A reusable complex FFT plan of fixed length.
pub struct FftPlan {
    n: usize,
    kernel: Kernel,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let kernel = if n <= 1 {
            Kernel::Trivial
        } else if n.is_power_of_two() {
            let mut twiddles = Vec::with_capacity(n);
            let mut len = 2;
            while len <= n {
                for j in 0..len / 2 {
                    let angle = -2.0 * PI * j as f64 / len as f64;
                    twiddles.push(Complex64::new(libm::cos(angle), libm::sin(angle)));
                }
                len <<= 1;
            }
            Kernel::Radix2 {
                log2: n.trailing_zeros(),
                twiddles,
            }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let two_n = 2 * n as u64;
            let chirp: Vec<Complex64> = (0..n)
                .map(|j| {
                    let jj = (j as u64 * j as u64) % two_n;
                    let angle = -PI * jj as f64 / n as f64;
                    Complex64::new(libm::cos(angle), libm::sin(angle))
                })
                .collect();
            let inner = Box::new(FftPlan::new(m));
            let mut kernel_hat = vec![Complex64::new(0.0, 0.0); m];
            kernel_hat[0] = chirp[0].conj();
            for j in 1..n {
                kernel_hat[j] = chirp[j].conj();
                kernel_hat[m - j] = chirp[j].conj();
            }
            inner.forward(&mut kernel_hat);
            Kernel::Bluestein {
                m,
                chirp,
                kernel_hat,
                inner,
            }
        };
        FftPlan { n, kernel }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform. `buf.len()` must equal the plan length.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "FFT buffer length mismatch");
        match &self.kernel {
            Kernel::Trivial => {}
            Kernel::Radix2 { log2, twiddles } => radix2(buf, *log2, twiddles),
            Kernel::Bluestein {
                m,
                chirp,
                kernel_hat,
                inner,
            } => {
                let mut work = vec![Complex64::new(0.0, 0.0); *m];
                for j in 0..self.n {
                    work[j] = buf[j] * chirp[j];
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel_hat) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                for k in 0..self.n {
                    buf[k] = work[k] * chirp[k];
                }
            }
        }
    }

    /// In-place normalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z = z.conj() * scale;
        }
    }
}

fn radix2(buf: &mut [Complex64], log2: u32, twiddles: &[Complex64]) {
    let n = buf.len();
    let shift = usize::BITS - log2;
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let tw = &twiddles[half - 1..len - 1];
        for chunk in buf.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
}

/// Real-to-complex transform of an even-length real signal via a half-length complex FFT.
///
/// The spectrum holds the `n/2 + 1` non-negative frequencies.
pub struct RealFft {
    n: usize,
    half: FftPlan,
    // e^{-2πik/n}, k = 0..n/2
    twiddles: Vec<Complex64>,
}

impl RealFft {
    /// `n` must be even and at least 2.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "RealFft needs an even length");
        let twiddles = (0..=n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        RealFft {
            n,
            half: FftPlan::new(n / 2),
            twiddles,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spectrum_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// `scratch` must hold `n/2` entries; `out` must hold `n/2 + 1`.
    pub fn forward(&self, input: &[f64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let h = self.n / 2;
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), h + 1);
        assert_eq!(scratch.len(), h);
        for (j, z) in scratch.iter_mut().enumerate() {
            *z = Complex64::new(input[2 * j], input[2 * j + 1]);
        }
        self.half.forward(scratch);
        let i = Complex64::new(0.0, 1.0);
        for k in 0..=h {
            let zk = scratch[k % h];
            let zc = scratch[(h - k) % h].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * (-0.5 * i);
            out[k] = even + self.twiddles[k] * odd;
        }
    }

    /// Normalized inverse; `spectrum` holds `n/2 + 1` entries, imaginary parts of the
    /// zero and Nyquist modes are ignored.
    pub fn inverse(&self, spectrum: &[Complex64], out: &mut [f64], scratch: &mut [Complex64]) {
        let h = self.n / 2;
        assert_eq!(spectrum.len(), h + 1);
        assert_eq!(out.len(), self.n);
        assert_eq!(scratch.len(), h);
        let i = Complex64::new(0.0, 1.0);
        for k in 0..h {
            let xk = spectrum[k];
            let xc = spectrum[h - k].conj();
            let even = (xk + xc) * 0.5;
            let odd = (xk - xc) * self.twiddles[k].conj() * 0.5;
            scratch[k] = even + i * odd;
        }
        self.half.inverse(scratch);
        for (j, z) in scratch.iter().enumerate() {
            out[2 * j] = z.re;
            out[2 * j + 1] = z.im;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let a = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    acc + v * Complex64::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let t = j as f64;
                Complex64::new(libm::sin(0.3 * t) + 0.1 * t, libm::cos(1.7 * t * t / n as f64))
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_power_of_two_and_other_lengths() {
        for &n in &[1usize, 2, 8, 64, 12, 15, 97] {
            let x = signal(n);
            let mut y = x.clone();
            FftPlan::new(n).forward(&mut y);
            let expect = naive_dft(&x);
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for &n in &[16usize, 30] {
            let x = signal(n);
            let mut y = x.clone();
            let plan = FftPlan::new(n);
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_fft_matches_complex_fft() {
        for &n in &[2usize, 16, 24, 256] {
            let x: Vec<f64> = (0..n).map(|j| libm::sin(0.7 * j as f64) + 0.05 * j as f64).collect();
            let rf = RealFft::new(n);
            let mut spec = vec![Complex64::new(0.0, 0.0); rf.spectrum_len()];
            let mut scratch = vec![Complex64::new(0.0, 0.0); n / 2];
            rf.forward(&x, &mut spec, &mut scratch);
            let mut full: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            FftPlan::new(n).forward(&mut full);
            for k in 0..=n / 2 {
                assert!((spec[k] - full[k]).norm() < 1e-10, "n = {n}, k = {k}");
            }
            let mut back = vec![0.0; n];
            rf.inverse(&spec, &mut back, &mut scratch);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
