//! FFT backend for the evolver built on `realfft`/`rustfft`.

use std::sync::Arc;

use gkdv_core::evolver::{FftProvider, RealTransform};
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

/// Transforms planned by `realfft`; mixed-radix lengths `2^a 3^b 5^c` are fast.
#[derive(Debug, Clone, Copy, Default)]
pub struct RustFft;

struct Plan {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    scratch: Vec<Complex64>,
}

impl RealTransform for Plan {
    fn len(&self) -> usize {
        self.n
    }

    fn forward(&mut self, input: &mut [f64], out: &mut [Complex64]) {
        self.forward
            .process_with_scratch(input, out, &mut self.scratch)
            .expect("forward FFT buffers have planned sizes");
    }

    fn inverse(&mut self, input: &mut [Complex64], out: &mut [f64]) {
        input[0].im = 0.0;
        if let Some(last) = input.last_mut() {
            last.im = 0.0;
        }
        self.inverse
            .process_with_scratch(input, out, &mut self.scratch)
            .expect("inverse FFT buffers have planned sizes");
        let scale = 1.0 / self.n as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

impl FftProvider for RustFft {
    fn real(&self, n: usize) -> Box<dyn RealTransform> {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_scratch_len().max(inverse.get_scratch_len());
        Box::new(Plan {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    fn fast_len(&self, n: usize) -> usize {
        let mut m = n + n % 2;
        loop {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return m;
            }
            m += 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gkdv_core::evolver::BuiltinFft;

    #[test]
    fn agrees_with_builtin() {
        let n = 96;
        let x: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin() + 0.01 * i as f64).collect();
        let mut a = RustFft.real(n);
        let mut b = BuiltinFft.real(n);
        let (mut sa, mut sb) = (
            vec![Complex64::new(0.0, 0.0); n / 2 + 1],
            vec![Complex64::new(0.0, 0.0); n / 2 + 1],
        );
        a.forward(&mut x.clone(), &mut sa);
        b.forward(&mut x.clone(), &mut sb);
        for (p, q) in sa.iter().zip(&sb) {
            assert!((p - q).norm() < 1e-11);
        }
        let mut back = vec![0.0; n];
        a.inverse(&mut sa, &mut back);
        for (p, q) in back.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
        assert_eq!(RustFft.fast_len(49152), 49152);
        assert_eq!(RustFft.fast_len(14), 16);
    }
}
