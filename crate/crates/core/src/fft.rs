//! Cached 3-D real-to-complex transforms (x-fastest layout).
//!
//! The real axis is x; the half spectrum stores `nx/2 + 1` x-frequencies,
//! followed by the full y and z ranges. Transforms are unnormalized.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub(crate) struct Plan3 {
    n: [usize; 3],
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fy: Arc<dyn Fft<f64>>,
    fy_inv: Arc<dyn Fft<f64>>,
    fz: Arc<dyn Fft<f64>>,
    fz_inv: Arc<dyn Fft<f64>>,
}

fn cache() -> &'static Mutex<HashMap<[usize; 3], Arc<Plan3>>> {
    static CACHE: OnceLock<Mutex<HashMap<[usize; 3], Arc<Plan3>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plan(n: [usize; 3]) -> Arc<Plan3> {
    let mut guard = cache().lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut rp = RealFftPlanner::<f64>::new();
            let mut cp = FftPlanner::<f64>::new();
            Arc::new(Plan3 {
                n,
                r2c: rp.plan_fft_forward(n[0]),
                c2r: rp.plan_fft_inverse(n[0]),
                fy: cp.plan_fft_forward(n[1]),
                fy_inv: cp.plan_fft_inverse(n[1]),
                fz: cp.plan_fft_forward(n[2]),
                fz_inv: cp.plan_fft_inverse(n[2]),
            })
        })
        .clone()
}

impl Plan3 {
    pub(crate) fn half_len(&self) -> usize {
        (self.n[0] / 2 + 1) * self.n[1] * self.n[2]
    }

    pub(crate) fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        let [nx, ny, nz] = self.n;
        let hx = nx / 2 + 1;
        debug_assert_eq!(input.len(), nx * ny * nz);
        let mut spec = vec![Complex64::new(0.0, 0.0); self.half_len()];

        let mut row = self.r2c.make_input_vec();
        let mut out = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for line in 0..ny * nz {
            row.copy_from_slice(&input[line * nx..(line + 1) * nx]);
            self.r2c
                .process_with_scratch(&mut row, &mut out, &mut scratch)
                .expect("r2c length mismatch");
            spec[line * hx..(line + 1) * hx].copy_from_slice(&out);
        }
        self.along_y(&mut spec, &self.fy);
        self.along_z(&mut spec, &self.fz);
        spec
    }

    /// Consumes the spectrum; output is scaled by `nx*ny*nz`.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let [nx, ny, nz] = self.n;
        let hx = nx / 2 + 1;
        self.along_z(&mut spec, &self.fz_inv);
        self.along_y(&mut spec, &self.fy_inv);

        let mut out = vec![0.0; nx * ny * nz];
        let mut row = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        let mut real = self.c2r.make_output_vec();
        for line in 0..ny * nz {
            row.copy_from_slice(&spec[line * hx..(line + 1) * hx]);
            // DC and Nyquist must be real for c2r; residual imaginary parts are rounding.
            row[0].im = 0.0;
            row[hx - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut row, &mut real, &mut scratch)
                .expect("c2r length mismatch");
            out[line * nx..(line + 1) * nx].copy_from_slice(&real);
        }
        out
    }

    fn along_y(&self, spec: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let [nx, ny, nz] = self.n;
        let hx = nx / 2 + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); hx * ny];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for k in 0..nz {
            let plane = &mut spec[k * hx * ny..(k + 1) * hx * ny];
            for j in 0..ny {
                for i in 0..hx {
                    buf[i * ny + j] = plane[i + hx * j];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..ny {
                for i in 0..hx {
                    plane[i + hx * j] = buf[i * ny + j];
                }
            }
        }
    }

    fn along_z(&self, spec: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let [nx, ny, nz] = self.n;
        let hx = nx / 2 + 1;
        let stride = hx * ny;
        let mut buf = vec![Complex64::new(0.0, 0.0); hx * nz];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for j in 0..ny {
            for k in 0..nz {
                for i in 0..hx {
                    buf[i * nz + k] = spec[i + hx * j + stride * k];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..nz {
                for i in 0..hx {
                    spec[i + hx * j + stride * k] = buf[i * nz + k];
                }
            }
        }
    }
}
