//! Shared FFT plans.
//!
//! rustfft plans are cached per length so hot loops (one transform per
//! stirring sample and antenna pair) do not replan. Transforms here are the
//! unnormalized forward/inverse DFT; callers apply their own scaling
//! convention.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

static PLANS: Mutex<Option<PlanCache>> = Mutex::new(None);

struct PlanCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn with_cache<T>(f: impl FnOnce(&mut PlanCache) -> T) -> T {
    let mut guard = PLANS.lock().unwrap();
    let cache = guard.get_or_insert_with(|| PlanCache {
        planner: FftPlanner::new(),
        forward: HashMap::new(),
        inverse: HashMap::new(),
    });
    f(cache)
}

/// Plan (or fetch) the unnormalized forward DFT of length `len`.
pub fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    with_cache(|c| {
        c.forward
            .entry(len)
            .or_insert_with(|| c.planner.plan_fft_forward(len))
            .clone()
    })
}

/// Plan (or fetch) the unnormalized inverse DFT of length `len`.
pub fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    with_cache(|c| {
        c.inverse
            .entry(len)
            .or_insert_with(|| c.planner.plan_fft_inverse(len))
            .clone()
    })
}

/// Forward DFT in place, unnormalized: `X_n = sum_k x_k e^{-j 2 pi n k / N}`.
pub fn dft_in_place(buf: &mut [Complex64]) {
    forward(buf.len()).process(buf);
}

/// Inverse DFT in place with 1/N scaling: `x_k = (1/N) sum_n X_n e^{+j 2 pi n k / N}`.
pub fn idft_scaled_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}
