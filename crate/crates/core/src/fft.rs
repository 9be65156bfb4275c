//! Separable multi-dimensional FFT over row-major cubes.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized transform of a `side^dim` cube. Forward uses
/// `e^{-2 pi i k n / side}`, inverse `e^{+2 pi i k n / side}`.
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, side: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), side.pow(dim as u32));
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(side, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    if dim == 1 {
        return;
    }
    let mut lane = vec![Complex64::default(); side];
    for axis in 0..dim - 1 {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, slot) in lane.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process_with_scratch(&mut lane, &mut scratch);
                for (k, v) in lane.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }
}

pub(crate) fn forward(data: &mut [Complex64], dim: usize, side: usize) {
    fft_nd(data, dim, side, FftDirection::Forward);
}

pub(crate) fn inverse(data: &mut [Complex64], dim: usize, side: usize) {
    fft_nd(data, dim, side, FftDirection::Inverse);
}
