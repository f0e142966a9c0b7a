use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized 1-D transform of every contiguous chunk of `len` values.
pub(crate) fn fft_1d(data: &mut [Complex64], len: usize, dir: Direction) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    });
    plan.process(data);
}

/// Unnormalized n-dimensional transform over a row-major cube of side `side`.
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, side: usize, dir: Direction) {
    debug_assert_eq!(data.len(), side.pow(dim as u32));
    if dim == 0 {
        return;
    }
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(side),
            Direction::Inverse => p.plan_fft_inverse(side),
        }
    });
    // last axis is contiguous
    plan.process(data);
    let mut line = vec![Complex64::default(); side];
    for axis in 0..dim - 1 {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[start + i * stride];
                }
                plan.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[start + i * stride] = *v;
                }
            }
        }
    }
}
