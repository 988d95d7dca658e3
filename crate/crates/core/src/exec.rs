//! Row-parallel execution hook.
//!
//! Heavy kernels write their output one row at a time, and every output row
//! is computed by a single call with a fixed summation order. An executor may
//! therefore run rows on any number of threads without changing a single bit
//! of the result. The core crate ships only [`Sequential`]; threaded
//! executors live in `std` land.

pub trait Executor: Sync {
    /// Splits `out` into consecutive chunks of `row_len` values and calls
    /// `task(row_index, row)` once per chunk.
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        task: &(dyn Fn(usize, &mut [f64]) + Sync),
    );
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        task: &(dyn Fn(usize, &mut [f64]) + Sync),
    ) {
        if row_len == 0 {
            return;
        }
        for (i, row) in out.chunks_mut(row_len).enumerate() {
            task(i, row);
        }
    }
}
