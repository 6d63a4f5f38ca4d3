#![allow(dead_code)]

pub mod oracles;
pub mod props;

use std::time::Instant;

/// Runs `f`, returning its result with the elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}
