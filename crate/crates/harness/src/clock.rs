//! Per-thread CPU time for timing reports.

/// Runs `f`, returning its result and, if `enabled`, the CPU seconds the
/// calling thread spent in it.
pub fn measure<T>(enabled: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    if !enabled {
        return (f(), None);
    }
    let start = thread_cpu_seconds();
    let out = f();
    (out, Some((thread_cpu_seconds() - start).max(0.0)))
}

#[cfg(unix)]
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[cfg(not(unix))]
pub fn thread_cpu_seconds() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}
