//! Index-range scans that run on rayon when the `parallel` feature is on.
//!
//! Every helper takes an `init` closure building per-worker scratch state so
//! the hot loops never allocate. Results never depend on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How grid scans are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon if compiled with the `parallel` feature, else sequential.
    #[default]
    Parallel,
}


impl Exec {
    fn parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maximum of `f` over the range with its lowest maximizing index.
pub(crate) fn max_by<S, I, F>(exec: Exec, len: usize, init: I, f: F) -> Option<(f64, usize)>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> f64 + Sync + Send,
{
    let better = |a: (f64, usize), b: (f64, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        return (0..len)
            .into_par_iter()
            .map_init(&init, |s, k| (f(s, k), k))
            .reduce_with(better);
    }
    let mut s = init();
    (0..len).map(|k| (f(&mut s, k), k)).reduce(better)
}

/// `f` evaluated at every index, in index order.
pub(crate) fn map<S, R, I, F>(exec: Exec, len: usize, init: I, f: F) -> Vec<R>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> R + Sync + Send,
    R: Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        return (0..len)
            .into_par_iter()
            .map_init(&init, |s, k| f(s, k))
            .collect();
    }
    let mut s = init();
    (0..len).map(|k| f(&mut s, k)).collect()
}

/// Folds every index into a per-worker accumulator, then merges them.
pub(crate) fn fold<S, A, I, Z, F, C>(
    exec: Exec,
    len: usize,
    init: I,
    identity: Z,
    f: F,
    combine: C,
) -> A
where
    I: Fn() -> S + Sync + Send,
    Z: Fn() -> A + Sync + Send,
    F: Fn(&mut S, &mut A, usize) + Sync + Send,
    C: Fn(A, A) -> A + Sync + Send,
    S: Send,
    A: Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel() {
        return (0..len)
            .into_par_iter()
            .fold(
                || (init(), identity()),
                |(mut s, mut acc), k| {
                    f(&mut s, &mut acc, k);
                    (s, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(&identity, &combine);
    }
    let mut s = init();
    let mut acc = identity();
    for k in 0..len {
        f(&mut s, &mut acc, k);
    }
    acc
}
