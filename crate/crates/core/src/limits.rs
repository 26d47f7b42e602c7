//! Process-wide size caps.
//!
//! Dense operator assembly is exponential in the qubit count, so every
//! entry point that materializes a `2^n x 2^n` matrix checks [`dense_cap`].
//! State-vector simulation checks [`monte_carlo_cap`] and exhaustive
//! enumeration checks [`brute_force_cap`]. The CLI seeds these from the
//! `MDSAT_DENSE_CAP`, `MDSAT_MC_CAP` and `MDSAT_BRUTE_CAP` environment
//! variables.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 14;
pub const DEFAULT_MONTE_CARLO_CAP: usize = 24;
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 24;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);
static MONTE_CARLO_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_MONTE_CARLO_CAP);
static BRUTE_FORCE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_BRUTE_FORCE_CAP);

pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

pub fn monte_carlo_cap() -> usize {
    MONTE_CARLO_CAP.load(Ordering::Relaxed)
}

pub fn brute_force_cap() -> usize {
    BRUTE_FORCE_CAP.load(Ordering::Relaxed)
}

pub fn set_dense_cap(n: usize) {
    DENSE_CAP.store(n, Ordering::Relaxed);
}

pub fn set_monte_carlo_cap(n: usize) {
    MONTE_CARLO_CAP.store(n, Ordering::Relaxed);
}

pub fn set_brute_force_cap(n: usize) {
    BRUTE_FORCE_CAP.store(n, Ordering::Relaxed);
}

/// Reads the three `MDSAT_*_CAP` variables, ignoring unparsable values.
pub fn load_from_env() {
    let read = |key: &str| std::env::var(key).ok().and_then(|v| v.trim().parse::<usize>().ok());
    if let Some(v) = read("MDSAT_DENSE_CAP") {
        set_dense_cap(v);
    }
    if let Some(v) = read("MDSAT_MC_CAP") {
        set_monte_carlo_cap(v);
    }
    if let Some(v) = read("MDSAT_BRUTE_CAP") {
        set_brute_force_cap(v);
    }
}

pub(crate) fn check_dense(what: &'static str, n: usize) -> Result<()> {
    check(what, n, dense_cap())
}

pub(crate) fn check_monte_carlo(what: &'static str, n: usize) -> Result<()> {
    check(what, n, monte_carlo_cap())
}

pub(crate) fn check_brute_force(what: &'static str, n: usize) -> Result<()> {
    check(what, n, brute_force_cap())
}

fn check(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::CapExceeded { what, n, cap })
    } else {
        Ok(())
    }
}
