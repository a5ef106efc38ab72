//! Weakly holomorphic modular forms of prime level in exact arithmetic:
//! truncated q-series, Hecke traces, holomorphic echelon bases, canonical
//! bases of `M♯_k(p)` and `S♯_k(p)`, Zagier duality and genus-one
//! generating functions.

pub mod classical;
pub mod duality;
pub mod echelon;
pub mod error;
pub mod exec;
pub mod genfun;
pub mod modp;
pub mod qseries;
pub mod spaces;
pub mod trace;
pub mod weak;

/// Drops the cached trace tables and generator sets so the next call
/// recomputes them.
pub fn clear_caches() {
    trace::clear_trace_cache();
    spaces::clear_generator_cache();
}
