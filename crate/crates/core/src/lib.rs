//! Multisymplectic field theory toolkit.
//!
//! The crate is organized bottom-up: [`exterior`] supplies forms on a chart,
//! [`charts`] builds the de Donder–Weyl and Lepage–Dedecker charts with their
//! canonical forms, [`legendre`] turns Lagrangians into Hamiltonians,
//! [`dynamics`] produces Hamiltonian curves on a lattice, [`observables`]
//! handles observable forms and their brackets, and [`perturbation`] builds
//! the first and second order functionals of the φ³ model.
//! [`acceptance`] bundles the end-to-end checks used by the test suite and
//! the command-line `suite` runner.

pub mod acceptance;
pub mod charts;
pub mod checks;
pub mod dynamics;
pub mod exterior;
pub mod legendre;
pub mod observables;
pub mod perturbation;
pub mod seeding;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MULTISYM_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
///
/// Returns the requested count, or `None` when the variable is absent and
/// the pool keeps its default size. Calling this after the pool has started
/// is an error.
pub fn configure_threads() -> Result<Option<usize>, String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())?;
    Ok(Some(n))
}
