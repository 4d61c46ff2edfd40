use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit exceeded: {what} needs {needed}, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("assembly produced a non-finite value on element {element}")]
    Assembly { element: usize },

    #[error("root finding failed on bracket [{lo}, {hi}]")]
    RootFinding { lo: f64, hi: f64 },

    #[error("eigenvalue estimate did not converge in {steps} steps (best {best}, residual {residual:.3e})")]
    Estimation {
        steps: usize,
        best: f64,
        residual: f64,
    },

    #[error(
        "lost H-positivity at iteration {iteration}: <d, H P^-1 C d> / |d|^2 = {rayleigh:.3e} with a = {a:.6e}"
    )]
    Positivity {
        iteration: usize,
        a: f64,
        rayleigh: f64,
    },

    #[error("breakdown at step {step}: zero denominator")]
    Breakdown { step: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
