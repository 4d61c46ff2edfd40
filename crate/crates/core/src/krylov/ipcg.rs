//! Textbook conjugate gradients in a supplied inner product, recording every
//! iterate. Unoptimized; meant for checking faster variants.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, LinearOperator};

/// CG for `m x = b` in the inner product `<x, y>_H = x^T H y`, starting from
/// zero. Returns `x_0 = 0, x_1, ..., x_{n_steps}`.
pub fn reference_ipcg(
    m: &impl LinearOperator,
    h: &impl LinearOperator,
    b: &[f64],
    n_steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut d = r.clone();
    let mut rho = dot(&r, &h.apply_new(&r));
    let mut iterates = vec![x.clone()];
    for step in 1..=n_steps {
        let q = m.apply_new(&d);
        let denom = dot(&d, &h.apply_new(&q));
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Breakdown { step });
        }
        let alpha = rho / denom;
        axpy(alpha, &d, &mut x);
        axpy(-alpha, &q, &mut r);
        iterates.push(x.clone());
        let rho_new = dot(&r, &h.apply_new(&r));
        if rho_new == 0.0 {
            break;
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = ri + beta * *di;
        }
    }
    Ok(iterates)
}
