//! Block preconditioners for the SGFE saddle point system and the inner
//! product matrix used by the Bramble-Pasciak CG.
//!
//! The velocity block is approximated by one multigrid V-cycle per chaos
//! mode and component (mean-based: the stochastic factor is the identity),
//! the Schur complement by the diagonal of the pressure mass matrix.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::krylov::pcg;
use crate::linalg::LinearOperator;
use crate::multigrid::MgHierarchy;
use crate::system::{SaddlePoint, SgLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreconKind {
    Diag,
    /// Block lower-triangular with velocity block `a A_mg`.
    Tri { a: f64 },
}

pub struct BlockPrecon {
    pub kind: PreconKind,
    pub mg: Arc<MgHierarchy>,
    /// Diagonal of the pressure mass matrix.
    pub dp: Vec<f64>,
    pub layout: SgLayout,
}

impl BlockPrecon {
    pub fn diag(mg: Arc<MgHierarchy>, dp: Vec<f64>, layout: SgLayout) -> Result<Self> {
        Self::new(PreconKind::Diag, mg, dp, layout)
    }

    pub fn tri(mg: Arc<MgHierarchy>, dp: Vec<f64>, layout: SgLayout, a: f64) -> Result<Self> {
        Self::new(PreconKind::Tri { a }, mg, dp, layout)
    }

    pub fn new(kind: PreconKind, mg: Arc<MgHierarchy>, dp: Vec<f64>, layout: SgLayout) -> Result<Self> {
        if let PreconKind::Tri { a } = kind {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("scaling a must be positive, got {a}")));
            }
        }
        if mg.n_free() != layout.n_free {
            return Err(Error::Config(format!(
                "multigrid has {} free nodes, operator has {}",
                mg.n_free(),
                layout.n_free
            )));
        }
        if dp.len() != layout.n_p || dp.iter().any(|&d| d <= 0.0) {
            return Err(Error::Config("pressure mass diagonal has wrong size or sign".into()));
        }
        Ok(Self {
            kind,
            mg,
            dp,
            layout,
        })
    }

    /// Scaling of the velocity block (1 for the diagonal kind).
    pub fn a(&self) -> f64 {
        match self.kind {
            PreconKind::Diag => 1.0,
            PreconKind::Tri { a } => a,
        }
    }

    /// `z <- A_mg^{-1} r` on a velocity vector: one V-cycle per mode and
    /// component.
    pub fn apply_atilde_inv(&self, r: &[f64], z: &mut [f64]) {
        let nf = self.layout.n_free;
        for (rb, zb) in r.chunks_exact(nf).zip(z.chunks_exact_mut(nf)) {
            self.mg.vcycle(rb, zb);
        }
    }

    /// `z <- (a A_mg)^{-1} r`.
    pub fn apply_scaled_atilde_inv(&self, r: &[f64], z: &mut [f64]) {
        self.apply_atilde_inv(r, z);
        let inv = 1.0 / self.a();
        if inv != 1.0 {
            z.iter_mut().for_each(|v| *v *= inv);
        }
    }

    /// `y <- A_mg v`, inverting the V-cycle by CG (preconditioned with the
    /// constant-coefficient Laplacian). Test and diagnostic use only.
    pub fn apply_atilde(&self, v: &[f64], y: &mut [f64], tol: f64) -> Result<()> {
        let nf = self.layout.n_free;
        let lap = &self.mg.finest().a;
        for (vb, yb) in v.chunks_exact(nf).zip(y.chunks_exact_mut(nf)) {
            let out = pcg(&*self.mg, lap, vb, tol, 500);
            if !out.converged {
                return Err(Error::Estimation {
                    steps: out.iterations,
                    best: f64::NAN,
                    residual: out.rel_residual,
                });
            }
            yb.copy_from_slice(&out.x);
        }
        Ok(())
    }

    /// `z <- S^{-1} r` with `S = I (x) D_p`.
    pub fn apply_s_inv(&self, r: &[f64], z: &mut [f64]) {
        let np = self.layout.n_p;
        for (rb, zb) in r.chunks_exact(np).zip(z.chunks_exact_mut(np)) {
            for ((z, r), d) in zb.iter_mut().zip(rb).zip(&self.dp) {
                *z = r / d;
            }
        }
    }

    /// `y <- S p`.
    pub fn apply_s(&self, p: &[f64], y: &mut [f64]) {
        let np = self.layout.n_p;
        for (pb, yb) in p.chunks_exact(np).zip(y.chunks_exact_mut(np)) {
            for ((y, p), d) in yb.iter_mut().zip(pb).zip(&self.dp) {
                *y = p * d;
            }
        }
    }

    /// Block-diagonal inverse `diag(A_mg^{-1}, S^{-1})`.
    pub fn apply_diag_inv(&self, r: &[f64], z: &mut [f64]) {
        let (ru, rp) = self.layout.split(r);
        let (zu, zp) = self.layout.split_mut(z);
        self.apply_atilde_inv(ru, zu);
        self.apply_s_inv(rp, zp);
    }

    /// Block forward substitution with `[a A_mg, 0; B, -S]`:
    /// `z_u = (a A_mg)^{-1} r_u`, `z_p = S^{-1} (B z_u - r_p)`.
    pub fn apply_tri_inv(&self, op: &impl SaddlePoint, r: &[f64], z: &mut [f64]) {
        let (ru, rp) = self.layout.split(r);
        let (zu, zp) = self.layout.split_mut(z);
        self.apply_scaled_atilde_inv(ru, zu);
        let mut t = vec![0.0; rp.len()];
        op.apply_b(zu, &mut t);
        for (ti, ri) in t.iter_mut().zip(rp) {
            *ti -= ri;
        }
        self.apply_s_inv(&t, zp);
    }

    /// The preconditioner inverse as an operator; `op` supplies `B` for the
    /// triangular kind.
    pub fn inverse<'a, S: SaddlePoint>(&'a self, op: &'a S) -> PreconInverse<'a, S> {
        PreconInverse { prec: self, op }
    }
}

/// `A_mg^{-1}` on the velocity part as an operator.
pub struct AtildeInverse<'a>(pub &'a BlockPrecon);

impl LinearOperator for AtildeInverse<'_> {
    fn dim(&self) -> usize {
        self.0.layout.u_len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_atilde_inv(x, y);
    }
}

pub struct PreconInverse<'a, S> {
    prec: &'a BlockPrecon,
    op: &'a S,
}

impl<S: SaddlePoint> LinearOperator for PreconInverse<'_, S> {
    fn dim(&self) -> usize {
        self.prec.layout.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.prec.kind {
            PreconKind::Diag => self.prec.apply_diag_inv(x, y),
            PreconKind::Tri { .. } => self.prec.apply_tri_inv(self.op, x, y),
        }
    }
}

/// `H = diag(A - a A_mg, S)`. Applying it inverts the V-cycle iteratively,
/// so it is meant for checks on small instances.
pub struct HOperator<'a, S> {
    pub op: &'a S,
    pub prec: &'a BlockPrecon,
    pub inner_tol: f64,
}

impl<'a, S: SaddlePoint> HOperator<'a, S> {
    pub fn new(op: &'a S, prec: &'a BlockPrecon) -> Self {
        Self {
            op,
            prec,
            inner_tol: 1e-14,
        }
    }
}

impl<S: SaddlePoint> LinearOperator for HOperator<'_, S> {
    fn dim(&self) -> usize {
        self.prec.layout.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let lay = self.prec.layout;
        let (xu, xp) = lay.split(x);
        let (yu, yp) = lay.split_mut(y);
        self.op.apply_a(xu, yu);
        let mut t = vec![0.0; xu.len()];
        self.prec
            .apply_atilde(xu, &mut t, self.inner_tol)
            .expect("inner V-cycle inversion converges");
        crate::linalg::axpy(-self.prec.a(), &t, yu);
        self.prec.apply_s(xp, yp);
    }
}
