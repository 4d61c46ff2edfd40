//! Analytic Karhunen-Loève expansion for the separable exponential
//! covariance `sigma^2 exp(-|x1 - y1| / b1 - |x2 - y2| / b2)` on
//! `[-0.5, 0.5]^2`, and the Hermite chaos coefficients of its exponential.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::path::Path;

use crate::chaos::{MultiIndex, SgBasis};
use crate::error::{Error, Result};
use crate::mesh::Point;

pub const HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One eigenpair of `exp(-|s - t| / b)` on `[-a, a]`.
#[derive(Debug, Clone, Copy)]
pub struct Eig1D {
    pub omega: f64,
    pub lambda: f64,
    pub parity: Parity,
    pub norm: f64,
}

impl Eig1D {
    pub fn eval(&self, s: f64) -> f64 {
        match self.parity {
            Parity::Even => (self.omega * s).cos() / self.norm,
            Parity::Odd => (self.omega * s).sin() / self.norm,
        }
    }

    /// `max |f|` over `[-a, a]`.
    pub fn sup(&self, half_width: f64) -> f64 {
        let reaches_peak = self.omega * half_width >= PI / 2.0 || self.parity == Parity::Even;
        if reaches_peak {
            1.0 / self.norm
        } else {
            (self.omega * half_width).sin() / self.norm
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootFinding { lo, hi });
    }
    let neg_lo = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if f(root).abs() > 1e-12 * (1.0 + root) {
        return Err(Error::RootFinding { lo, hi });
    }
    Ok(root)
}

/// The `n` largest eigenpairs of the 1D exponential kernel with correlation
/// length `b` on `[-half_width, half_width]`, ordered by decreasing eigenvalue.
///
/// Roots are taken from the pole-free forms `c cos(w a) - w sin(w a)` (even)
/// and `w cos(w a) + c sin(w a)` (odd), `c = 1/b`, which share their roots
/// with the tangent equations on each bracket.
pub fn solve_1d_eigenpairs(b: f64, half_width: f64, n: usize) -> Result<Vec<Eig1D>> {
    if b <= 0.0 || half_width <= 0.0 {
        return Err(Error::Input(format!(
            "correlation length {b} and half width {half_width} must be positive"
        )));
    }
    let c = 1.0 / b;
    let a = half_width;
    let mut out = Vec::with_capacity(n);
    for idx in 0..n {
        let (parity, lo, hi) = if idx % 2 == 0 {
            let j = (idx / 2) as f64;
            (Parity::Even, j * PI / a, (j + 0.5) * PI / a)
        } else {
            let j = idx.div_ceil(2) as f64;
            (Parity::Odd, (j - 0.5) * PI / a, j * PI / a)
        };
        let omega = match parity {
            Parity::Even => bisect(|w| c * (w * a).cos() - w * (w * a).sin(), lo, hi)?,
            Parity::Odd => bisect(|w| w * (w * a).cos() + c * (w * a).sin(), lo, hi)?,
        };
        let s = (2.0 * omega * a).sin() / (2.0 * omega);
        let norm = match parity {
            Parity::Even => (a + s).sqrt(),
            Parity::Odd => (a - s).sqrt(),
        };
        out.push(Eig1D {
            omega,
            lambda: 2.0 * c / (omega * omega + c * c),
            parity,
            norm,
        });
    }
    Ok(out)
}

/// One 2D mode `lambda * f(x1) g(x2)`; `lambda` includes `sigma^2`.
#[derive(Debug, Clone, Copy)]
pub struct KlPair {
    pub lambda: f64,
    pub fx: Eig1D,
    pub fy: Eig1D,
}

impl KlPair {
    pub fn eigfun(&self, x: Point) -> f64 {
        self.fx.eval(x[0]) * self.fy.eval(x[1])
    }
}

/// Truncated KLE of the Gaussian log-viscosity. The mean `mu0` is constant.
#[derive(Debug, Clone)]
pub struct KlField {
    pub mu0: f64,
    pub sigma_mu: f64,
    pub b1: f64,
    pub b2: f64,
    pub pairs: Vec<KlPair>,
}

pub fn build_2d_kle(b1: f64, b2: f64, sigma_mu: f64, m: usize) -> Result<KlField> {
    build_2d_kle_with_mean(b1, b2, sigma_mu, m, 0.0)
}

pub fn build_2d_kle_with_mean(b1: f64, b2: f64, sigma_mu: f64, m: usize, mu0: f64) -> Result<KlField> {
    if m == 0 {
        return Err(Error::Input("KLE truncation index must be at least 1".into()));
    }
    if sigma_mu < 0.0 {
        return Err(Error::Input(format!("sigma_mu = {sigma_mu} is negative")));
    }
    // The top-m products never use a 1D index beyond m.
    let ex = solve_1d_eigenpairs(b1, HALF_WIDTH, m)?;
    let ey = solve_1d_eigenpairs(b2, HALF_WIDTH, m)?;
    let mut cands: Vec<(f64, usize, usize)> = Vec::with_capacity(m * m);
    for (i, a) in ex.iter().enumerate() {
        for (j, b) in ey.iter().enumerate() {
            cands.push((a.lambda * b.lambda, i, j));
        }
    }
    cands.sort_by(|x, y| match y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal) {
        Ordering::Equal => (x.1 + x.2, x.1).cmp(&(y.1 + y.2, y.1)),
        o => o,
    });
    let pairs = cands
        .into_iter()
        .take(m)
        .map(|(l, i, j)| KlPair {
            lambda: sigma_mu * sigma_mu * l,
            fx: ex[i],
            fy: ey[j],
        })
        .collect();
    Ok(KlField {
        mu0,
        sigma_mu,
        b1,
        b2,
        pairs,
    })
}

impl KlField {
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// `sqrt(lambda_m) mu_m(x)` for every mode.
    pub fn scaled_terms(&self, x: Point) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda.sqrt() * p.eigfun(x)).collect()
    }

    /// Gaussian field `mu0 + sum_m sqrt(lambda_m) mu_m(x) y_m`.
    pub fn log_field(&self, x: Point, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.m());
        self.mu0
            + self
                .scaled_terms(x)
                .iter()
                .zip(y)
                .map(|(t, y)| t * y)
                .sum::<f64>()
    }

    /// Truncated lognormal viscosity `exp(log_field)`.
    pub fn viscosity(&self, x: Point, y: &[f64]) -> f64 {
        self.log_field(x, y).exp()
    }

    /// Hermite chaos coefficient `nu_q(x)` of the viscosity.
    pub fn chaos_coefficient(&self, q: &MultiIndex, x: Point) -> f64 {
        assert_eq!(q.len(), self.m());
        chaos_coefficient_from_terms(self.mu0, &self.scaled_terms(x), q)
    }

    /// `chi_m = sup |sqrt(lambda_m) mu_m|`, exact from the 1D factors.
    pub fn chi_exact(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|p| p.lambda.sqrt() * p.fx.sup(HALF_WIDTH) * p.fy.sup(HALF_WIDTH))
            .collect()
    }
}

/// Coefficient of `psi_q` in `exp(mu0 + sum_m t_m y_m)`:
/// `exp(mu0 + |t|^2 / 2) prod_m t_m^{q_m} / sqrt(q_m!)`.
pub fn chaos_coefficient_from_terms(mu0: f64, terms: &[f64], q: &MultiIndex) -> f64 {
    let base = (mu0 + 0.5 * terms.iter().map(|t| t * t).sum::<f64>()).exp();
    let prod: f64 = terms
        .iter()
        .zip(q.degrees())
        .map(|(&t, &k)| {
            let fact: f64 = (2..=k).map(f64::from).product();
            t.powi(k as i32) / fact.sqrt()
        })
        .product();
    base * prod
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub lambda: Vec<f64>,
    pub chi: Vec<f64>,
    pub nu_bar: Vec<(MultiIndex, f64)>,
}

/// Sup-norms of the scaled KL modes and of the chaos coefficients, taken as
/// maxima over the given sample points (normally FE quadrature points).
pub fn decay_report(field: &KlField, points: &[Point], basis_nu: &SgBasis) -> DecayReport {
    let mut chi = vec![0.0f64; field.m()];
    let mut nu_bar = vec![0.0f64; basis_nu.size()];
    for &x in points {
        let t = field.scaled_terms(x);
        for (c, v) in chi.iter_mut().zip(&t) {
            *c = c.max(v.abs());
        }
        for (nb, q) in nu_bar.iter_mut().zip(&basis_nu.indices) {
            *nb = nb.max(chaos_coefficient_from_terms(field.mu0, &t, q).abs());
        }
    }
    DecayReport {
        lambda: field.pairs.iter().map(|p| p.lambda).collect(),
        chi,
        nu_bar: basis_nu.indices.iter().cloned().zip(nu_bar).collect(),
    }
}

impl DecayReport {
    pub fn write_modes_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["m", "lambda", "chi"])?;
        for (m, (l, c)) in self.lambda.iter().zip(&self.chi).enumerate() {
            w.write_record([(m + 1).to_string(), format!("{l:.12e}"), format!("{c:.12e}")])?;
        }
        flush(w, path)
    }

    pub fn write_coefficients_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["q", "multi_index", "nu_bar"])?;
        for (q, (mi, v)) in self.nu_bar.iter().enumerate() {
            w.write_record([q.to_string(), mi.to_string(), format!("{v:.12e}")])?;
        }
        flush(w, path)
    }
}

fn flush<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
