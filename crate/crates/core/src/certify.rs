//! Matrix certificates for primary (droop) passivity and for the secondary
//! controller design condition, plus a deterministic certificate search.
//!
//! Index layout of the design matrix (dimension `n + 2`): row 0 is the power
//! command, rows `1..=n` the generator state, row `n + 1` the negated
//! frequency. Its trailing `(n + 1)` block is the primary passivity matrix.

use crate::control::DadocParams;
use crate::error::{Error, Result};
use crate::generation::{positive, LtiGenerator};
use crate::scalar::Real;
use crate::symmetric::{max_eigenvalue, sym_eigenvalues, SymmetricMatrix};

/// Largest eigenvalue accepted as "non-positive".
pub const TOL_PSD: f64 = 1e-9;
/// Per-dimension lower bound for "positive" eigenvalues.
pub const TOL_PD_PER_DIM: f64 = 1e-12;
/// Relative gap between bus damping and the certified damping.
pub const DEFAULT_DAMPING_MARGIN: f64 = 1e-3;

const SEARCH_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub p_matrix: SymmetricMatrix<T>,
    pub k_f: T,
    /// Damping used inside the matrix inequality; strictly below the bus damping.
    pub lambda_hat: T,
    /// Bus damping minus `lambda_hat`.
    pub margin: T,
}

impl<T: Real> Certificate<T> {
    /// Sets `lambda_hat = lambda_bus (1 - rel_margin)` and records the margin.
    pub fn with_bus_damping(mut self, lambda_bus: T, rel_margin: T) -> Self {
        self.lambda_hat = lambda_bus * (T::one() - rel_margin);
        self.margin = lambda_bus - self.lambda_hat;
        self
    }
}

fn tol_psd<T: Real>() -> T {
    T::tol(TOL_PSD, 64.0)
}

pub fn is_positive_definite<T: Real>(m: &SymmetricMatrix<T>) -> bool {
    let tol = T::tol(TOL_PD_PER_DIM * m.dim() as f64, 16.0 * m.dim() as f64);
    sym_eigenvalues(m).first().is_some_and(|&e| e > tol)
}

fn check_dim<T: Real>(gen: &LtiGenerator<T>, p: &SymmetricMatrix<T>) -> Result<()> {
    if p.dim() != gen.order() {
        return Err(Error::DimensionMismatch {
            context: "certificate matrix P",
            expected: gen.order(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// `P v` for a symmetric `P`.
fn sym_mul_vec<T: Real>(p: &SymmetricMatrix<T>, v: &[T]) -> Vec<T> {
    (0..p.dim())
        .map(|i| (0..p.dim()).map(|j| p.get(i, j) * v[j]).sum())
        .collect()
}

/// Writes the primary passivity block into `m` starting at `offset`.
fn fill_primary_block<T: Real>(
    m: &mut SymmetricMatrix<T>,
    offset: usize,
    gen: &LtiGenerator<T>,
    k_d: T,
    p: &SymmetricMatrix<T>,
    lambda_hat: T,
) {
    let n = gen.order();
    let a = gen.a();
    let half = T::lit(0.5);
    // (P A + A' P) / 2; entry (i, j) = (sum_k P_ik A_kj + A_ki P_kj) / 2
    for i in 0..n {
        for j in i..n {
            let s: T = (0..n)
                .map(|k| p.get(i, k) * a[(k, j)] + a[(k, i)] * p.get(k, j))
                .sum();
            m.set(offset + i, offset + j, s * half);
        }
    }
    let pb = sym_mul_vec(p, gen.b());
    for i in 0..n {
        m.set(offset + i, offset + n, (k_d * pb[i] - gen.c()[i]) * half);
    }
    m.set(offset + n, offset + n, -lambda_hat - gen.d() * k_d);
}

/// Primary-control passivity matrix of dimension `n + 1`.
pub fn primary_lmi_matrix<T: Real>(
    gen: &LtiGenerator<T>,
    k_d: T,
    p: &SymmetricMatrix<T>,
    lambda_hat: T,
) -> Result<SymmetricMatrix<T>> {
    check_dim(gen, p)?;
    let mut m = SymmetricMatrix::zeros(gen.order() + 1);
    fill_primary_block(&mut m, 0, gen, k_d, p, lambda_hat);
    Ok(m)
}

/// Design-condition matrix of dimension `n + 2`, built with `k_f` from
/// `params`.
pub fn design_condition_matrix<T: Real>(
    gen: &LtiGenerator<T>,
    params: &DadocParams<T>,
    p: &SymmetricMatrix<T>,
    lambda_hat: T,
) -> Result<SymmetricMatrix<T>> {
    check_dim(gen, p)?;
    let n = gen.order();
    let k = gen.dc_gain()?;
    let d = gen.d();
    let (k_c, k_d, k_f) = (params.k_c, params.k_d, params.k_f);
    let half = T::lit(0.5);

    let mut m = SymmetricMatrix::zeros(n + 2);
    fill_primary_block(&mut m, 1, gen, k_d, p, lambda_hat);
    m.set(0, 0, -k * k_c + d * k_c);
    let pb = sym_mul_vec(p, gen.b());
    for i in 0..n {
        m.set(0, 1 + i, (k_c * pb[i] + gen.c()[i]) * half);
    }
    m.set(0, n + 1, (k_f - k_d * k + d * k_d - d * k_c) * half);
    Ok(m)
}

fn require_margin<T: Real>(cert: &Certificate<T>, lambda_bus: T) -> Result<()> {
    if cert.lambda_hat < lambda_bus {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "certified damping {} must be below bus damping {}",
            cert.lambda_hat, lambda_bus
        )))
    }
}

pub fn check_assumption1<T: Real>(
    gen: &LtiGenerator<T>,
    k_d: T,
    cert: &Certificate<T>,
    lambda_bus: T,
) -> Result<bool> {
    require_margin(cert, lambda_bus)?;
    if !is_positive_definite(&cert.p_matrix) {
        return Ok(false);
    }
    let m = primary_lmi_matrix(gen, k_d, &cert.p_matrix, cert.lambda_hat)?;
    Ok(max_eigenvalue(&m) <= tol_psd())
}

/// Checks the design condition using the certificate's `k_f` (the gain the
/// certificate was issued for) together with `k_c`, `k_d` from `params`.
pub fn check_design_condition<T: Real>(
    gen: &LtiGenerator<T>,
    params: &DadocParams<T>,
    cert: &Certificate<T>,
    lambda_bus: T,
) -> Result<bool> {
    require_margin(cert, lambda_bus)?;
    Ok(design_condition_margin(gen, params, cert)? <= tol_psd())
}

/// Largest eigenvalue of the design matrix for `cert`, or `+inf` when `P`
/// is not positive definite.
pub fn design_condition_margin<T: Real>(
    gen: &LtiGenerator<T>,
    params: &DadocParams<T>,
    cert: &Certificate<T>,
) -> Result<T> {
    if !is_positive_definite(&cert.p_matrix) {
        return Ok(T::infinity());
    }
    let params = DadocParams {
        k_f: cert.k_f,
        ..*params
    };
    let m = design_condition_matrix(gen, &params, &cert.p_matrix, cert.lambda_hat)?;
    Ok(max_eigenvalue(&m))
}

/// Sufficient bus damping for the turbine-governor cascade:
/// `K / (3 k_c) (k_c^2 - k_c k_d + k_d^2)`.
pub fn lemma2_min_damping<T: Real>(k_gain: T, k_c: T, k_d: T) -> Result<T> {
    positive("k_gain", k_gain)?;
    positive("k_c", k_c)?;
    positive("k_d", k_d)?;
    Ok(k_gain / (T::lit(3.0) * k_c) * (k_c * k_c - k_c * k_d + k_d * k_d))
}

/// Analytic certificate for the turbine-governor cascade:
/// `P = diag(tau_a, tau_p) / (K k_c)` and `k_f = K (k_c + k_d) / 2`.
/// `lambda_hat` is left at zero; see [`Certificate::with_bus_damping`].
pub fn lemma2_certificate<T: Real>(
    tau_a: T,
    tau_p: T,
    k_gain: T,
    k_c: T,
    k_d: T,
) -> Result<Certificate<T>> {
    positive("tau_a", tau_a)?;
    positive("tau_p", tau_p)?;
    positive("k_gain", k_gain)?;
    positive("k_c", k_c)?;
    positive("k_d", k_d)?;
    let scale = T::one() / (k_gain * k_c);
    Ok(Certificate {
        p_matrix: SymmetricMatrix::from_diagonal(&[tau_a * scale, tau_p * scale]),
        k_f: k_gain * (k_c + k_d) / T::lit(2.0),
        lambda_hat: T::zero(),
        margin: T::zero(),
    })
}

/// Diagonal certificate pinned by the equilibrium direction of the design
/// matrix.
///
/// Shifting the power command together with the generator state along its
/// equilibrium line (`x = -k_c A^-1 B pc`, frequency unchanged) is a null
/// direction of the quadratic form for every `P` and `k_f`, so a
/// non-positive design matrix must annihilate it. That forces
/// `k_f = K k_c` and `k_c P A^-1 B = A^-T C'`, which fixes a diagonal `P`
/// entry by entry.
pub fn structural_certificate<T: Real>(
    gen: &LtiGenerator<T>,
    k_c: T,
) -> Result<Option<Certificate<T>>> {
    positive("k_c", k_c)?;
    let k = gen.dc_gain()?;
    let ainv_b = gen.a().solve(gen.b())?;
    let ainv_t_c = gen.a().transpose().solve(gen.c())?;
    let mut diag = Vec::with_capacity(gen.order());
    for (&num, &den) in ainv_t_c.iter().zip(&ainv_b) {
        let v = num / (k_c * den);
        if !(v.is_finite() && v > T::zero()) {
            return Ok(None);
        }
        diag.push(v);
    }
    Ok(Some(Certificate {
        p_matrix: SymmetricMatrix::from_diagonal(&diag),
        k_f: k * k_c,
        lambda_hat: T::zero(),
        margin: T::zero(),
    }))
}

/// Deterministic search for a diagonal certificate.
///
/// Tries, in order: the analytic cascade certificate (when `gen` has that
/// structure), the structural certificate, then a coarse grid over `s I`
/// and `k_f` refined by cyclic coordinate descent on `log diag(P)` and
/// `log k_f`. `None` means no diagonal certificate was found, not that the
/// condition is infeasible.
pub fn search_certificate<T: Real>(
    gen: &LtiGenerator<T>,
    params: &DadocParams<T>,
    lambda_bus: T,
) -> Option<Certificate<T>> {
    if !(lambda_bus > T::zero()) || !lambda_bus.is_finite() {
        return None;
    }
    let rel = T::lit(DEFAULT_DAMPING_MARGIN);
    let accept = |cert: Certificate<T>| -> Option<Certificate<T>> {
        let cert = cert.with_bus_damping(lambda_bus, rel);
        match check_design_condition(gen, params, &cert, lambda_bus) {
            Ok(true) => Some(cert),
            _ => None,
        }
    };

    if let Some((tau_a, tau_p, k)) = gen.as_second_order() {
        if let Ok(cert) = lemma2_certificate(tau_a, tau_p, k, params.k_c, params.k_d) {
            if let Some(c) = accept(cert) {
                return Some(c);
            }
        }
    }
    if let Ok(Some(cert)) = structural_certificate(gen, params.k_c) {
        if let Some(c) = accept(cert) {
            return Some(c);
        }
    }
    descent_search(gen, params, lambda_bus, rel).and_then(accept)
}

fn descent_search<T: Real>(
    gen: &LtiGenerator<T>,
    params: &DadocParams<T>,
    lambda_bus: T,
    rel: T,
) -> Option<Certificate<T>> {
    let n = gen.order();
    let k = gen.dc_gain().ok()?;
    let lambda_hat = lambda_bus * (T::one() - rel);
    let ten = T::lit(10.0);
    // Coordinates: log10 of each diagonal entry of P, then log10 k_f.
    let objective = |z: &[T]| -> T {
        let diag: Vec<T> = z[..n].iter().map(|&v| ten.powf(v)).collect();
        let p = DadocParams {
            k_f: ten.powf(z[n]),
            ..*params
        };
        let m = match design_condition_matrix(gen, &p, &SymmetricMatrix::from_diagonal(&diag), lambda_hat) {
            Ok(m) => m,
            Err(_) => return T::infinity(),
        };
        let v = max_eigenvalue(&m);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let default_kf = crate::control::default_kf(k, params.k_c, params.k_d);
    let mut kf_grid: Vec<T> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&f| default_kf * T::lit(f))
        .collect();
    kf_grid.push(k * params.k_c);

    let mut best: Option<(T, Vec<T>)> = None;
    for step in 0..=12 {
        let log_s = T::lit(-3.0 + 0.5 * step as f64);
        for &kf in &kf_grid {
            let mut z = vec![log_s; n];
            z.push(kf.log10());
            let f = objective(&z);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, z));
            }
        }
    }
    let (mut fbest, mut z) = best?;
    let tol = tol_psd::<T>();
    let mut width = T::one();
    for _ in 0..SEARCH_MAX_SWEEPS {
        if fbest <= tol {
            break;
        }
        let before = fbest;
        for coord in 0..=n {
            let (x, f) = golden_section(|v| {
                let mut trial = z.clone();
                trial[coord] = v;
                objective(&trial)
            }, z[coord] - width, z[coord] + width);
            if f < fbest {
                fbest = f;
                z[coord] = x;
            }
        }
        if before - fbest <= T::epsilon() * before.abs().max(T::one()) {
            width *= T::lit(0.5);
            if width < T::lit(1e-8) {
                break;
            }
        }
    }
    let diag: Vec<T> = z[..n].iter().map(|&v| ten.powf(v)).collect();
    Some(Certificate {
        p_matrix: SymmetricMatrix::from_diagonal(&diag),
        k_f: ten.powf(z[n]),
        lambda_hat: T::zero(),
        margin: T::zero(),
    })
}

/// Minimises a unimodal-ish `f` on `[lo, hi]`; returns `(argmin, min)`.
fn golden_section<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> (T, T) {
    let ratio = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo <= T::epsilon() * T::lit(4.0) * (T::one() + lo.abs()) {
            break;
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Null direction `(1, -k_c A^-1 B, 0)` of every design matrix built for
/// `gen` and `k_c`.
pub fn equilibrium_direction<T: Real>(gen: &LtiGenerator<T>, k_c: T) -> Result<Vec<T>> {
    let ainv_b = gen.a().solve(gen.b())?;
    let mut z = vec![T::one()];
    z.extend(ainv_b.iter().map(|&v| -k_c * v));
    z.push(T::zero());
    Ok(z)
}
