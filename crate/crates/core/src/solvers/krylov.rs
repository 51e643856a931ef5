//! Preconditioned MINRES and CG from a zero initial guess.
//!
//! Both stop once the preconditioner-norm residual `sqrt(r . C^-1 r)` drops
//! below `rtol` times its initial value.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, dot};
use crate::linalg::LinearOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// The Lanczos process terminated without reaching the tolerance.
    Breakdown,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub initial_prec_residual: f64,
    pub final_prec_residual: f64,
    pub converged: bool,
    pub status: SolveStatus,
    /// Seconds.
    pub wall_time: f64,
    /// Preconditioned residual norm after each iteration, starting with the
    /// initial one.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    pub rtol: f64,
    pub max_iterations: usize,
}

impl KrylovOptions {
    pub fn new(rtol: f64, max_iterations: usize) -> Self {
        Self { rtol, max_iterations }
    }
}

/// `min(10 sqrt(n) + 500, 20000)` for `n` unknowns per field.
pub fn default_max_iterations(n: usize) -> usize {
    ((10.0 * (n as f64).sqrt()) as usize + 500).min(20_000)
}

fn check_dims(op: &dyn LinearOperator, prec: &dyn LinearOperator, b: &[f64]) -> Result<()> {
    for found in [prec.dim(), b.len()] {
        if found != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                found,
            });
        }
    }
    Ok(())
}

struct Tracker {
    start: Instant,
    history: Vec<f64>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            history: Vec::new(),
        }
    }

    fn finish(self, iterations: usize, rtol: f64, status: SolveStatus) -> SolveStats {
        let initial = self.history.first().copied().unwrap_or(0.0);
        let last = self.history.last().copied().unwrap_or(0.0);
        let converged = last <= rtol * initial;
        SolveStats {
            iterations,
            initial_prec_residual: initial,
            final_prec_residual: last,
            converged,
            status: match status {
                SolveStatus::Breakdown if converged => SolveStatus::Converged,
                s => s,
            },
            wall_time: self.start.elapsed().as_secs_f64(),
            residual_history: self.history,
        }
    }
}

/// `sqrt(z . v)` with a check that the preconditioner is positive.
fn prec_norm(z: &[f64], v: &[f64], scale: f64) -> Result<f64> {
    let zv = dot(z, v);
    if zv < 0.0 {
        // Tiny negative values are rounding noise around a zero residual.
        if zv.abs() <= 1e-14 * scale * scale {
            return Ok(0.0);
        }
        return Err(Error::IndefinitePreconditioner(zv));
    }
    Ok(zv.sqrt())
}

/// Preconditioned MINRES for symmetric `op` and SPD `prec` (`prec` applies
/// `C^-1`). Reaching `max_iterations` is not an error: the current iterate
/// is returned with `converged = false`.
pub fn minres(
    op: &dyn LinearOperator,
    prec: &dyn LinearOperator,
    b: &[f64],
    opts: KrylovOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    check_dims(op, prec, b)?;
    let n = b.len();
    let mut tracker = Tracker::new();
    let mut x = vec![0.0; n];

    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = prec.apply_vec(&v);
    let gamma1 = prec_norm(&z, &v, 1.0)?;
    tracker.history.push(gamma1);
    if gamma1 == 0.0 {
        return Ok((x, tracker.finish(0, opts.rtol, SolveStatus::Converged)));
    }

    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut az = vec![0.0; n];
    let (mut gamma_prev, mut gamma) = (1.0, gamma1);
    let (mut c_prev, mut c) = (1.0, 1.0);
    let (mut s_prev, mut s) = (0.0, 0.0);
    let mut eta = gamma1;
    let target = opts.rtol * gamma1;

    for it in 1..=opts.max_iterations {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        op.apply(&z, &mut az);
        let delta = dot(&az, &z);
        // v_next = A z - (delta / gamma) v - (gamma / gamma_prev) v_prev
        let (a1, a2) = (delta / gamma, gamma / gamma_prev);
        for ((vp, vi), ai) in v_prev.iter_mut().zip(&v).zip(&az) {
            *vp = ai - a1 * vi - a2 * *vp;
        }
        std::mem::swap(&mut v_prev, &mut v);
        let z_next = prec.apply_vec(&v);
        let gamma_next = prec_norm(&z_next, &v, gamma1)?;

        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = alpha0.hypot(gamma_next);
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        if alpha1 == 0.0 {
            return Ok((x, tracker.finish(it, opts.rtol, SolveStatus::Breakdown)));
        }
        let (c_next, s_next) = (alpha0 / alpha1, gamma_next / alpha1);
        // w_next = (z - alpha3 w_prev - alpha2 w) / alpha1
        for ((wp, wi), zi) in w_prev.iter_mut().zip(&w).zip(&z) {
            *wp = (zi - alpha3 * *wp - alpha2 * wi) / alpha1;
        }
        std::mem::swap(&mut w_prev, &mut w);
        axpy(c_next * eta, &w, &mut x);
        eta = -s_next * eta;
        tracker.history.push(eta.abs());

        if eta.abs() <= target {
            return Ok((x, tracker.finish(it, opts.rtol, SolveStatus::Converged)));
        }
        if gamma_next <= f64::EPSILON * gamma1 {
            return Ok((x, tracker.finish(it, opts.rtol, SolveStatus::Breakdown)));
        }
        z = z_next;
        gamma_prev = gamma;
        gamma = gamma_next;
        c_prev = c;
        c = c_next;
        s_prev = s;
        s = s_next;
    }
    Ok((
        x,
        tracker.finish(opts.max_iterations, opts.rtol, SolveStatus::MaxIterations),
    ))
}

/// Preconditioned conjugate gradients for SPD `op` and SPD `prec`.
pub fn pcg(
    op: &dyn LinearOperator,
    prec: &dyn LinearOperator,
    b: &[f64],
    opts: KrylovOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    check_dims(op, prec, b)?;
    let n = b.len();
    let mut tracker = Tracker::new();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = prec.apply_vec(&r);
    let mut rz = dot(&r, &z);
    let init = prec_norm(&z, &r, 1.0)?;
    tracker.history.push(init);
    if init == 0.0 {
        return Ok((x, tracker.finish(0, opts.rtol, SolveStatus::Converged)));
    }
    let target = opts.rtol * init;
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    for it in 1..=opts.max_iterations {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NonPositiveCurvature(pq));
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        prec.apply(&r, &mut z);
        let rz_next = dot(&r, &z);
        let res = prec_norm(&z, &r, init)?;
        tracker.history.push(res);
        if res <= target {
            return Ok((x, tracker.finish(it, opts.rtol, SolveStatus::Converged)));
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((
        x,
        tracker.finish(opts.max_iterations, opts.rtol, SolveStatus::MaxIterations),
    ))
}
