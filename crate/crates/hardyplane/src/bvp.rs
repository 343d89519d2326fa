//! Two-point Dirichlet problems on annuli, solved by shooting in ln r on
//! the first-order system (u, w = |u'|^{p-2}u'), plus the weak comparison
//! check between solutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::Params;
use crate::profiles::{RadialSample, RadialSolution};
use crate::util::spow;

#[derive(Debug, Error)]
pub enum BvpError {
    #[error("invalid annulus problem: {0}")]
    InvalidProblem(String),
    #[error("no bracketing slope pair found in the scanned range [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("every shot vanished inside the annulus; data is inadmissible")]
    InteriorVanishing,
    #[error("solutions live on different grids")]
    MismatchedDomains,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusProblem {
    pub r1: f64,
    pub r2: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub params: Params,
}

impl AnnulusProblem {
    pub fn new(r1: f64, r2: f64, ell1: f64, ell2: f64, params: Params) -> Result<Self, BvpError> {
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(BvpError::InvalidProblem(format!(
                "need 0 < r1 < r2, got ({r1}, {r2})"
            )));
        }
        if !(ell1 >= 0.0 && ell2 >= 0.0 && ell1 + ell2 > 0.0) {
            return Err(BvpError::InvalidProblem(format!(
                "boundary values must be nonnegative and not both zero, got ({ell1}, {ell2})"
            )));
        }
        Ok(AnnulusProblem {
            r1,
            r2,
            ell1,
            ell2,
            params,
        })
    }
}

/// Outcome of a single shot across the annulus.
enum Shot {
    /// Vanished strictly inside (too low).
    Low,
    /// Escaped upward before reaching r2 (too high).
    High,
    Val(f64),
}

/// In s = ln r: u_s = r (sign w)|w|^{1/(p-1)},
/// w_s = mu u^{p-1} r^{1-p} + r^{theta+1} u^q - (N-1) w.
fn rhs(pr: &Params, s: f64, y: [f64; 2]) -> [f64; 2] {
    let r = s.exp();
    let u = y[0].max(0.0);
    [
        r * spow(y[1], 1.0 / (pr.p - 1.0)),
        pr.mu * u.powf(pr.p - 1.0) * r.powf(1.0 - pr.p) + r.powf(pr.theta + 1.0) * u.powf(pr.q)
            - (pr.n - 1.0) * y[1],
    ]
}

fn shoot(
    prob: &AnnulusProblem,
    slope: f64,
    n: usize,
    record: Option<&mut Vec<RadialSample>>,
) -> Shot {
    let pr = &prob.params;
    let (s1, s2) = (prob.r1.ln(), prob.r2.ln());
    let h = (s2 - s1) / (n - 1) as f64;
    let u_cap = 1e8 * (1.0 + prob.ell1 + prob.ell2);
    let mut y = [prob.ell1, spow(slope, pr.p - 1.0)];
    let mut out = record;
    if let Some(v) = out.as_deref_mut() {
        v.clear();
        v.push(RadialSample {
            r: prob.r1,
            u: y[0],
            du: slope,
        });
    }
    for i in 1..n {
        let s = s1 + (i - 1) as f64 * h;
        let k1 = rhs(pr, s, y);
        let k2 = rhs(
            pr,
            s + 0.5 * h,
            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
        );
        let k3 = rhs(
            pr,
            s + 0.5 * h,
            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
        );
        let k4 = rhs(pr, s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        let interior = i + 1 < n;
        if y[0] <= 0.0 && interior {
            return Shot::Low;
        }
        if y[0] > u_cap || !y[0].is_finite() || !y[1].is_finite() {
            return Shot::High;
        }
        if let Some(v) = out.as_deref_mut() {
            let r = (s + h).exp();
            v.push(RadialSample {
                r,
                u: y[0],
                du: spow(y[1], 1.0 / (pr.p - 1.0)),
            });
        }
    }
    Shot::Val(y[0])
}

fn grid_size(prob: &AnnulusProblem) -> usize {
    let span = (prob.r2 / prob.r1).ln();
    ((span / 2.5e-4).ceil() as usize).clamp(2000, 80_000)
}

/// Shooting solver: scan a geometric grid of 64 candidate slopes spanning
/// [-1e3, 1e3]*(1+ell1)/r1, bracket the boundary miss u(r2) - ell2, and
/// bisect until |u(r2) - ell2| <= 1e-9 (1+ell2). Shots that vanish
/// strictly inside count as low, shots that escape upward as high.
pub fn solve_annulus(prob: &AnnulusProblem) -> Result<RadialSolution, BvpError> {
    let scale = 1e3 * (1.0 + prob.ell1) / prob.r1;
    let mut candidates: Vec<f64> = Vec::with_capacity(64);
    for i in 0..32 {
        // Magnitudes geometric over six decades, negatives descending.
        candidates.push(-scale * 10f64.powf(-6.0 * i as f64 / 31.0));
    }
    for i in 0..32 {
        candidates.push(scale * 10f64.powf(6.0 * (i as f64 / 31.0 - 1.0)));
    }
    let n_scan = grid_size(prob) / 8;
    let miss = |slope: f64, n: usize| -> Option<f64> {
        match shoot(prob, slope, n, None) {
            Shot::Low => Some(f64::NEG_INFINITY),
            Shot::High => Some(f64::INFINITY),
            Shot::Val(u) => Some(u - prob.ell2),
        }
    };
    let fs: Vec<f64> = candidates
        .iter()
        .map(|&c| miss(c, n_scan).unwrap())
        .collect();
    if fs.iter().all(|f| *f == f64::NEG_INFINITY) {
        return Err(BvpError::InteriorVanishing);
    }
    let mut bracket = None;
    for i in 0..candidates.len() - 1 {
        if fs[i] <= 0.0 && fs[i + 1] >= 0.0 || fs[i] >= 0.0 && fs[i + 1] <= 0.0 {
            bracket = Some((candidates[i], fs[i], candidates[i + 1]));
            break;
        }
    }
    let (mut lo, f_lo, mut hi) = bracket.ok_or(BvpError::NoBracket {
        lo: -scale,
        hi: scale,
    })?;
    // Orient so that lo is the deficient side.
    if f_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let tol = 1e-9 * (1.0 + prob.ell2);
    let mut best = 0.5 * (lo + hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        best = mid;
        let f = miss(mid, n_scan).unwrap();
        if f.is_finite() && f.abs() <= tol {
            break;
        }
        if f <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut samples = Vec::new();
    match shoot(prob, best, grid_size(prob), Some(&mut samples)) {
        Shot::Val(u) if (u - prob.ell2).abs() <= 10.0 * tol => Ok(RadialSolution { samples }),
        Shot::Val(_) | Shot::High => Err(BvpError::NoBracket { lo, hi }),
        Shot::Low => Err(BvpError::InteriorVanishing),
    }
}

/// Weak comparison: returns whether u <= v + 1e-9 at every shared sample
/// point. The solutions must live on the same grid.
pub fn comparison_check(u: &RadialSolution, v: &RadialSolution) -> Result<bool, BvpError> {
    if u.samples.len() != v.samples.len() {
        return Err(BvpError::MismatchedDomains);
    }
    for (a, b) in u.samples.iter().zip(&v.samples) {
        if (a.r - b.r).abs() > 1e-12 * (1.0 + a.r.abs()) {
            return Err(BvpError::MismatchedDomains);
        }
    }
    Ok(u.samples
        .iter()
        .zip(&v.samples)
        .all(|(a, b)| a.u <= b.u + 1e-9))
}
