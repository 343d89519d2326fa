//! Parameters of the radial equation and everything derived from them
//! algebraically: the Hardy polynomial, its roots, the scaling exponent,
//! critical exponents in q, and the case classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{rel_eq, spow};

/// Relative tolerance used when deciding whether parameters sit on a
/// boundary between cases (gamma = S_i, mu = mu_0, gamma = 0, ...).
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("require 1 < p < N, got p = {p}, N = {n}")]
    BadP { p: f64, n: f64 },
    #[error("require q > p - 1, got q = {q}, p = {p}")]
    BadQ { q: f64, p: f64 },
    #[error("parameters must be finite")]
    NonFinite,
}

/// Problem data (N, p, q, mu, theta) for
///   -(|u'|^{p-2}u')' - (N-1)/r |u'|^{p-2}u' + mu u^{p-1}/r^p + r^theta u^q = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    pub theta: f64,
}

/// Quantities derived once per parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// gamma = (p + theta)/(q + 1 - p), the scaling exponent.
    pub gamma: f64,
    /// mu_0 = -((N-p)/p)^p, the Hardy threshold.
    pub mu0: f64,
    /// D = N - p - p*gamma; vanishes exactly at q = q_s.
    pub d: f64,
    /// S* = (N-p)/p, the minimizer of the Hardy polynomial.
    pub s_star: f64,
}

/// Roots S_2 <= S_1 of phi(S) = (p-1)|S|^p - (N-p)|S|^{p-2}S - mu.
/// Both present iff mu >= mu_0; they coincide at mu = mu_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyRoots {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    H1,
    H2,
    H3,
    H4,
    H5,
}

/// Classification plus boundary flags. Boundaries are flagged, never
/// silently snapped; the `case` value places gamma = S_i inside H3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: Case,
    pub mu_eq_mu0: bool,
    pub gamma_eq_s1: bool,
    pub gamma_eq_s2: bool,
    pub gamma_zero: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    /// q_1 = p - 1 + (p+theta)/S_1, present iff the roots exist.
    pub q1: Option<f64>,
    /// q_2 = p - 1 + (p+theta)/S_2, present iff the roots exist and S_2 != 0.
    pub q2: Option<f64>,
    /// Sobolev-type exponent q_s = (N(p-1) + p + p*theta)/(N-p).
    pub q_s: f64,
    /// q_c = (p-1)(N+theta)/(N-p).
    pub q_c: f64,
}

impl Params {
    pub fn new(n: f64, p: f64, q: f64, mu: f64, theta: f64) -> Result<Self, ParamError> {
        if ![n, p, q, mu, theta].iter().all(|x| x.is_finite()) {
            return Err(ParamError::NonFinite);
        }
        if !(p > 1.0 && p < n) {
            return Err(ParamError::BadP { p, n });
        }
        if !(q > p - 1.0) {
            return Err(ParamError::BadQ { q, p });
        }
        Ok(Params { n, p, q, mu, theta })
    }

    /// mu_0 = -((N-p)/p)^p.
    pub fn mu0(&self) -> f64 {
        -((self.n - self.p) / self.p).powf(self.p)
    }

    /// phi(S) = (p-1)|S|^p - (N-p)|S|^{p-2}S - mu.
    pub fn phi(&self, s: f64) -> f64 {
        (self.p - 1.0) * s.abs().powf(self.p) - (self.n - self.p) * spow(s, self.p - 1.0) - self.mu
    }

    /// phi'(S) = (p-1)|S|^{p-2} (pS - (N-p)).
    pub fn phi_prime(&self, s: f64) -> f64 {
        (self.p - 1.0) * s.abs().powf(self.p - 2.0) * (self.p * s - (self.n - self.p))
    }

    /// gamma = (p + theta)/(q + 1 - p).
    pub fn gamma(&self) -> f64 {
        (self.p + self.theta) / (self.q + 1.0 - self.p)
    }

    pub fn derived(&self) -> DerivedParams {
        let gamma = self.gamma();
        DerivedParams {
            gamma,
            mu0: self.mu0(),
            d: self.n - self.p - self.p * gamma,
            s_star: (self.n - self.p) / self.p,
        }
    }

    /// Roots of phi. phi is strictly decreasing on (-inf, S*] and strictly
    /// increasing on [S*, inf) with minimum mu_0 - mu, so each side holds at
    /// most one root; bracketed bisection plus a Newton polish.
    pub fn hardy_roots(&self) -> HardyRoots {
        let mu0 = self.mu0();
        if rel_eq(self.mu, mu0, BOUNDARY_TOL) {
            let s = (self.n - self.p) / self.p;
            return HardyRoots {
                s1: Some(s),
                s2: Some(s),
            };
        }
        if self.mu < mu0 {
            return HardyRoots { s1: None, s2: None };
        }
        let s_star = (self.n - self.p) / self.p;
        let s1 = self.one_root(s_star, 1.0);
        let s2 = self.one_root(s_star, -1.0);
        HardyRoots {
            s1: Some(s1),
            s2: Some(s2),
        }
    }

    /// Root on one side of the minimizer; `dir` = +1 for S_1, -1 for S_2.
    fn one_root(&self, s_star: f64, dir: f64) -> f64 {
        // Expand outward until phi changes sign.
        let mut step = 1.0;
        let mut outer = s_star + dir * step;
        while self.phi(outer) <= 0.0 {
            step *= 2.0;
            outer = s_star + dir * step;
        }
        let (mut lo, mut hi) = if dir > 0.0 {
            (s_star, outer)
        } else {
            (outer, s_star)
        };
        // phi < 0 strictly between the roots, > 0 outside.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let f = self.phi(mid);
            // Keep the root bracketed: negative side is toward s_star.
            if (f > 0.0) == (dir > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut s = 0.5 * (lo + hi);
        // Newton polish; the derivative is singular at 0 for p < 2, but the
        // bisection result is already at machine precision there.
        for _ in 0..4 {
            let d = self.phi_prime(s);
            if !d.is_finite() || d == 0.0 {
                break;
            }
            let next = s - self.phi(s) / d;
            if next.is_finite() && next > lo - 1.0 && next < hi + 1.0 {
                if self.phi(next).abs() < self.phi(s).abs() {
                    s = next;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        s
    }

    /// a* = phi(gamma)^{1/(q+1-p)}, defined when phi(gamma) > 0.
    pub fn a_star(&self) -> Option<f64> {
        let v = self.phi(self.gamma());
        if v > 0.0 {
            Some(v.powf(1.0 / (self.q + 1.0 - self.p)))
        } else {
            None
        }
    }

    pub fn classify(&self) -> CaseLabel {
        let mu0 = self.mu0();
        let gamma = self.gamma();
        let s_star = (self.n - self.p) / self.p;
        let mu_eq_mu0 = rel_eq(self.mu, mu0, BOUNDARY_TOL);
        let gamma_zero = rel_eq(self.p + self.theta, 0.0, BOUNDARY_TOL);
        if mu_eq_mu0 {
            let at_star = rel_eq(gamma, s_star, BOUNDARY_TOL);
            let case = if at_star {
                Case::H4
            } else if gamma > s_star {
                Case::H1
            } else {
                Case::H2
            };
            return CaseLabel {
                case,
                mu_eq_mu0,
                gamma_eq_s1: at_star,
                gamma_eq_s2: at_star,
                gamma_zero,
            };
        }
        if self.mu < mu0 {
            return CaseLabel {
                case: Case::H5,
                mu_eq_mu0,
                gamma_eq_s1: false,
                gamma_eq_s2: false,
                gamma_zero,
            };
        }
        let roots = self.hardy_roots();
        let (s1, s2) = (roots.s1.unwrap(), roots.s2.unwrap());
        let gamma_eq_s1 = rel_eq(gamma, s1, BOUNDARY_TOL);
        let gamma_eq_s2 = rel_eq(gamma, s2, BOUNDARY_TOL);
        let case = if gamma > s1 && !gamma_eq_s1 {
            Case::H1
        } else if gamma < s2 && !gamma_eq_s2 {
            Case::H2
        } else {
            Case::H3
        };
        CaseLabel {
            case,
            mu_eq_mu0,
            gamma_eq_s1,
            gamma_eq_s2,
            gamma_zero,
        }
    }

    pub fn critical_exponents(&self) -> CriticalExponents {
        let roots = self.hardy_roots();
        let pt = self.p + self.theta;
        let q1 = roots.s1.map(|s1| self.p - 1.0 + pt / s1);
        let q2 = roots.s2.and_then(|s2| {
            if s2.abs() > 1e-300 {
                Some(self.p - 1.0 + pt / s2)
            } else {
                None
            }
        });
        CriticalExponents {
            q1,
            q2,
            q_s: (self.n * (self.p - 1.0) + self.p + self.p * self.theta) / (self.n - self.p),
            q_c: (self.p - 1.0) * (self.n + self.theta) / (self.n - self.p),
        }
    }

    /// Same classification expressed through the critical exponents in q,
    /// split on the sign of p + theta.
    pub fn classify_by_q(&self) -> Case {
        let mu0 = self.mu0();
        let crit = self.critical_exponents();
        let q = self.q;
        if rel_eq(self.mu, mu0, BOUNDARY_TOL) {
            return if rel_eq(q, crit.q_s, BOUNDARY_TOL) {
                Case::H4
            } else if q < crit.q_s {
                Case::H1
            } else {
                Case::H2
            };
        }
        if self.mu < mu0 {
            return Case::H5;
        }
        let pt = self.p + self.theta;
        if rel_eq(pt, 0.0, BOUNDARY_TOL) {
            // gamma = 0: between the roots iff S_2 <= 0, i.e. mu >= 0.
            return if self.mu >= 0.0 { Case::H3 } else { Case::H2 };
        }
        if pt > 0.0 {
            let q1 = crit.q1.unwrap();
            if self.mu >= 0.0 {
                // S_2 <= 0 < gamma, so H2 cannot occur.
                if q > q1 && !rel_eq(q, q1, BOUNDARY_TOL) {
                    Case::H3
                } else if rel_eq(q, q1, BOUNDARY_TOL) {
                    Case::H3
                } else {
                    Case::H1
                }
            } else {
                let q2 = crit.q2.unwrap();
                if q < q1 && !rel_eq(q, q1, BOUNDARY_TOL) {
                    Case::H1
                } else if q > q2 && !rel_eq(q, q2, BOUNDARY_TOL) {
                    Case::H2
                } else {
                    Case::H3
                }
            }
        } else {
            // gamma < 0 <= S_1 always, so H1 cannot occur; for mu <= 0 also
            // S_2 >= 0 > gamma and the case is H2.
            if self.mu > 0.0 {
                let q2 = crit.q2.unwrap();
                if q > q2 || rel_eq(q, q2, BOUNDARY_TOL) {
                    Case::H3
                } else {
                    Case::H2
                }
            } else {
                Case::H2
            }
        }
    }
}
