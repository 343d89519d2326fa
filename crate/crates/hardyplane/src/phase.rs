//! The autonomous (G, V) system obtained from the radial equation:
//!   G_t = F(G) - V,
//!   V_t = (q+1-p) V (gamma - sign(G)|G|^{1/(p-1)}),
//! with F(G) = (p-1)|G|^{p/(p-1)} - (N-p)G - mu.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::Params;
use crate::util::spow;

#[derive(Debug, Error, PartialEq)]
pub enum PhaseError {
    #[error("fixed point {0:?} does not exist for these parameters")]
    NoSuchFixedPoint(FixedPointKind),
    #[error("linearization at M0 is degenerate (gamma = 0 with p != 2)")]
    DegenerateLinearization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub g: f64,
    pub v: f64,
}

impl PhaseState {
    pub fn new(g: f64, v: f64) -> Self {
        PhaseState { g, v }
    }

    pub fn dist(&self, other: &PhaseState) -> f64 {
        ((self.g - other.g).powi(2) + (self.v - other.v).powi(2)).sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.g * self.g + self.v * self.v).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedPointKind {
    A1,
    A2,
    M0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Source,
    Sink,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub kind: FixedPointKind,
    pub location: PhaseState,
    pub eigen: Option<[EigenPair; 2]>,
    pub stability: Stability,
}

/// Both branches of the curve {V = F(G), F >= 0}, split at the minimizer
/// of F, plus the vertical nullcline {G = G_0} when M_0 exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nullclines {
    pub c1: Vec<PhaseState>,
    pub c2: Vec<PhaseState>,
    pub l_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    /// Sign of dE/dt along trajectories: -sign(D), 0 when D vanishes.
    pub drift_sign: i8,
}

/// F(G) = (p-1)|G|^{p/(p-1)} - (N-p)G - mu. Note F(|S|^{p-2}S) = phi(S).
pub fn f_of_g(pr: &Params, g: f64) -> f64 {
    (pr.p - 1.0) * g.abs().powf(pr.p / (pr.p - 1.0)) - (pr.n - pr.p) * g - pr.mu
}

/// F'(G) = p sign(G)|G|^{1/(p-1)} - (N-p).
pub fn f_prime(pr: &Params, g: f64) -> f64 {
    pr.p * spow(g, 1.0 / (pr.p - 1.0)) - (pr.n - pr.p)
}

pub fn vector_field(pr: &Params, st: &PhaseState) -> [f64; 2] {
    let s = spow(st.g, 1.0 / (pr.p - 1.0));
    [
        f_of_g(pr, st.g) - st.v,
        (pr.q + 1.0 - pr.p) * st.v * (pr.gamma() - s),
    ]
}

/// Central-difference Jacobian of the vector field, h = scale*(1+|g|+|v|).
pub fn fd_jacobian(pr: &Params, st: &PhaseState, h_scale: f64) -> [[f64; 2]; 2] {
    let h = h_scale * (1.0 + st.g.abs() + st.v.abs());
    let fg_p = vector_field(pr, &PhaseState::new(st.g + h, st.v));
    let fg_m = vector_field(pr, &PhaseState::new(st.g - h, st.v));
    let fv_p = vector_field(pr, &PhaseState::new(st.g, st.v + h));
    let fv_m = vector_field(pr, &PhaseState::new(st.g, st.v - h));
    [
        [
            (fg_p[0] - fg_m[0]) / (2.0 * h),
            (fv_p[0] - fv_m[0]) / (2.0 * h),
        ],
        [
            (fg_p[1] - fg_m[1]) / (2.0 * h),
            (fv_p[1] - fv_m[1]) / (2.0 * h),
        ],
    ]
}

/// Location of M_0 = (G_0, F(G_0)) with G_0 = |gamma|^{p-2}gamma; exists
/// iff F(G_0) > 0, i.e. phi(gamma) > 0.
pub fn m0_location(pr: &Params) -> Option<PhaseState> {
    let gamma = pr.gamma();
    let mut g0 = spow(gamma, pr.p - 1.0);
    // Polish so the powf round trip spow(g0, 1/(p-1)) recovers gamma to
    // the ulp; the V-component of the field at M_0 is proportional to the
    // recovery error.
    for _ in 0..3 {
        let s = spow(g0, 1.0 / (pr.p - 1.0));
        if s == gamma || s == 0.0 {
            break;
        }
        g0 += (gamma - s) * (pr.p - 1.0) * g0 / s;
    }
    let v0 = f_of_g(pr, g0);
    // Strict positivity up to the classification tolerance: at a gamma =
    // S_i boundary phi(gamma) = 0 and rounding noise must not spawn a
    // spurious M_0 on top of A_i.
    if v0 > 1e-9 * (1.0 + pr.mu.abs()) {
        Some(PhaseState::new(g0, v0))
    } else {
        None
    }
}

/// Eigenstructure at M_0 from
///   lambda^2 - (p*gamma - N + p) lambda - (q+1-p)/(p-1) |gamma|^{2-p} V_0 = 0,
/// with eigenvector (1, lambda_2) for lambda_1 and (1, lambda_1) for
/// lambda_2. At gamma = 0 the formula stays valid only for p = 2.
pub fn eigen_m0(pr: &Params) -> Result<[EigenPair; 2], PhaseError> {
    let m0 = m0_location(pr).ok_or(PhaseError::NoSuchFixedPoint(FixedPointKind::M0))?;
    let gamma = pr.gamma();
    if gamma == 0.0 && pr.p != 2.0 {
        return Err(PhaseError::DegenerateLinearization);
    }
    let b = pr.p * gamma - pr.n + pr.p;
    let coef = if pr.p == 2.0 {
        1.0
    } else {
        gamma.abs().powf(2.0 - pr.p)
    };
    let k = (pr.q + 1.0 - pr.p) / (pr.p - 1.0) * coef * m0.v;
    let disc = (b * b + 4.0 * k).sqrt();
    let l1 = 0.5 * (b - disc);
    let l2 = 0.5 * (b + disc);
    Ok([
        EigenPair {
            value: l1,
            vector: [1.0, l2],
        },
        EigenPair {
            value: l2,
            vector: [1.0, l1],
        },
    ])
}

/// Eigenstructure at A_i: rho_i = p S_i - N + p with eigenvector (1, 0),
/// eta_i = (q+1-p)(gamma - S_i) with eigenvector (1, m_i),
/// m_i = (q+1) S_i - (N + theta).
pub fn eigen_a(pr: &Params, which: FixedPointKind) -> Result<[EigenPair; 2], PhaseError> {
    let roots = pr.hardy_roots();
    let s = match which {
        FixedPointKind::A1 => roots.s1,
        FixedPointKind::A2 => roots.s2,
        FixedPointKind::M0 => return Err(PhaseError::NoSuchFixedPoint(FixedPointKind::M0)),
    }
    .ok_or(PhaseError::NoSuchFixedPoint(which))?;
    let rho = pr.p * s - pr.n + pr.p;
    let eta = (pr.q + 1.0 - pr.p) * (pr.gamma() - s);
    let m = (pr.q + 1.0) * s - (pr.n + pr.theta);
    Ok([
        EigenPair {
            value: rho,
            vector: [1.0, 0.0],
        },
        EigenPair {
            value: eta,
            vector: [1.0, m],
        },
    ])
}

fn stability_from(l1: f64, l2: f64) -> Stability {
    let tol = 1e-9;
    if l1.abs() <= tol || l2.abs() <= tol {
        Stability::Degenerate
    } else if l1 > 0.0 && l2 > 0.0 {
        Stability::Source
    } else if l1 < 0.0 && l2 < 0.0 {
        Stability::Sink
    } else {
        Stability::Saddle
    }
}

/// All fixed points with eigen-data. A_1, A_2 exist iff mu >= mu_0 (they
/// merge at mu = mu_0), M_0 iff phi(gamma) > 0.
pub fn fixed_points(pr: &Params) -> Vec<FixedPointInfo> {
    let mut out = Vec::new();
    let roots = pr.hardy_roots();
    for (kind, s) in [
        (FixedPointKind::A1, roots.s1),
        (FixedPointKind::A2, roots.s2),
    ] {
        if let Some(s) = s {
            let eigen = eigen_a(pr, kind).ok();
            let stab = eigen
                .map(|e| stability_from(e[0].value, e[1].value))
                .unwrap_or(Stability::Degenerate);
            out.push(FixedPointInfo {
                kind,
                location: PhaseState::new(spow(s, pr.p - 1.0), 0.0),
                eigen,
                stability: stab,
            });
        }
    }
    if let Some(loc) = m0_location(pr) {
        let eigen = eigen_m0(pr).ok();
        let stab = eigen
            .map(|e| stability_from(e[0].value, e[1].value))
            .unwrap_or(Stability::Degenerate);
        out.push(FixedPointInfo {
            kind: FixedPointKind::M0,
            location: loc,
            eigen,
            stability: stab,
        });
    }
    out
}

/// Sample the nullclines over [g_min, g_max] with `n` points per branch.
pub fn nullclines(pr: &Params, g_min: f64, g_max: f64, n: usize) -> Nullclines {
    let split = spow((pr.n - pr.p) / pr.p, pr.p - 1.0);
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for i in 0..n {
        let g = g_min + (g_max - g_min) * i as f64 / (n - 1) as f64;
        let f = f_of_g(pr, g);
        if f >= 0.0 {
            let st = PhaseState::new(g, f);
            if g >= split {
                c1.push(st);
            } else {
                c2.push(st);
            }
        }
    }
    Nullclines {
        c1,
        c2,
        l_g: m0_location(pr).map(|m| m.g),
    }
}

/// Energy in (X, Y) variables (X = r^gamma u, Y = G X^{p-1}):
///   E = (p-1)/p |Y|^{p/(p-1)} - gamma X Y
///       - (D|gamma|^{p-2}gamma + mu) X^p / p - X^{q+1}/(q+1).
/// Along the flow E_t = -D (|Y|^{(2-p)/(p-1)}Y - gamma X)
/// (Y - |gamma|^{p-2}gamma X^{p-1}), which has the sign of -D.
pub fn energy_xy(pr: &Params, x: f64, y: f64) -> f64 {
    let d = pr.derived();
    (pr.p - 1.0) / pr.p * y.abs().powf(pr.p / (pr.p - 1.0))
        - d.gamma * x * y
        - (d.d * spow(d.gamma, pr.p - 1.0) + pr.mu) * x.powf(pr.p) / pr.p
        - x.powf(pr.q + 1.0) / (pr.q + 1.0)
}

/// Same energy expressed in (G, V):
///   E = V^{p/(q+1-p)} ((F(G) + D(G - |gamma|^{p-2}gamma))/p - V/(q+1)),
/// the exact image of `energy_xy` under V = X^{q+1-p}, Y = G X^{p-1};
/// requires V > 0. When D = 0 this reduces to
/// V^{p/(q+1-p)}(F(G)/p - V/(q+1)), the first integral of the critical case.
pub fn energy_gv(pr: &Params, st: &PhaseState) -> EnergyValue {
    let d = pr.derived();
    let value = st.v.powf(pr.p / (pr.q + 1.0 - pr.p))
        * ((f_of_g(pr, st.g) + d.d * (st.g - spow(d.gamma, pr.p - 1.0))) / pr.p
            - st.v / (pr.q + 1.0));
    let drift_sign = if d.d.abs() <= 1e-9 {
        0
    } else if d.d > 0.0 {
        -1
    } else {
        1
    };
    EnergyValue { value, drift_sign }
}

/// (G, V) from (X, Y): G = Y/X^{p-1}, V = X^{q+1-p}. Requires X > 0.
pub fn gv_from_xy(pr: &Params, x: f64, y: f64) -> PhaseState {
    PhaseState::new(y / x.powf(pr.p - 1.0), x.powf(pr.q + 1.0 - pr.p))
}

/// (X, Y) from (G, V): X = V^{1/(q+1-p)}, Y = G X^{p-1}. Requires V > 0.
pub fn xy_from_gv(pr: &Params, st: &PhaseState) -> (f64, f64) {
    let x = st.v.powf(1.0 / (pr.q + 1.0 - pr.p));
    (x, st.g * x.powf(pr.p - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn h1_params() -> Params {
        Params::new(4.0, 2.0, 2.0, -0.75, 0.0).unwrap()
    }

    #[test]
    fn f_matches_phi_on_substitution() {
        let pr = Params::new(5.0, 3.0, 4.0, -0.4, 1.0).unwrap();
        for s in [-2.0, -0.3, 0.0, 0.7, 1.9] {
            let g = spow(s, pr.p - 1.0);
            assert_abs_diff_eq!(f_of_g(&pr, g), pr.phi(s), epsilon = 1e-12);
        }
    }

    #[test]
    fn m0_example() {
        let pr = h1_params();
        let m0 = m0_location(&pr).unwrap();
        assert_abs_diff_eq!(m0.g, 2.0);
        assert_abs_diff_eq!(m0.v, 0.75);
        let field = vector_field(&pr, &m0);
        assert!(field[0].abs() < 1e-14 && field[1].abs() < 1e-14);
    }

    #[test]
    fn m0_absent_in_h3() {
        let pr = Params::new(4.0, 2.0, 3.0, -0.75, 0.0).unwrap();
        assert!(m0_location(&pr).is_none());
    }

    #[test]
    fn m0_at_negative_mu_gamma_zero() {
        let pr = Params::new(5.0, 3.0, 4.0, -1.0, -3.0).unwrap();
        let m0 = m0_location(&pr).unwrap();
        assert_abs_diff_eq!(m0.g, 0.0);
        assert_abs_diff_eq!(m0.v, 1.0);
        assert_eq!(eigen_m0(&pr), Err(PhaseError::DegenerateLinearization));
    }

    #[test]
    fn eigen_m0_example() {
        // N=4, p=2, q=2, mu=-0.75: lambda = 1 -+ sqrt(7)/2.
        let e = eigen_m0(&h1_params()).unwrap();
        let r = 7.0f64.sqrt() / 2.0;
        assert_abs_diff_eq!(e[0].value, 1.0 - r, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].value, 1.0 + r, epsilon = 1e-12);
        assert_abs_diff_eq!(e[0].vector[1], e[1].value, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].vector[1], e[0].value, epsilon = 1e-12);
    }

    #[test]
    fn eigen_a_example() {
        let pr = h1_params();
        let e1 = eigen_a(&pr, FixedPointKind::A1).unwrap();
        assert_abs_diff_eq!(e1[0].value, 1.0, epsilon = 1e-12); // rho_1
        assert_abs_diff_eq!(e1[1].value, 0.5, epsilon = 1e-12); // eta_1
        let e2 = eigen_a(&pr, FixedPointKind::A2).unwrap();
        assert_abs_diff_eq!(e2[1].vector[1], -2.5, epsilon = 1e-12); // m_2
    }

    #[test]
    fn eigen_consistent_with_fd_jacobian() {
        for pr in [
            h1_params(),
            Params::new(4.0, 2.0, 3.0, -0.75, -3.0).unwrap(),
            Params::new(5.0, 2.5, 3.0, -0.2, 0.5).unwrap(),
        ] {
            for fp in fixed_points(&pr) {
                let Some(eigen) = fp.eigen else { continue };
                let j = fd_jacobian(&pr, &fp.location, 1e-6);
                for e in eigen {
                    let w = e.vector;
                    let jw = [
                        j[0][0] * w[0] + j[0][1] * w[1],
                        j[1][0] * w[0] + j[1][1] * w[1],
                    ];
                    let res = ((jw[0] - e.value * w[0]).powi(2) + (jw[1] - e.value * w[1]).powi(2))
                        .sqrt();
                    let scale = (w[0] * w[0] + w[1] * w[1]).sqrt() * (1.0 + e.value.abs());
                    assert!(
                        res / scale < 1e-9,
                        "{:?} {:?}: residual {}",
                        fp.kind,
                        e,
                        res
                    );
                }
            }
        }
    }

    #[test]
    fn nullcline_split() {
        let pr = h1_params();
        let nc = nullclines(&pr, -3.0, 4.0, 400);
        // Roots at G = 1.5 and 0.5: C1 lies at g >= 1.5, C2 at g <= 0.5.
        assert!(nc.c1.iter().all(|s| s.g >= 1.5 - 1e-9));
        assert!(nc.c2.iter().all(|s| s.g <= 0.5 + 1e-9));
        assert!(nc.c1.iter().all(|s| s.v >= 0.0));
        assert_abs_diff_eq!(nc.l_g.unwrap(), 2.0);
    }

    proptest! {
        #[test]
        fn xy_gv_roundtrip(g in -3.0f64..3.0, v in 0.01f64..20.0) {
            let pr = Params::new(4.6, 2.3, 3.1, -0.5, 0.7).unwrap();
            let st = PhaseState::new(g, v);
            let (x, y) = xy_from_gv(&pr, &st);
            let back = gv_from_xy(&pr, x, y);
            prop_assert!((back.g - g).abs() <= 1e-12 * (1.0 + g.abs()));
            prop_assert!((back.v - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }

        #[test]
        fn energies_agree(g in -3.0f64..3.0, v in 0.01f64..20.0) {
            let pr = Params::new(4.6, 2.3, 3.1, -0.5, 0.7).unwrap();
            let st = PhaseState::new(g, v);
            let (x, y) = xy_from_gv(&pr, &st);
            let e1 = energy_gv(&pr, &st).value;
            let e2 = energy_xy(&pr, x, y);
            prop_assert!((e1 - e2).abs() <= 1e-9 * (1.0 + e1.abs().max(e2.abs())),
                "e_gv = {e1}, e_xy = {e2}");
        }

        #[test]
        fn energy_drift_sign(g in -2.0f64..3.0, v in 0.05f64..10.0) {
            // D < 0 here, so E must be nondecreasing along the flow.
            let pr = Params::new(4.0, 2.0, 2.0, -0.75, 0.0).unwrap();
            prop_assume!(pr.derived().d < -1e-6);
            let st = PhaseState::new(g, v);
            let f = vector_field(&pr, &st);
            let h = 1e-7;
            let ep = energy_gv(&pr, &PhaseState::new(g + h * f[0], v + h * f[1])).value;
            let em = energy_gv(&pr, &PhaseState::new(g - h * f[0], v - h * f[1])).value;
            let de = (ep - em) / (2.0 * h);
            let scale = 1.0 + ep.abs().max(em.abs());
            prop_assert!(de >= -1e-5 * scale, "dE/dt = {de}");
        }
    }
}
