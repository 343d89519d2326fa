//! Numerical integration of the (G, V) system: adaptive embedded
//! Runge-Kutta 4(5), stop-event detection, separatrix shooting from the
//! fixed points, and the case-by-case trajectory census.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{Case, Params};
use crate::phase::{
    self, eigen_a, eigen_m0, fixed_points, m0_location, vector_field, FixedPointInfo,
    FixedPointKind, PhaseState,
};
use crate::util::spow;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Phase(#[from] phase::PhaseError),
    #[error("seed direction has no admissible side (eigenvector slope vanishes)")]
    NoAdmissibleSide,
    #[error("halved seed offset changes the stop event: {0:?} vs {1:?}")]
    SeedSensitive(StopEvent, StopEvent),
    #[error("tracing is not implemented for this configuration: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Length of the integration window in t.
    pub t_span: f64,
    pub v_max: f64,
    pub g_max: f64,
    /// Radius for fixed-point capture.
    pub fp_tol: f64,
    /// Scale of the seed offset used by `shoot_manifold`.
    pub seed_eps: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_step: 0.1,
            t_span: 60.0,
            v_max: 1e12,
            g_max: 1e12,
            fp_tol: 1e-6,
            seed_eps: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(&self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopEvent {
    /// Entered and stayed inside the capture ball of a fixed point.
    ReachedFixedPoint { kind: FixedPointKind },
    /// V crossed the blow-up threshold (finite-time blow-up of u).
    BlowupV,
    /// G crossed the negative threshold with V still moderate.
    GToMinusInf,
    /// G crossed the positive threshold while V decays to zero.
    GToPlusInfVToZero,
    /// Integration window exhausted without any other event.
    HitTimeHorizon,
    /// Entered the non-Lipschitz point (0, |mu|), p > 2; continuation
    /// through it is not asserted.
    HitSingularPoint,
    /// Step-size underflow persisted; result truncated.
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajLabel {
    T1,
    T2,
    T3,
    T4,
    T5,
    Theta1,
    Theta2,
    ThetaPrime,
    ThetaSecond,
}

/// One integrated orbit. Samples are ordered by increasing t regardless of
/// the integration direction; `stop` describes the end reached in the
/// integration direction (the last sample for Forward, the first for
/// Backward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub direction: Direction,
    pub samples: Vec<(f64, PhaseState)>,
    pub stop: StopEvent,
    pub label: Option<TrajLabel>,
}

impl Trajectory {
    /// Sample at the stop end (in the integration direction).
    pub fn stop_sample(&self) -> (f64, PhaseState) {
        match self.direction {
            Direction::Forward => *self.samples.last().unwrap(),
            Direction::Backward => *self.samples.first().unwrap(),
        }
    }

    /// Sample at the seed end.
    pub fn start_sample(&self) -> (f64, PhaseState) {
        match self.direction {
            Direction::Forward => *self.samples.first().unwrap(),
            Direction::Backward => *self.samples.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    R1,
    R2,
    R3,
    R4,
    R5,
    Rp1,
    Rp2,
    Rp3,
    Rp4,
    J1,
    J2,
    J3,
    J4,
}

/// The non-Lipschitz point of the field for p > 2: (0, |mu|), mu < 0.
pub fn singular_point(pr: &Params) -> Option<PhaseState> {
    if pr.p > 2.0 && pr.mu < 0.0 {
        Some(PhaseState::new(0.0, -pr.mu))
    } else {
        None
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step of size h from `y` for the field `f`; returns the
/// fifth-order solution and the embedded error estimate per component.
fn dp_step<F: Fn(&PhaseState) -> [f64; 2]>(
    f: &F,
    y: &PhaseState,
    h: f64,
) -> (PhaseState, [f64; 2]) {
    let mut k = [[0.0f64; 2]; 7];
    k[0] = f(y);
    for i in 0..6 {
        let mut g = y.g;
        let mut v = y.v;
        for (j, kj) in k.iter().enumerate().take(i + 1) {
            g += h * A[i][j] * kj[0];
            v += h * A[i][j] * kj[1];
        }
        k[i + 1] = f(&PhaseState::new(g, v));
    }
    let mut y5 = [y.g, y.v];
    let mut err = [0.0f64; 2];
    for (i, ki) in k.iter().enumerate() {
        y5[0] += h * B5[i] * ki[0];
        y5[1] += h * B5[i] * ki[1];
        err[0] += h * (B5[i] - B4[i]) * ki[0];
        err[1] += h * (B5[i] - B4[i]) * ki[1];
    }
    (PhaseState::new(y5[0], y5[1]), err)
}

struct Target {
    state: PhaseState,
    event: StopEvent,
    armed: bool,
}

/// Integrate from `start` at time `t0` over a window of `ctl.t_span`.
pub fn integrate(
    pr: &Params,
    start: PhaseState,
    t0: f64,
    direction: Direction,
    ctl: &Controls,
) -> Trajectory {
    let dir = direction.sign();
    let field = |st: &PhaseState| {
        let f = vector_field(pr, st);
        [dir * f[0], dir * f[1]]
    };
    let arm_radius = 100.0 * ctl.fp_tol;
    let mut targets: Vec<Target> = fixed_points(pr)
        .iter()
        .map(|fp: &FixedPointInfo| Target {
            state: fp.location,
            event: StopEvent::ReachedFixedPoint { kind: fp.kind },
            armed: start.dist(&fp.location) > arm_radius,
        })
        .collect();
    if let Some(sp) = singular_point(pr) {
        // gamma = 0 makes (0,|mu|) a fixed point (M0); the singular event
        // takes precedence there since the linearization is degenerate.
        targets.retain(|tg| tg.state.dist(&sp) > 1e-12);
        targets.push(Target {
            state: sp,
            event: StopEvent::HitSingularPoint,
            armed: start.dist(&sp) > arm_radius,
        });
    }

    let mut samples = vec![(0.0f64, start)];
    let mut y = start;
    let mut s = 0.0f64; // internal time, runs forward
    let f0 = field(&y);
    let mut h = (0.01 / (1.0 + (f0[0].powi(2) + f0[1].powi(2)).sqrt())).min(ctl.max_step);
    let mut stop = StopEvent::HitTimeHorizon;
    // (target index, internal time of entry) while confirming a capture.
    let mut confirming: Option<(usize, f64)> = None;
    let confirm_span = 1.0;
    let mut underflows = 0usize;
    let max_steps = 4_000_000usize;

    for _ in 0..max_steps {
        if s >= ctl.t_span {
            stop = StopEvent::HitTimeHorizon;
            break;
        }
        h = h.min(ctl.max_step).min(ctl.t_span - s + 1e-14);
        let (y_new, err) = dp_step(&field, &y, h);
        let scale0 = ctl.abs_tol + ctl.rel_tol * y.g.abs().max(y_new.g.abs());
        let scale1 = ctl.abs_tol + ctl.rel_tol * y.v.abs().max(y_new.v.abs());
        let e = (err[0] / scale0).abs().max((err[1] / scale1).abs());
        let h_floor = 1e-13 * (1.0 + s.abs());
        let accept = e <= 1.0 || h <= h_floor;
        if h <= h_floor {
            underflows += 1;
            if underflows > 5000 {
                stop = StopEvent::Aborted;
                break;
            }
        }
        if accept {
            // V = 0 is invariant; a negative overshoot is pure numerics.
            let y_new = PhaseState::new(y_new.g, y_new.v.max(0.0));
            let h_used = h;
            let prev = y;
            y = y_new;
            s += h_used;
            samples.push((s, y));

            if y.v >= ctl.v_max || y.g.abs() >= ctl.g_max {
                let (s_hit, y_hit) = refine_crossing(&field, &prev, s - h_used, h_used, ctl);
                samples.pop();
                samples.push((s_hit, y_hit));
                stop = if y_hit.v >= ctl.v_max * 0.5 {
                    StopEvent::BlowupV
                } else if y_hit.g <= -ctl.g_max * 0.5 {
                    StopEvent::GToMinusInf
                } else {
                    StopEvent::GToPlusInfVToZero
                };
                break;
            }

            for tg in targets.iter_mut() {
                if !tg.armed && y.dist(&tg.state) > arm_radius {
                    tg.armed = true;
                }
            }
            match confirming {
                Some((ti, s_in)) => {
                    let d = y.dist(&targets[ti].state);
                    if d > 10.0 * ctl.fp_tol {
                        confirming = None;
                    } else if s - s_in >= confirm_span {
                        stop = targets[ti].event;
                        break;
                    }
                }
                None => {
                    for (ti, tg) in targets.iter().enumerate() {
                        if tg.armed && y.dist(&tg.state) < ctl.fp_tol {
                            confirming = Some((ti, s));
                            break;
                        }
                    }
                }
            }
        }
        let factor = if e > 0.0 { 0.9 * e.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        h = h.max(h_floor);
    }

    // Map internal time to physical t and order samples by increasing t.
    let mut out: Vec<(f64, PhaseState)> = samples
        .into_iter()
        .map(|(si, yi)| (t0 + dir * si, yi))
        .collect();
    if matches!(direction, Direction::Backward) {
        out.reverse();
    }
    Trajectory {
        direction,
        samples: out,
        stop,
        label: None,
    }
}

/// Locate the threshold crossing inside an accepted step by bisection on
/// the step fraction.
fn refine_crossing<F: Fn(&PhaseState) -> [f64; 2]>(
    f: &F,
    prev: &PhaseState,
    s_prev: f64,
    h: f64,
    ctl: &Controls,
) -> (f64, PhaseState) {
    let over = |st: &PhaseState| st.v >= ctl.v_max || st.g.abs() >= ctl.g_max;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut y_hi = dp_step(f, prev, h).0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let y_mid = dp_step(f, prev, mid * h).0;
        if over(&y_mid) {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    (s_prev + hi * h, y_hi)
}

/// Which separatrix to shoot: a fixed point, one of its eigendirections
/// (index into the `eigen` array), and a side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootSpec {
    pub from: FixedPointKind,
    pub eigen_index: usize,
    pub side: f64,
    pub direction: Direction,
}

/// Seed on the eigendirection at distance eps*(1+|location|) and
/// integrate. The run is repeated with the offset halved; a change in the
/// resulting stop event is reported as an error.
pub fn shoot_manifold(
    pr: &Params,
    spec: &ShootSpec,
    ctl: &Controls,
) -> Result<Trajectory, FlowError> {
    let (loc, eigen) = match spec.from {
        FixedPointKind::M0 => {
            let loc =
                m0_location(pr).ok_or(phase::PhaseError::NoSuchFixedPoint(FixedPointKind::M0))?;
            (loc, eigen_m0(pr)?)
        }
        k => {
            let e = eigen_a(pr, k)?;
            let roots = pr.hardy_roots();
            let s = match k {
                FixedPointKind::A1 => roots.s1.unwrap(),
                _ => roots.s2.unwrap(),
            };
            (PhaseState::new(spow(s, pr.p - 1.0), 0.0), e)
        }
    };
    let w = eigen[spec.eigen_index].vector;
    let nw = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let seed_at = |eps: f64| {
        let d = spec.side * eps * (1.0 + loc.norm()) / nw;
        PhaseState::new(loc.g + d * w[0], (loc.v + d * w[1]).max(0.0))
    };
    let main = integrate(pr, seed_at(ctl.seed_eps), 0.0, spec.direction, ctl);
    let check = integrate(pr, seed_at(0.5 * ctl.seed_eps), 0.0, spec.direction, ctl);
    if std::mem::discriminant(&main.stop) != std::mem::discriminant(&check.stop) {
        return Err(FlowError::SeedSensitive(main.stop, check.stop));
    }
    Ok(main)
}

/// Region labels used in the portraits. H1 uses R1..R5, H3/H4 use
/// R'1..R'4, and the gamma = 0 configurations use J1..J4; points on the
/// nullclines or in unlabeled sectors give None.
pub fn detect_region(pr: &Params, st: &PhaseState) -> Option<Region> {
    let label = pr.classify();
    let f = phase::f_of_g(pr, st.g);
    if st.v <= 0.0 || st.v == f {
        return None;
    }
    if label.gamma_zero {
        return Some(match (st.v < f, st.g < 0.0) {
            (true, true) => Region::J1,
            (false, false) => Region::J2,
            (false, true) => Region::J3,
            (true, false) => Region::J4,
        });
    }
    let roots = pr.hardy_roots();
    match label.case {
        Case::H1 => {
            let g0 = m0_location(pr)?.g;
            let g1 = spow(roots.s1?, pr.p - 1.0);
            let g2 = spow(roots.s2?, pr.p - 1.0);
            if st.v < f {
                if st.g > g1 && st.g < g0 {
                    Some(Region::R1)
                } else if st.g > g0 {
                    Some(Region::R4)
                } else if st.g < g2 {
                    Some(Region::R5)
                } else {
                    None
                }
            } else if st.g > g0 {
                Some(Region::R2)
            } else {
                Some(Region::R3)
            }
        }
        Case::H3 | Case::H4 => {
            let g0 = spow(pr.gamma(), pr.p - 1.0);
            let g1 = spow(roots.s1?, pr.p - 1.0);
            let g2 = spow(roots.s2?, pr.p - 1.0);
            if st.v < f && st.g < g2 {
                Some(Region::Rp1)
            } else if st.v > f && st.g > g1 {
                Some(Region::Rp2)
            } else if st.v > f && st.g < g0 {
                Some(Region::Rp3)
            } else if st.v < f && st.g > g0 {
                Some(Region::Rp4)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn labeled(mut tr: Trajectory, label: TrajLabel) -> Trajectory {
    tr.label = Some(label);
    tr
}

/// The four separatrices of the saddle M0 (hyperbolic case): T1, T2 end
/// at M0 (t -> +inf) on the G < G0 / G > G0 sides; T3, T4 leave it.
fn m0_quartet(pr: &Params, ctl: &Controls) -> Result<Vec<Trajectory>, FlowError> {
    let mut out = Vec::new();
    for (label, idx, side, dir) in [
        (TrajLabel::T1, 0, -1.0, Direction::Backward),
        (TrajLabel::T2, 0, 1.0, Direction::Backward),
        (TrajLabel::T3, 1, -1.0, Direction::Forward),
        (TrajLabel::T4, 1, 1.0, Direction::Forward),
    ] {
        let spec = ShootSpec {
            from: FixedPointKind::M0,
            eigen_index: idx,
            side,
            direction: dir,
        };
        out.push(labeled(shoot_manifold(pr, &spec, ctl)?, label));
    }
    Ok(out)
}

/// M0 separatrices for gamma = 0, p > 2, where the linearization is
/// degenerate: seeds come from the local contact model
/// G'' ~ k |G|^{(2-p)/(p-1)} G, k = (q+1-p)|mu|, giving
/// G = +-A tau^m, m = 2(p-1)/(p-2), A = (k/(m(m-1)))^{(p-1)/(p-2)}.
/// These are candidate orbits; uniqueness through (0,|mu|) is not asserted.
fn m0_contact_quartet(pr: &Params, ctl: &Controls) -> Vec<Trajectory> {
    let k = (pr.q + 1.0 - pr.p) * pr.mu.abs();
    let m = 2.0 * (pr.p - 1.0) / (pr.p - 2.0);
    let a = (k / (m * (m - 1.0))).powf((pr.p - 1.0) / (pr.p - 2.0));
    let tau0 = (1e-4 / a).powf(1.0 / m);
    let mut out = Vec::new();
    for (label, gsign, dir) in [
        (TrajLabel::T1, -1.0, Direction::Backward),
        (TrajLabel::T2, 1.0, Direction::Backward),
        (TrajLabel::T3, -1.0, Direction::Forward),
        (TrajLabel::T4, 1.0, Direction::Forward),
    ] {
        let g = gsign * a * tau0.powf(m);
        // dG/dt at the seed: +-A m tau^{m-1}, reversed on arriving branches.
        let gdot = dir.sign() * gsign * a * m * tau0.powf(m - 1.0);
        let v = pr.mu.abs() - gdot - (pr.n - pr.p) * g;
        out.push(labeled(
            integrate(pr, PhaseState::new(g, v), 0.0, dir, ctl),
            label,
        ));
    }
    out
}

/// Shoot along the eta-eigendirection of A_i, on the side with V > 0.
fn a_point_shoot(
    pr: &Params,
    from: FixedPointKind,
    dir: Direction,
    label: TrajLabel,
    ctl: &Controls,
) -> Result<Trajectory, FlowError> {
    let m = eigen_a(pr, from)?[1].vector[1];
    if m == 0.0 {
        return Err(FlowError::NoAdmissibleSide);
    }
    let spec = ShootSpec {
        from,
        eigen_index: 1,
        side: m.signum(),
        direction: dir,
    };
    Ok(labeled(shoot_manifold(pr, &spec, ctl)?, label))
}

/// Central-manifold orbit at A_i in the resonant cases gamma = S_i
/// (eta_i = 0): V ~ b_i/|t| along the eigendirection (1, m_i), with
/// b_i = (p-1)|rho_i| S_i^{p-2}/(q+1-p). Seeded from the asymptotics at
/// |t| = t_seed and integrated toward the escape end.
fn central_manifold_orbit(
    pr: &Params,
    from: FixedPointKind,
    ctl: &Controls,
) -> Result<Trajectory, FlowError> {
    let roots = pr.hardy_roots();
    let (s, dir, label) = match from {
        FixedPointKind::A1 => (roots.s1.unwrap(), Direction::Backward, TrajLabel::Theta1),
        FixedPointKind::A2 => (roots.s2.unwrap(), Direction::Forward, TrajLabel::Theta2),
        FixedPointKind::M0 => return Err(FlowError::Unsupported("central manifold at M0".into())),
    };
    let t_seed = 45.0;
    let gi = spow(s, pr.p - 1.0);
    let m = eigen_a(pr, from)?[1].vector[1];
    let qp = pr.q + 1.0 - pr.p;
    let (seed, t0) = if s.abs() > 1e-12 {
        let rho = pr.p * s - pr.n + pr.p;
        let b = (pr.p - 1.0) * rho.abs() * s.abs().powf(pr.p - 2.0) / qp;
        let v = b / t_seed;
        (PhaseState::new(gi + v / m, v), -dir.sign() * t_seed)
    } else {
        // S_2 = 0 (mu = 0): V ~ (kappa |t|)^{1-p} as t -> -inf.
        let kappa = qp * (pr.n - pr.p).powf(-1.0 / (pr.p - 1.0)) / (pr.p - 1.0);
        let v = (kappa * t_seed).powf(1.0 - pr.p);
        (PhaseState::new(gi + v / m, v), -t_seed)
    };
    let tr = integrate(pr, seed, t0, dir, ctl);
    Ok(labeled(tr, label))
}

/// The labeled trajectory census for the current case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTrace {
    pub label: crate::params::CaseLabel,
    pub trajectories: Vec<Trajectory>,
}

pub fn trace_case(pr: &Params, ctl: &Controls) -> Result<CaseTrace, FlowError> {
    let label = pr.classify();
    let mut trajectories = Vec::new();
    match label.case {
        Case::H1 | Case::H2 | Case::H5 => {
            if label.gamma_zero && pr.p > 2.0 {
                trajectories.extend(m0_contact_quartet(pr, ctl));
            } else if label.gamma_zero && pr.p < 2.0 {
                return Err(FlowError::Unsupported(
                    "gamma = 0 with p < 2: degenerate node at M0".into(),
                ));
            } else {
                trajectories.extend(m0_quartet(pr, ctl)?);
            }
            if label.case == Case::H1 {
                trajectories.push(a_point_shoot(
                    pr,
                    FixedPointKind::A2,
                    Direction::Forward,
                    TrajLabel::T5,
                    ctl,
                )?);
            }
            if label.case == Case::H2 {
                trajectories.push(a_point_shoot(
                    pr,
                    FixedPointKind::A1,
                    Direction::Backward,
                    TrajLabel::T5,
                    ctl,
                )?);
            }
        }
        Case::H3 => {
            if label.gamma_eq_s1 {
                trajectories.push(central_manifold_orbit(pr, FixedPointKind::A1, ctl)?);
            } else {
                trajectories.push(a_point_shoot(
                    pr,
                    FixedPointKind::A1,
                    Direction::Backward,
                    TrajLabel::Theta1,
                    ctl,
                )?);
            }
            if label.gamma_eq_s2 {
                trajectories.push(central_manifold_orbit(pr, FixedPointKind::A2, ctl)?);
            } else {
                trajectories.push(a_point_shoot(
                    pr,
                    FixedPointKind::A2,
                    Direction::Forward,
                    TrajLabel::Theta2,
                    ctl,
                )?);
            }
        }
        Case::H4 => {
            trajectories.extend(crate::profiles::h4_trajectories(pr, ctl));
        }
    }
    Ok(CaseTrace {
        label,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use proptest::prelude::*;

    fn h1() -> Params {
        Params::new(4.0, 2.0, 2.0, -0.75, 0.0).unwrap()
    }

    #[test]
    fn r3_seed_blows_up_with_g_to_minus_inf() {
        let pr = h1();
        let ctl = Controls::default();
        let st = PhaseState::new(1.0, 2.0); // V > F, G < G0
        assert_eq!(detect_region(&pr, &st), Some(Region::R3));
        let tr = integrate(&pr, st, 0.0, Direction::Forward, &ctl);
        assert_eq!(tr.stop, StopEvent::BlowupV);
        assert!(tr.stop_sample().1.g < 0.0);
    }

    #[test]
    fn r4_seed_vanishes() {
        let pr = h1();
        let ctl = Controls::default();
        let st = PhaseState::new(3.0, 0.5); // V < F(3) = 3.75, G > G0
        assert_eq!(detect_region(&pr, &st), Some(Region::R4));
        let tr = integrate(&pr, st, 0.0, Direction::Forward, &ctl);
        assert_eq!(tr.stop, StopEvent::GToPlusInfVToZero);
        assert!(tr.stop_sample().1.v < 1.0);
    }

    #[test]
    fn t1_connects_m0_to_a1() {
        let pr = h1();
        // Leaving the 1e-7 seed ball at rate |lambda_1| ~ 0.32 takes ~50
        // time units before the travel and capture phases.
        let mut ctl = Controls::default();
        ctl.t_span = 120.0;
        let tr = shoot_manifold(
            &pr,
            &ShootSpec {
                from: FixedPointKind::M0,
                eigen_index: 0,
                side: -1.0,
                direction: Direction::Backward,
            },
            &ctl,
        )
        .unwrap();
        assert_eq!(
            tr.stop,
            StopEvent::ReachedFixedPoint {
                kind: FixedPointKind::A1
            }
        );
        // Samples are time-ordered.
        assert!(tr.samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn trace_case_h1_census() {
        let pr = h1();
        let mut ctl = Controls::default();
        ctl.t_span = 120.0;
        let trace = trace_case(&pr, &ctl).unwrap();
        assert_eq!(trace.trajectories.len(), 5);
        let by = |l: TrajLabel| {
            trace
                .trajectories
                .iter()
                .find(|t| t.label == Some(l))
                .unwrap()
                .stop
        };
        assert_eq!(
            by(TrajLabel::T1),
            StopEvent::ReachedFixedPoint {
                kind: FixedPointKind::A1
            }
        );
        assert_eq!(by(TrajLabel::T2), StopEvent::BlowupV);
        assert_eq!(by(TrajLabel::T3), StopEvent::BlowupV);
        assert_eq!(by(TrajLabel::T4), StopEvent::GToPlusInfVToZero);
        assert_eq!(by(TrajLabel::T5), StopEvent::BlowupV);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn time_reversal_roundtrip(g in -0.5f64..2.5, v in 0.2f64..2.0) {
            let pr = h1();
            let mut ctl = Controls::default();
            ctl.t_span = 1.5;
            ctl.rel_tol = 1e-10;
            let fwd = integrate(&pr, PhaseState::new(g, v), 0.0, Direction::Forward, &ctl);
            prop_assume!(fwd.stop == StopEvent::HitTimeHorizon);
            // Retracing is well conditioned only while the orbit stays in a
            // moderate region; escaping orbits amplify seed errors by
            // exp(Lipschitz * span).
            prop_assume!(fwd.samples.iter().all(|(_, st)| st.norm() < 8.0));
            let (t_end, end) = fwd.stop_sample();
            let mut back_ctl = ctl;
            back_ctl.t_span = t_end;
            let back = integrate(&pr, end, t_end, Direction::Backward, &back_ctl);
            prop_assume!(back.stop == StopEvent::HitTimeHorizon);
            let (_, home) = back.stop_sample();
            prop_assert!(home.dist(&PhaseState::new(g, v)) < 1e-6,
                "returned to ({}, {})", home.g, home.v);
        }

        #[test]
        fn v_stays_nonnegative(g in -1.0f64..3.0, v in 0.0f64..3.0) {
            let pr = h1();
            let mut ctl = Controls::default();
            ctl.t_span = 8.0;
            let tr = integrate(&pr, PhaseState::new(g, v), 0.0, Direction::Forward, &ctl);
            prop_assert!(tr.samples.iter().all(|(_, st)| st.v >= 0.0));
        }
    }
}
