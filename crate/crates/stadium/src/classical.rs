//! Classical billiard dynamics: event-driven ray tracing with specular
//! reflection, phase-space fans over page polar coordinates, and Lyapunov
//! exponent estimation by the tangent map.
//!
//! Trajectories are parametrized by arclength, so one trace serves every
//! momentum magnitude; time enters only through s = k t.

use crate::geometry::{add, dot, scale, sub, Stadium, Vec2};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("start point ({0}, {1}) is outside the billiard")]
    StartOutside(f64, f64),
    #[error("arclength {s} outside [0, {total}]")]
    ArclengthOutOfRange { s: f64, total: f64 },
}

/// Point of the reduced phase space z = (q_x, q_y, theta), tagged with the
/// momentum magnitude k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpacePoint {
    pub q: Vec2,
    pub theta: f64,
    pub k: f64,
}

impl PhaseSpacePoint {
    pub fn new(q: Vec2, theta: f64, k: f64) -> PhaseSpacePoint {
        PhaseSpacePoint {
            q,
            theta: wrap_angle(theta),
            k,
        }
    }

    pub fn direction(&self) -> Vec2 {
        [self.theta.cos(), self.theta.sin()]
    }

    /// Momentum vector k (cos theta, sin theta).
    pub fn k_vec(&self) -> Vec2 {
        scale(self.direction(), self.k)
    }
}

pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta % core::f64::consts::TAU;
    if t < 0.0 {
        t + core::f64::consts::TAU
    } else {
        t
    }
}

/// One boundary collision.
#[derive(Debug, Clone, Copy)]
pub struct Bounce {
    /// arclength along the trajectory at impact
    pub s: f64,
    /// boundary arclength coordinate of the impact point
    pub boundary_s: f64,
    pub theta_in: f64,
    pub theta_out: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub start: PhaseSpacePoint,
    pub bounces: Vec<Bounce>,
    pub total_arclength: f64,
}

/// Minimum chord to accept a hit on a piece other than the one just left.
const HIT_EPS: f64 = 1e-9;
/// Minimum chord to accept a hit on the same piece again. Spurious re-hits
/// of the current wall at grazing incidence sit many orders below this,
/// while genuine same-piece chords (whispering-gallery steps 2 r cos i) sit
/// far above it for any incidence of interest.
const SAME_PIECE_EPS: f64 = 1e-6;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Wall {
    Top,
    Bottom,
    Cap(bool),
    None,
}

fn next_hit(st: &Stadium, q: Vec2, d: Vec2, from: Wall) -> (f64, Vec2, Wall) {
    let (r, l) = (st.r, st.l);
    let mut best_t = f64::INFINITY;
    let mut best_q = q;
    let mut best_w = Wall::None;
    // straight walls y = +r and y = -r
    if l > 0.0 && d[1].abs() > 0.0 {
        for (wy, id) in [(r, Wall::Top), (-r, Wall::Bottom)] {
            let t = (wy - q[1]) / d[1];
            let floor = if from == id { SAME_PIECE_EPS } else { HIT_EPS };
            if t > floor && t < best_t {
                let x = q[0] + t * d[0];
                if x.abs() <= l / 2.0 {
                    best_t = t;
                    best_q = [x, wy];
                    best_w = id;
                }
            }
        }
    }
    // cap circles centered (+-l/2, 0); for l = 0 both are the same circle
    for right in [true, false] {
        let cx = if right { l / 2.0 } else { -l / 2.0 };
        let id = Wall::Cap(if l > 0.0 { right } else { true });
        let rel = sub(q, [cx, 0.0]);
        let b = dot(rel, d);
        let c = dot(rel, rel) - r * r;
        let disc = b * b - c;
        if disc <= 0.0 {
            if l == 0.0 {
                break;
            }
            continue;
        }
        let sq = disc.sqrt();
        let floor = if from == id { SAME_PIECE_EPS } else { HIT_EPS };
        for t in [-b - sq, -b + sq] {
            if t > floor && t < best_t {
                let mut p = add(q, scale(d, t));
                let on_this_cap = if l == 0.0 {
                    true
                } else if right {
                    p[0] >= l / 2.0 - 1e-9
                } else {
                    p[0] <= -l / 2.0 + 1e-9
                };
                if on_this_cap {
                    // snap exactly onto the circle to stop radial drift
                    let rel_p = sub(p, [cx, 0.0]);
                    let nr = crate::geometry::norm(rel_p);
                    if nr > 0.0 {
                        p = add([cx, 0.0], scale(rel_p, r / nr));
                    }
                    best_t = t;
                    best_q = p;
                    best_w = id;
                }
            }
        }
        if l == 0.0 {
            break;
        }
    }
    (best_t, best_q, best_w)
}

/// Exact event-driven ray trace from `start` up to total arclength `s_max`.
pub fn propagate(
    st: &Stadium,
    start: PhaseSpacePoint,
    s_max: f64,
) -> Result<Trajectory, ClassicalError> {
    if !st.contains(start.q) && st.distance_to_boundary(start.q) < -1e-12 {
        return Err(ClassicalError::StartOutside(start.q[0], start.q[1]));
    }
    if !st.contains(start.q) {
        // on the boundary is fine as long as it points inward; reject the rest
        let n = st.normal_out(st.boundary_arclength(start.q));
        if dot(start.direction(), n) >= 0.0 {
            return Err(ClassicalError::StartOutside(start.q[0], start.q[1]));
        }
    }
    assert!(s_max > 0.0);
    let mut q = start.q;
    let mut theta = start.theta;
    let mut s_acc = 0.0;
    let mut last_wall = Wall::None;
    let mut bounces = Vec::new();
    while s_acc < s_max {
        let d = [theta.cos(), theta.sin()];
        let (t, p, wall) = next_hit(st, q, d, last_wall);
        assert!(
            t.is_finite(),
            "ray escaped the billiard at q=({}, {}), theta={theta}",
            q[0],
            q[1]
        );
        let s_hit = s_acc + t;
        if s_hit > s_max + 1e-12 {
            break;
        }
        let bs = st.boundary_arclength(p);
        let n = st.normal_out(bs);
        let d_out = sub(d, scale(n, 2.0 * dot(d, n)));
        let theta_out = wrap_angle(d_out[1].atan2(d_out[0]));
        bounces.push(Bounce {
            s: s_hit,
            boundary_s: bs,
            theta_in: theta,
            theta_out,
        });
        q = p;
        theta = theta_out;
        s_acc = s_hit;
        last_wall = wall;
    }
    Ok(Trajectory {
        start,
        bounces,
        total_arclength: s_max,
    })
}

/// Phase-space state at arclength s along a trajectory.
pub fn state_at(st: &Stadium, traj: &Trajectory, s: f64) -> Result<PhaseSpacePoint, ClassicalError> {
    if !(0.0..=traj.total_arclength + 1e-12).contains(&s) {
        return Err(ClassicalError::ArclengthOutOfRange {
            s,
            total: traj.total_arclength,
        });
    }
    // last bounce strictly before s (a bounce exactly at s reports theta_out)
    let i = traj.bounces.partition_point(|b| b.s <= s);
    let (q0, theta, s0) = if i == 0 {
        (traj.start.q, traj.start.theta, 0.0)
    } else {
        let b = &traj.bounces[i - 1];
        (st.point(b.boundary_s), b.theta_out, b.s)
    };
    let d = [theta.cos(), theta.sin()];
    Ok(PhaseSpacePoint {
        q: add(q0, scale(d, s - s0)),
        theta,
        k: traj.start.k,
    })
}

/// Fan of trajectories from the center, sampled on the page polar grid
/// (theta, t): n_theta rays, each at n_t uniform times in [0, t_max], with
/// arclength s = k t along each ray.
#[derive(Debug, Clone)]
pub struct UnwarpGrid {
    pub n_theta: usize,
    pub n_t: usize,
    pub t_max: f64,
    pub k: f64,
    /// points[i_theta][i_t]
    pub points: Vec<Vec<PhaseSpacePoint>>,
}

pub fn build_unwarp_grid(
    st: &Stadium,
    k: f64,
    n_theta: usize,
    n_t: usize,
    t_max: f64,
) -> UnwarpGrid {
    assert!(n_theta >= 2 && n_t >= 2 && t_max > 0.0 && k > 0.0);
    let s_max = k * t_max;
    let points: Vec<Vec<PhaseSpacePoint>> = (0..n_theta)
        .into_par_iter()
        .map(|it| {
            let theta = core::f64::consts::TAU * it as f64 / n_theta as f64;
            let start = PhaseSpacePoint::new([0.0, 0.0], theta, k);
            let traj = propagate(st, start, s_max).expect("center is interior");
            (0..n_t)
                .map(|jt| {
                    let s = s_max * jt as f64 / (n_t - 1) as f64;
                    state_at(st, &traj, s).expect("s within range")
                })
                .collect()
        })
        .collect();
    UnwarpGrid {
        n_theta,
        n_t,
        t_max,
        k,
        points,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LyapunovEstimate {
    /// decay rate per unit arclength of classical intensity weights
    /// e^{-lambda s}: twice the coordinate-separation exponent. Multiply by
    /// k for the rate per unit time at momentum k.
    pub lambda_per_arclength: f64,
    pub stderr: f64,
    pub n_orbits: usize,
    pub arclength_per_orbit: f64,
}

fn random_interior_point(st: &Stadium, rng: &mut impl Rng) -> Vec2 {
    let hx = st.l / 2.0 + st.r;
    loop {
        let q = [
            rng.gen_range(-hx..hx),
            rng.gen_range(-st.r..st.r),
        ];
        if st.contains(q) {
            return q;
        }
    }
}

/// Chaotic decay rate per unit arclength via the tangent map with
/// renormalization at every bounce.
///
/// Between bounces a transverse perturbation evolves by (dq, dtheta) ->
/// (dq + ell dtheta, dtheta); a bounce on a focusing wall of curvature
/// kappa at incidence cosine c applies the mirror map dtheta -= 2 kappa/c dq.
/// The sign matters: it keeps the circle marginal (|trace| = 2) while the
/// stadium's long flights after focusing make it hyperbolic.
///
/// The reported rate is the decay exponent of intensities, twice the
/// coordinate-separation exponent, because downstream overlap statistics
/// compare squared amplitudes.
pub fn estimate_lyapunov(
    st: &Stadium,
    n_orbits: usize,
    arclength_per_orbit: f64,
    seed: u64,
) -> LyapunovEstimate {
    assert!(n_orbits >= 10);
    let rates: Vec<f64> = (0..n_orbits)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::stream_rng(seed, i as u64);
            let q = random_interior_point(st, &mut rng);
            let theta = rng.gen_range(0.0..core::f64::consts::TAU);
            orbit_growth_rate(st, q, theta, arclength_per_orbit)
        })
        .collect();
    let mean = rates.iter().sum::<f64>() / n_orbits as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n_orbits - 1) as f64;
    LyapunovEstimate {
        lambda_per_arclength: mean,
        stderr: (var / n_orbits as f64).sqrt(),
        n_orbits,
        arclength_per_orbit,
    }
}

fn orbit_growth_rate(st: &Stadium, q0: Vec2, theta0: f64, s_total: f64) -> f64 {
    let traj = propagate(st, PhaseSpacePoint::new(q0, theta0, 1.0), s_total)
        .expect("interior start");
    let mut v = [1.0f64, 0.7];
    let mut log_growth = 0.0;
    let mut s_prev = 0.0;
    let mut theta_prev = theta0;
    for b in &traj.bounces {
        let ell = b.s - s_prev;
        v[0] += ell * v[1];
        let n = st.normal_out(b.boundary_s);
        let d_in = [theta_prev.cos(), theta_prev.sin()];
        // cosine of the incidence angle; d_in points out through the wall
        let c = dot(d_in, n).max(1e-9);
        let kappa = st.curvature(b.boundary_s);
        if kappa > 0.0 {
            v[1] -= 2.0 * kappa / c * v[0];
        }
        let norm = v[0].hypot(v[1]);
        log_growth += norm.ln();
        v = [v[0] / norm, v[1] / norm];
        s_prev = b.s;
        theta_prev = b.theta_out;
    }
    // Intensity convention: weights carried by a classical trajectory decay
    // as the square of the coordinate separation growth.
    2.0 * log_growth / s_total
}
