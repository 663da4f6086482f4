//! Quantum states on a spatial grid: Gaussian pointer states, Haar-random
//! fields, random-wave superpositions, and expansions of pointer states over
//! stored eigenstates with time evolution in that basis.
//!
//! All inner products are grid quadrature on a shared [`FieldGrid`]. Fields
//! vanish identically outside the billiard; a pointer state keeps its analytic
//! free-plane values inside (no re-normalization after wall truncation), so
//! overlaps between pointer states match the closed-form Gaussian expressions
//! as long as the centers sit several widths away from the boundary.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{dist, dot, norm, Stadium, Vec2};
use crate::spectral::{SpectralError, SpectrumStore, SymmetryClass, SymmetryTag};
use crate::stream_rng;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(
        "momentum content {k_content:.3} exceeds the representable bound {bound:.3} of this store"
    )]
    NotRepresentable { k_content: f64, bound: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expansions come from different stores")]
    StoreMismatch,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unreadable field file: {0}")]
    Format(String),
}

/// Gaussian pointer state: position centroid `q0`, momentum centroid `k0`,
/// position width `sigma` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    pub q0: Vec2,
    pub k0: Vec2,
    pub sigma: f64,
}

impl WavepacketSpec {
    /// Pointer state at `q0` heading along `theta` with momentum `k`, width
    /// 1/sqrt(k). That width puts position spread and momentum spread on the
    /// same footing once position differences are measured in units of 1/k.
    pub fn coherent(q0: Vec2, theta: f64, k: f64) -> WavepacketSpec {
        WavepacketSpec {
            q0,
            k0: [k * theta.cos(), k * theta.sin()],
            sigma: 1.0 / k.sqrt(),
        }
    }

    pub fn k(&self) -> f64 {
        norm(self.k0)
    }

    /// Largest wavenumber carrying non-negligible weight: four momentum
    /// standard deviations above the centroid.
    pub fn k_content(&self) -> f64 {
        self.k() + 4.0 / (std::f64::consts::SQRT_2 * self.sigma)
    }

    /// Amplitude at `q`: peak 1/(sigma sqrt(pi)), Gaussian envelope in
    /// |q - q0|, plane-wave phase at the centroid momentum. Unit L2 norm on
    /// the free plane.
    pub fn amplitude(&self, q: Vec2) -> Complex64 {
        let d = sub2(q, self.q0);
        let r2 = d[0] * d[0] + d[1] * d[1];
        let env = (-r2 / (2.0 * self.sigma * self.sigma)).exp() / (self.sigma * PI.sqrt());
        Complex64::from_polar(env, dot(q, self.k0))
    }
}

fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Grid step fine enough for both a plane wave at momentum `k` (ten points
/// per wavelength) and a Gaussian envelope of width `sigma` (six points per
/// width).
pub fn field_step(k: f64, sigma: f64) -> f64 {
    (2.0 * PI / (10.0 * k)).min(sigma / 6.0)
}

/// Uniform cell-centered grid centered on the origin, symmetric under both
/// mirrors: the mirror image of a cell center is again a cell center, bit for
/// bit, because coordinates come from odd-integer multiples of dq/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub dq: f64,
    pub nx: usize,
    pub ny: usize,
}

impl FieldGrid {
    /// Cover the bounding box of `st` with step `dq`. Cell centers never land
    /// exactly on the boundary curve.
    pub fn cover(st: &Stadium, dq: f64) -> FieldGrid {
        assert!(dq > 0.0 && dq.is_finite());
        let hx = 0.5 * st.l + st.r;
        let hy = st.r;
        let nx = (2.0 * hx / dq).ceil() as usize;
        let ny = (2.0 * hy / dq).ceil() as usize;
        FieldGrid { dq, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x0(&self) -> f64 {
        -0.5 * self.nx as f64 * self.dq
    }

    pub fn y0(&self) -> f64 {
        -0.5 * self.ny as f64 * self.dq
    }

    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        // odd-integer offsets are exact in f64, so negating the offset
        // negates the coordinate exactly
        let cx = (2 * ix as i64 + 1 - self.nx as i64) as f64;
        let cy = (2 * iy as i64 + 1 - self.ny as i64) as f64;
        [0.5 * self.dq * cx, 0.5 * self.dq * cy]
    }

    /// Cell center for a row-major index (`iy * nx + ix`).
    pub fn site(&self, i: usize) -> Vec2 {
        self.point(i % self.nx, i / self.nx)
    }
}

/// A complex field sampled on a [`FieldGrid`]. Values at cell centers outside
/// the billiard are exactly zero.
#[derive(Debug, Clone)]
pub struct StateField {
    pub grid: FieldGrid,
    /// row-major, index `iy * nx + ix`
    pub values: Vec<Complex64>,
    pub normalized: bool,
}

impl StateField {
    /// Sample `f` at every cell center inside the billiard, zero outside.
    pub fn sample(
        st: &Stadium,
        grid: FieldGrid,
        f: impl Fn(Vec2) -> Complex64 + Sync,
    ) -> StateField {
        let values: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let q = grid.site(i);
                if st.contains(q) {
                    f(q)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        StateField {
            grid,
            values,
            normalized: false,
        }
    }

    /// Squared L2 norm by grid quadrature.
    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.dq * self.grid.dq;
        w * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let c = 1.0 / n;
            for v in &mut self.values {
                *v *= c;
            }
        }
        self.normalized = true;
    }

    /// Grid quadrature of `<self|other>` (conjugate-linear in `self`). Both
    /// fields must share a grid.
    pub fn inner(&self, other: &StateField) -> Result<Complex64, StateError> {
        if self.grid != other.grid {
            return Err(StateError::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * (self.grid.dq * self.grid.dq))
    }

    /// Write the field as a small text header (grid layout, then a blank
    /// line) followed by little-endian interleaved re/im doubles.
    pub fn save(&self, path: &Path) -> Result<(), StateError> {
        let mut head = String::new();
        let _ = writeln!(head, "field = complex-grid-1");
        let _ = writeln!(head, "nx = {}", self.grid.nx);
        let _ = writeln!(head, "ny = {}", self.grid.ny);
        let _ = writeln!(head, "dq = {:.17e}", self.grid.dq);
        let _ = writeln!(head, "x0 = {:.17e}", self.grid.x0());
        let _ = writeln!(head, "y0 = {:.17e}", self.grid.y0());
        let _ = writeln!(head, "normalized = {}", self.normalized);
        let _ = writeln!(head);
        let mut bytes = head.into_bytes();
        bytes.reserve(16 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<StateField, StateError> {
        let raw = fs::read(path)?;
        let header_end = raw
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| StateError::Format("missing header terminator".into()))?;
        let head = std::str::from_utf8(&raw[..header_end])
            .map_err(|_| StateError::Format("header is not utf-8".into()))?;
        let mut nx = None;
        let mut ny = None;
        let mut dq = None;
        let mut normalized = false;
        for line in head.lines() {
            let Some((key, val)) = line.split_once('=') else {
                continue;
            };
            let (key, val) = (key.trim(), val.trim());
            match key {
                "field" => {
                    if val != "complex-grid-1" {
                        return Err(StateError::Format(format!("unknown format {val}")));
                    }
                }
                "nx" => nx = val.parse::<usize>().ok(),
                "ny" => ny = val.parse::<usize>().ok(),
                "dq" => dq = val.parse::<f64>().ok(),
                "normalized" => normalized = val == "true",
                _ => {}
            }
        }
        let (Some(nx), Some(ny), Some(dq)) = (nx, ny, dq) else {
            return Err(StateError::Format("incomplete header".into()));
        };
        let grid = FieldGrid { dq, nx, ny };
        let body = &raw[header_end + 2..];
        if body.len() != 16 * grid.len() {
            return Err(StateError::Format(format!(
                "payload holds {} bytes, grid needs {}",
                body.len(),
                16 * grid.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(StateField {
            grid,
            values,
            normalized,
        })
    }
}

/// The pointer state sampled over the billiard on its natural grid. The tail
/// clipped by the walls is kept as-is, so grid overlaps of two such fields
/// reproduce the free-plane Gaussian overlap formula.
pub fn wavepacket_field(st: &Stadium, spec: &WavepacketSpec) -> StateField {
    let grid = FieldGrid::cover(st, field_step(spec.k_content(), spec.sigma));
    StateField::sample(st, grid, |q| spec.amplitude(q))
}

/// One stored eigenstate sampled on `grid` via the boundary representation,
/// zero outside the billiard.
pub fn eigenstate_field(
    store: &SpectrumStore,
    entry: usize,
    grid: FieldGrid,
) -> Result<StateField, StateError> {
    let st = store.stadium();
    let mut inside = Vec::new();
    let mut idx = Vec::new();
    for i in 0..grid.len() {
        if st.contains(grid.site(i)) {
            idx.push(i);
            inside.push(grid.site(i));
        }
    }
    let vals = store.eval_batch(entry, &inside)?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (&i, v) in idx.iter().zip(vals) {
        values[i] = v;
    }
    Ok(StateField {
        grid,
        values,
        normalized: false,
    })
}

/// Independent complex Gaussian amplitude at every interior cell, zero
/// outside, unit norm: the uniform measure on the sphere of grid fields.
/// The construction is tied to the grid resolution; record the step next to
/// the seed wherever results depend on it.
pub fn haar_random_state(st: &Stadium, grid: FieldGrid, seed: u64) -> StateField {
    let mut rng = stream_rng(seed, STREAM_HAAR);
    let values = (0..grid.len())
        .map(|i| {
            if st.contains(grid.site(i)) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut f = StateField {
        grid,
        values,
        normalized: false,
    };
    f.normalize();
    f
}

const STREAM_HAAR: u64 = 0x68616172;
const STREAM_WAVES: u64 = 0x77617665;

/// Sum of unit plane waves with fixed |k| and the given directions and
/// phases, evaluated left to right.
fn plane_wave_sum(waves: &[(Vec2, f64)], q: Vec2) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for &(kv, phase) in waves {
        s += Complex64::from_polar(1.0, dot(kv, q) + phase);
    }
    s
}

/// Isotropic random-wave field at momentum `k`: `n_waves` plane waves with
/// uniform directions and phases, projected onto the parity class, then
/// brought to zero at the walls by the envelope 1 - exp(-k * wall_distance)
/// and normalized. Interior statistics far from the walls match the free
/// random-wave model; the envelope mimics how a Dirichlet state rises over
/// its first wavelength.
pub fn random_wave_state(
    st: &Stadium,
    grid: FieldGrid,
    k: f64,
    n_waves: usize,
    seed: u64,
    class: SymmetryClass,
) -> StateField {
    assert!(n_waves >= 10, "too few waves for an isotropic superposition");
    assert!(k > 0.0);
    let mut rng = stream_rng(seed, STREAM_WAVES);
    let waves: Vec<(Vec2, f64)> = (0..n_waves)
        .map(|_| {
            let th = rng.gen_range(0.0..2.0 * PI);
            let ph = rng.gen_range(0.0..2.0 * PI);
            ([k * th.cos(), k * th.sin()], ph)
        })
        .collect();
    let (px, py) = class.parities();
    // Evaluate the symmetrized sum only at the canonical quadrant image of
    // each cell and carry the parity character back, so the parity relations
    // hold bit for bit on the mirror-symmetric grid.
    let mut f = StateField::sample(st, grid, |q| {
        let a = [q[0].abs(), q[1].abs()];
        let mirrors = [
            (a, 1.0),
            ([-a[0], a[1]], px),
            ([a[0], -a[1]], py),
            ([-a[0], -a[1]], px * py),
        ];
        let mut s = Complex64::new(0.0, 0.0);
        for (p, ch) in mirrors {
            s += ch * plane_wave_sum(&waves, p);
        }
        let ch_back = if q[0] < 0.0 { px } else { 1.0 } * if q[1] < 0.0 { py } else { 1.0 };
        let ell = st.distance_to_boundary(a);
        ch_back * s * (1.0 - (-k * ell).exp())
    });
    f.normalize();
    f
}

/// Identity of the store an expansion was computed against: geometry, mesh,
/// and the full eigenvalue list folded into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreId(u64);

fn fnv(h: u64, x: u64) -> u64 {
    (h ^ x).wrapping_mul(0x100000001b3)
}

pub fn store_id(store: &SpectrumStore) -> StoreId {
    let mut h = 0xcbf29ce484222325u64;
    h = fnv(h, store.stadium().r.to_bits());
    h = fnv(h, store.stadium().l.to_bits());
    h = fnv(h, store.m() as u64);
    for e in store.entries() {
        h = fnv(h, e.k.to_bits());
    }
    StoreId(h)
}

/// A pointer state expanded over the eigenstates of a store.
#[derive(Debug, Clone)]
pub struct EigenExpansion {
    pub store_id: StoreId,
    pub spec: WavepacketSpec,
    /// (store entry index, eigenvalue k, coefficient `<eigenstate|packet>`)
    pub coeffs: Vec<(usize, f64, Complex64)>,
    /// total probability weight the stored basis captures
    pub captured: f64,
    /// quadrature step used for the overlap integrals
    pub dq: f64,
}

impl EigenExpansion {
    /// Survival amplitude `<packet(0)|packet(t)>` under E = k^2/2 evolution,
    /// restricted to the captured basis.
    pub fn survival(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|&(_, k, c)| c.norm_sqr() * Complex64::from_polar(1.0, -0.5 * k * k * t))
            .sum()
    }
}

/// Expand a pointer state over every eigenstate in the store by grid
/// quadrature. Fails up front when the packet's momentum content exceeds what
/// the store's mesh can represent. The quadrature is restricted to cells
/// within six widths of the packet center, where all of the Gaussian weight
/// lives.
pub fn expand_wavepacket(
    store: &SpectrumStore,
    spec: &WavepacketSpec,
) -> Result<EigenExpansion, StateError> {
    let bound = store.representable_k();
    let k_content = spec.k_content();
    if !(k_content < bound) {
        return Err(StateError::NotRepresentable { k_content, bound });
    }
    let st = store.stadium();
    let k_top = store
        .entries()
        .iter()
        .map(|e| e.k)
        .fold(k_content, f64::max);
    let dq = field_step(k_top, spec.sigma);
    let grid = FieldGrid::cover(st, dq);
    let reach = 6.0 * spec.sigma;
    let support: Vec<Vec2> = (0..grid.len())
        .map(|i| grid.site(i))
        .filter(|&q| st.contains(q) && dist(q, spec.q0) <= reach)
        .collect();
    let packet: Vec<Complex64> = support.iter().map(|&q| spec.amplitude(q)).collect();
    let w = dq * dq;
    let mut coeffs = Vec::with_capacity(store.entries().len());
    for i in 0..store.entries().len() {
        let vals = store.eval_batch(i, &support)?;
        let c: Complex64 = vals
            .iter()
            .zip(&packet)
            .map(|(e, z)| e.conj() * z)
            .sum::<Complex64>()
            * w;
        coeffs.push((i, store.entries()[i].k, c));
    }
    let captured = coeffs.iter().map(|&(_, _, c)| c.norm_sqr()).sum();
    Ok(EigenExpansion {
        store_id: store_id(store),
        spec: *spec,
        coeffs,
        captured,
        dq,
    })
}

/// `<packet_b | exp(-i H t) | packet_a>` in the shared captured basis, with
/// E = k^2/2. Both expansions must come from the same store.
pub fn evolve_overlap(
    a: &EigenExpansion,
    b: &EigenExpansion,
    t: f64,
) -> Result<Complex64, StateError> {
    if a.store_id != b.store_id || a.coeffs.len() != b.coeffs.len() {
        return Err(StateError::StoreMismatch);
    }
    let s: Complex64 = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&(ia, k, ca), &(ib, _, cb))| {
            debug_assert_eq!(ia, ib);
            cb.conj() * ca * Complex64::from_polar(1.0, -0.5 * k * k * t)
        })
        .sum();
    Ok(s)
}

/// Convenience: does this entry belong to a class whose parities differ from
/// `class`? Entries from a full-boundary store never match.
pub fn opposite_parity(tag: SymmetryTag, class: SymmetryClass) -> bool {
    match tag {
        SymmetryTag::Full => false,
        SymmetryTag::Class(c) => c != class,
    }
}
