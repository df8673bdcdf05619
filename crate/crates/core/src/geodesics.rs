//! Geodesic flow of left-invariant metrics on SU(2) and diameter estimation.
//!
//! SU(2) is identified with the unit quaternions through `X1 -> i`,
//! `X2 -> j`, `X3 -> k`. A geodesic is carried by its body momentum `M`
//! (a covector in the algebra basis) and body velocity `Omega = g^-1 M`:
//!
//! ```text
//! <dM/dt, X> = <M, [Omega, X]>      dq/dt = q * Omega
//! ```
//!
//! Both are integrated together with classical RK4, renormalising `q` after
//! every step.
//!
//! Diameter estimation uses homogeneity: `diam = max_x d(e, x)`. Geodesics
//! are shot from the identity in lockstep from a triangulated sphere of
//! initial covectors. Whenever two neighbouring rays drift further apart
//! than the match radius, their triangle is bisected on the direction sphere
//! and the new ray is caught up, so the wavefront stays dense (within a ray
//! budget) until it passes the cut locus. Every probe point collects the
//! samples that pass within the match radius, ranked by arrival length plus
//! a link length to the probe. The best candidates are then polished by
//! Newton shooting onto the probe, and the largest resulting distance over
//! all probes is the estimate.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::liealg::{su2, LieAlgebra};
use crate::metric::Metric;
use nalgebra::DVector;

pub type Vec3 = [f64; 3];

/// Unit quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub q: [f64; 4],
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint { q: [1.0, 0.0, 0.0, 0.0] };

    /// Normalises the input; the zero quaternion is rejected.
    pub fn new(q: [f64; 4]) -> Result<Self> {
        let n = norm4(&q);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Input("group point must be a nonzero quaternion".into()));
        }
        Ok(Self { q: q.map(|v| v / n) })
    }

    pub fn norm(&self) -> f64 {
        norm4(&self.q)
    }

    pub fn mul(&self, other: &GroupPoint) -> GroupPoint {
        GroupPoint { q: qmul(&self.q, &other.q) }
    }

    pub fn inverse(&self) -> GroupPoint {
        let [w, x, y, z] = self.q;
        GroupPoint { q: [w, -x, -y, -z] }
    }

    /// Principal logarithm in algebra coordinates (`|v| <= pi`).
    pub fn log(&self) -> Vec3 {
        qlog(&self.q)
    }

    /// Distance in the ambient `R^4`.
    pub fn chord(&self, other: &GroupPoint) -> f64 {
        let d: [f64; 4] = std::array::from_fn(|i| self.q[i] - other.q[i]);
        norm4(&d)
    }
}

#[inline]
fn norm4(q: &[f64; 4]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

#[inline]
fn qmul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// `q * (0, v)`.
#[inline]
fn qmul_pure(a: &[f64; 4], v: &Vec3) -> [f64; 4] {
    [
        -a[1] * v[0] - a[2] * v[1] - a[3] * v[2],
        a[0] * v[0] + a[2] * v[2] - a[3] * v[1],
        a[0] * v[1] - a[1] * v[2] + a[3] * v[0],
        a[0] * v[2] + a[1] * v[1] - a[2] * v[0],
    ]
}

#[inline]
fn conj_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    qmul(&[a[0], -a[1], -a[2], -a[3]], b)
}

fn qlog(q: &[f64; 4]) -> Vec3 {
    let s = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if s < 1e-300 {
        return [0.0; 3];
    }
    let angle = s.atan2(q[0]);
    let f = angle / s;
    [q[1] * f, q[2] * f, q[3] * f]
}

/// `exp(v) = (cos|v|, sin|v| v/|v|)`.
pub fn exp_alg(v: Vec3) -> GroupPoint {
    let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if t == 0.0 {
        return GroupPoint::IDENTITY;
    }
    let s = t.sin() / t;
    GroupPoint { q: [t.cos(), v[0] * s, v[1] * s, v[2] * s] }
}

/// Euler–Arnold right-hand side for a metric on an arbitrary algebra:
/// `dM/dt` with `<dM/dt, X> = <M, [g^-1 M, X]>`.
pub fn euler_arnold_rhs_in(alg: &LieAlgebra, g: &Metric, m: &DVector<f64>) -> Result<DVector<f64>> {
    let n = alg.dim();
    if g.dim() != n || m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if g.dim() != n { g.dim() } else { m.len() } });
    }
    let omega = g.inverse() * m;
    Ok(DVector::from_fn(n, |k, _| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += m[i] * omega[j] * alg.c(j, k, i);
            }
        }
        s
    }))
}

/// Euler–Arnold right-hand side on su(2).
pub fn euler_arnold_rhs(g: &Metric, m: Vec3) -> Result<Vec3> {
    Ok(GeodesicFlow::new(g)?.momentum_rate(&m))
}

/// `<M, g^-1 M>`, twice the kinetic energy; equals the squared speed.
pub fn energy(g: &Metric, m: Vec3) -> Result<f64> {
    Ok(GeodesicFlow::new(g)?.speed_sq(&m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub point: GroupPoint,
    pub momentum: Vec3,
}

/// Precomputed data for integrating geodesics of one metric.
#[derive(Debug, Clone)]
pub struct GeodesicFlow {
    ginv: [[f64; 3]; 3],
    gram: [[f64; 3]; 3],
    /// `ad_t[k][i][j] = c[j][k][i]`, so `dM_k = sum_ij M_i Omega_j ad_t[k][i][j]`.
    ad_t: [[[f64; 3]; 3]; 3],
    lambda_min: f64,
    lambda_max: f64,
}

impl GeodesicFlow {
    pub fn new(g: &Metric) -> Result<Self> {
        if g.dim() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: g.dim() });
        }
        let inv = g.inverse();
        let alg = su2();
        Ok(Self {
            ginv: std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])),
            gram: std::array::from_fn(|i| std::array::from_fn(|j| g.gram()[(i, j)])),
            ad_t: std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| alg.c(j, k, i)))),
            lambda_min: g.lambda_min(),
            lambda_max: g.lambda_max(),
        })
    }

    #[inline]
    pub fn velocity(&self, m: &Vec3) -> Vec3 {
        std::array::from_fn(|i| self.ginv[i][0] * m[0] + self.ginv[i][1] * m[1] + self.ginv[i][2] * m[2])
    }

    #[inline]
    pub fn speed_sq(&self, m: &Vec3) -> f64 {
        let w = self.velocity(m);
        m[0] * w[0] + m[1] * w[1] + m[2] * w[2]
    }

    /// `g`-length of an algebra vector.
    #[inline]
    pub fn length(&self, v: &Vec3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += v[i] * self.gram[i][j] * v[j];
            }
        }
        s.max(0.0).sqrt()
    }

    #[inline]
    fn momentum_rate_with(&self, m: &Vec3, w: &Vec3) -> Vec3 {
        std::array::from_fn(|k| {
            let a = &self.ad_t[k];
            let mut s = 0.0;
            for i in 0..3 {
                s += m[i] * (a[i][0] * w[0] + a[i][1] * w[1] + a[i][2] * w[2]);
            }
            s
        })
    }

    #[inline]
    pub fn momentum_rate(&self, m: &Vec3) -> Vec3 {
        self.momentum_rate_with(m, &self.velocity(m))
    }

    /// One RK4 step of size `h`, then renormalisation of the quaternion.
    #[inline]
    pub fn step(&self, m: &mut Vec3, q: &mut [f64; 4], h: f64) {
        let deriv = |m: &Vec3, q: &[f64; 4]| {
            let w = self.velocity(m);
            (self.momentum_rate_with(m, &w), qmul_pure(q, &w))
        };
        let add3 = |a: &Vec3, b: &Vec3, s: f64| -> Vec3 { std::array::from_fn(|i| a[i] + s * b[i]) };
        let add4 = |a: &[f64; 4], b: &[f64; 4], s: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + s * b[i]) };
        let (k1m, k1q) = deriv(m, q);
        let (k2m, k2q) = deriv(&add3(m, &k1m, 0.5 * h), &add4(q, &k1q, 0.5 * h));
        let (k3m, k3q) = deriv(&add3(m, &k2m, 0.5 * h), &add4(q, &k2q, 0.5 * h));
        let (k4m, k4q) = deriv(&add3(m, &k3m, h), &add4(q, &k3q, h));
        let h6 = h / 6.0;
        for i in 0..3 {
            m[i] += h6 * (k1m[i] + 2.0 * k2m[i] + 2.0 * k3m[i] + k4m[i]);
        }
        for i in 0..4 {
            q[i] += h6 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
        }
        let n = norm4(q);
        for v in q.iter_mut() {
            *v /= n;
        }
    }

    /// Endpoint of the geodesic with initial momentum `p` at time 1, using
    /// `ceil(|p| / h)` equal steps. Its length is `sqrt(<p, g^-1 p>)`.
    fn shoot(&self, p: &Vec3, h: f64) -> [f64; 4] {
        let len = self.speed_sq(p).sqrt();
        let mut q = GroupPoint::IDENTITY.q;
        if len == 0.0 {
            return q;
        }
        let mut m = p.map(|v| v / len);
        let steps = (len / h).ceil().max(1.0);
        let dt = len / steps;
        for _ in 0..steps as usize {
            self.step(&mut m, &mut q, dt);
        }
        q
    }
}

const UNIT_SPEED_TOL: f64 = 1e-9;

/// States at arc lengths `0, step, 2 step, ..., length` along the unit-speed
/// geodesic with initial momentum `covector0`. A final shorter step lands
/// exactly on `length` when it is not a multiple of `step`.
pub fn integrate_states(g: &Metric, covector0: Vec3, length: f64, step: f64) -> Result<Vec<GeodesicState>> {
    let flow = GeodesicFlow::new(g)?;
    let speed_sq = flow.speed_sq(&covector0);
    if (speed_sq - 1.0).abs() > UNIT_SPEED_TOL {
        return Err(Error::NonUnitSpeed { speed_sq });
    }
    if !(step > 0.0 && length >= 0.0 && length.is_finite()) {
        return Err(Error::Input(format!("need step > 0 and a finite length >= 0 (got step {step}, length {length})")));
    }
    let full = (length / step + 1e-9).floor() as usize;
    let rest = length - full as f64 * step;
    let mut m = covector0;
    let mut q = GroupPoint::IDENTITY.q;
    let mut out = Vec::with_capacity(full + 2);
    out.push(GeodesicState { point: GroupPoint { q }, momentum: m });
    for _ in 0..full {
        flow.step(&mut m, &mut q, step);
        out.push(GeodesicState { point: GroupPoint { q }, momentum: m });
    }
    if rest > 1e-12 * step {
        flow.step(&mut m, &mut q, rest);
        out.push(GeodesicState { point: GroupPoint { q }, momentum: m });
    }
    Ok(out)
}

pub fn integrate_geodesic(g: &Metric, covector0: Vec3, length: f64, step: f64) -> Result<Vec<GroupPoint>> {
    Ok(integrate_states(g, covector0, length, step)?.into_iter().map(|s| s.point).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterParams {
    /// Minimum number of initial directions; the initial mesh is the
    /// smallest cube sphere with at least this many vertices.
    pub n_directions: usize,
    pub n_probes: usize,
    /// Defaults to `0.01 sqrt(lambda_min(g))`, i.e. at most 0.01 of ambient
    /// travel per step.
    pub arc_step: Option<f64>,
    /// Defaults to `4 pi sqrt(lambda_max(g))`.
    pub max_length: Option<f64>,
    /// Ambient (chordal) match radius. When unset, starts at
    /// [`DEFAULT_MATCH_RADIUS`] and grows until every probe is matched.
    pub match_radius: Option<f64>,
    pub seed: u64,
}

pub const DEFAULT_MATCH_RADIUS: f64 = 0.1;

impl Default for DiameterParams {
    fn default() -> Self {
        Self { n_directions: 2000, n_probes: 20000, arc_step: None, max_length: None, match_radius: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub value: f64,
    /// Initial directions actually used.
    pub n_directions: usize,
    pub n_probes: usize,
    pub arc_step: f64,
    pub match_radius: f64,
    pub max_length: f64,
    pub seed: u64,
    /// Rays shot, including those inserted to keep the wavefront dense.
    pub n_rays: usize,
    /// Probes whose distance was polished by Newton shooting.
    pub refined_probes: usize,
    /// Probe attaining the estimate.
    pub farthest: GroupPoint,
}

fn quad_form(a: &[[f64; 3]; 3], v: &Vec3) -> f64 {
    (0..3).map(|i| v[i] * (a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])).sum::<f64>().max(0.0)
}

/// Rotates `v` by the unit quaternion `rot`.
fn rotate(rot: &[f64; 4], v: &Vec3) -> Vec3 {
    let t = qmul(&qmul_pure(rot, v), &[rot[0], -rot[1], -rot[2], -rot[3]]);
    [t[1], t[2], t[3]]
}

fn normalize3(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

/// Triangulated cube sphere with `6 m^2 + 2` vertices, the smallest such
/// mesh with at least `n` vertices. Vertices are unit vectors rotated by
/// `rot`.
fn cube_sphere(n: usize, rot: &[f64; 4]) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut m = 1i32;
    while 6 * (m as usize).pow(2) + 2 < n {
        m += 1;
    }
    let mut ids: HashMap<[i32; 3], u32> = HashMap::new();
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    let mut id = |c: [i32; 3], verts: &mut Vec<Vec3>| -> u32 {
        *ids.entry(c).or_insert_with(|| {
            // equal-angle spacing on each face
            let f = |x: i32| (std::f64::consts::FRAC_PI_4 * x as f64 / m as f64).tan();
            let v = normalize3([f(c[0]), f(c[1]), f(c[2])]);
            verts.push(rotate(rot, &v));
            (verts.len() - 1) as u32
        })
    };
    for axis in 0..3 {
        for side in [-m, m] {
            // face lattice coordinates -m, -m + 2, ..., m
            let point = |i: i32, j: i32| -> [i32; 3] {
                let mut c = [0; 3];
                c[axis] = side;
                c[(axis + 1) % 3] = 2 * i - m;
                c[(axis + 2) % 3] = 2 * j - m;
                c
            };
            for i in 0..m {
                for j in 0..m {
                    let a = id(point(i, j), &mut verts);
                    let b = id(point(i + 1, j), &mut verts);
                    let c = id(point(i + 1, j + 1), &mut verts);
                    let d = id(point(i, j + 1), &mut verts);
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
            }
        }
    }
    (verts, tris)
}

/// `V min(D, median D) V^T` for the eigendecomposition `g = V D V^T`.
fn direction_shaping(g: &Metric) -> [[f64; 3]; 3] {
    let eig = g.gram().clone().symmetric_eigen();
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[1];
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            (0..3).map(|k| eig.eigenvectors[(a, k)] * eig.eigenvalues[k].min(med) * eig.eigenvectors[(b, k)]).sum()
        })
    })
}

/// Uniform map `[0,1)^3 -> S^3`.
fn cube_to_sphere(u: [f64; 3]) -> [f64; 4] {
    let tau = std::f64::consts::TAU;
    let a = (1.0 - u[0]).sqrt();
    let b = u[0].sqrt();
    [b * (tau * u[2]).cos(), a * (tau * u[1]).sin(), a * (tau * u[1]).cos(), b * (tau * u[2]).sin()]
}

/// The central element `-1` followed by a Cranley–Patterson shifted
/// additive recurrence sequence with generalised golden-ratio steps.
fn probe_points(n: usize, shift: [f64; 3]) -> Vec<[f64; 4]> {
    // real root of x^4 = x + 1
    let phi3 = 1.220_744_084_605_759_5_f64;
    let alpha = [1.0 / phi3, 1.0 / (phi3 * phi3), 1.0 / (phi3 * phi3 * phi3)];
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push([-1.0, 0.0, 0.0, 0.0]);
    }
    for i in 1..n {
        let u = std::array::from_fn(|d| (shift[d] + i as f64 * alpha[d]).fract());
        out.push(cube_to_sphere(u));
    }
    out
}

/// Uniform cell grid over `[-1, 1]^4` holding probe indices.
struct ProbeGrid {
    cell: f64,
    side: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl ProbeGrid {
    fn new(probes: &[[f64; 4]], cell: f64) -> Self {
        let side = (2.0 / cell).ceil() as usize + 1;
        let ncells = side.pow(4);
        let key = |p: &[f64; 4]| -> usize { p.iter().fold(0, |acc, &x| acc * side + Self::coord(x, cell, side)) };
        let mut counts = vec![0u32; ncells + 1];
        for p in probes {
            counts[key(p) + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; probes.len()];
        for (idx, p) in probes.iter().enumerate() {
            let k = key(p);
            items[fill[k] as usize] = idx as u32;
            fill[k] += 1;
        }
        Self { cell, side, starts: counts, items }
    }

    #[inline]
    fn coord(x: f64, cell: f64, side: usize) -> usize {
        (((x + 1.0) / cell).floor().max(0.0) as usize).min(side - 1)
    }

    /// Calls `f` with every probe index in the cells adjacent to `q`.
    #[inline]
    fn for_near(&self, q: &[f64; 4], mut f: impl FnMut(usize)) {
        let c: [usize; 4] = std::array::from_fn(|i| Self::coord(q[i], self.cell, self.side));
        let range = |x: usize| x.saturating_sub(1)..=(x + 1).min(self.side - 1);
        for a in range(c[0]) {
            for b in range(c[1]) {
                for d in range(c[2]) {
                    let base = ((a * self.side + b) * self.side + d) * self.side;
                    let lo = self.starts[base + c[3].saturating_sub(1)] as usize;
                    let hi = self.starts[base + (c[3] + 1).min(self.side - 1) + 1] as usize;
                    for &idx in &self.items[lo..hi] {
                        f(idx as usize);
                    }
                }
            }
        }
    }
}

const MIN_GRID_CELL: f64 = 0.04;
const CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    dir: u32,
    step: u32,
}

const EMPTY: Candidate = Candidate { score: f64::INFINITY, dir: u32::MAX, step: 0 };

/// Keeps the best few candidates per probe, at most one per direction,
/// sorted by score.
fn offer(slots: &mut [Candidate; CANDIDATES], c: Candidate) {
    if let Some(pos) = slots.iter().position(|s| s.dir == c.dir) {
        if c.score >= slots[pos].score {
            return;
        }
        slots[pos] = c;
    } else if c.score < slots[CANDIDATES - 1].score {
        slots[CANDIDATES - 1] = c;
    } else {
        return;
    }
    slots.sort_by(|a, b| a.score.total_cmp(&b.score));
}

struct CoarsePass {
    candidates: Vec<[Candidate; CANDIDATES]>,
    unmatched: usize,
    /// Initial unit-speed covector of every ray, inserted ones included.
    covectors: Vec<Vec3>,
}

/// Records samples against the probes within the match radius.
struct Matcher<'a> {
    flow: &'a GeodesicFlow,
    probes: &'a [[f64; 4]],
    grid: ProbeGrid,
    eps_sq: f64,
    query_gap_sq: f64,
    /// Gram matrix of the metric clipped at its median eigenvalue. Offsets
    /// along stiff directions cost far less than their `g`-length once the
    /// wavefront can bend towards them, so ranking uses this cheaper norm.
    link_gram: [[f64; 3]; 3],
    candidates: Vec<[Candidate; CANDIDATES]>,
    /// Rigorous upper bound for each probe's distance: arrival plus the
    /// `g`-length of the joining one-parameter curve.
    upper: Vec<f64>,
    unmatched: usize,
}

impl Matcher<'_> {
    /// Offers the sample to nearby probes. Returns true when some probe
    /// already certifies that the sample lies closer to the identity than
    /// its arrival length, so the ray has stopped minimising.
    fn visit(&mut self, ray: usize, q: &[f64; 4], last: &mut Option<[f64; 4]>, k: u32, h: f64) -> bool {
        if let Some(prev) = last {
            let gap: f64 = (0..4).map(|i| (q[i] - prev[i]).powi(2)).sum();
            if gap < self.query_gap_sq {
                return false;
            }
        }
        *last = Some(*q);
        let t = k as f64 * h;
        let mut beaten = false;
        let (flow, probes, eps_sq, lg) = (self.flow, self.probes, self.eps_sq, &self.link_gram);
        let (candidates, upper, unmatched) = (&mut self.candidates, &mut self.upper, &mut self.unmatched);
        self.grid.for_near(q, |pi| {
            let p = &probes[pi];
            let dist_sq: f64 = (0..4).map(|i| (q[i] - p[i]).powi(2)).sum();
            if dist_sq > eps_sq {
                return;
            }
            let slots = &mut candidates[pi];
            if slots[0].score.is_infinite() {
                *unmatched -= 1;
            }
            let v = qlog(&conj_mul(q, p));
            let link = flow.length(&v);
            // d(e, q) <= d(e, p) + d(p, q) <= upper + link
            if t > upper[pi] + link + DEAD_MARGIN * h {
                beaten = true;
            }
            upper[pi] = upper[pi].min(t + link);
            let cheap = quad_form(lg, &v).sqrt();
            offer(slots, Candidate { score: t + cheap, dir: ray as u32, step: k });
        });
        beaten
    }
}

/// Slack, in arc steps, before a ray is declared past its cut point.
const DEAD_MARGIN: f64 = 1.0;

struct Ray {
    /// Point of the direction sphere the ray was launched from.
    u: Vec3,
    m: Vec3,
    q: [f64; 4],
    last: Option<[f64; 4]>,
    /// Past its cut point; edges between two such rays are not split.
    dead: bool,
}

/// Rays whose neighbours on the wavefront drift further apart than the
/// match radius get a new ray between them, launched from the midpoint of
/// their directions and integrated up to the current time.
const SPLIT_EVERY: u32 = 4;
const MIN_SPLIT_CHORD: f64 = 1e-4;
const MAX_RAY_FACTOR: usize = 16;
/// Refinement demand follows the match radius rather than the initial mesh,
/// so coarse meshes still get a workable budget.
const MIN_RAY_BUDGET: usize = 40_000;

struct Front<'a> {
    flow: &'a GeodesicFlow,
    shaping: [[f64; 3]; 3],
    h: f64,
    rays: Vec<Ray>,
    covectors: Vec<Vec3>,
    tris: Vec<[u32; 3]>,
    mids: HashMap<(u32, u32), u32>,
    max_rays: usize,
}

impl Front<'_> {
    fn covector(&self, u: &Vec3) -> Vec3 {
        let v: Vec3 = std::array::from_fn(|a| (0..3).map(|b| self.shaping[a][b] * u[b]).sum());
        let s = self.flow.speed_sq(&v).sqrt();
        v.map(|x| x / s)
    }

    fn launch(&mut self, u: Vec3) -> usize {
        let p = self.covector(&u);
        self.covectors.push(p);
        self.rays.push(Ray { u, m: p, q: GroupPoint::IDENTITY.q, last: None, dead: false });
        self.rays.len() - 1
    }

    /// Midpoint ray of edge `(a, b)`, created and caught up to step `k` if
    /// needed.
    fn midpoint(&mut self, a: u32, b: u32, k: u32, matcher: &mut Matcher) -> Option<u32> {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.mids.get(&key) {
            return Some(m);
        }
        let (ua, ub) = (self.rays[a as usize].u, self.rays[b as usize].u);
        let chord: f64 = (0..3).map(|i| (ua[i] - ub[i]).powi(2)).sum::<f64>().sqrt();
        if chord < MIN_SPLIT_CHORD {
            return None;
        }
        let idx = self.launch(normalize3(std::array::from_fn(|i| ua[i] + ub[i])));
        let ray = &mut self.rays[idx];
        for j in 0..k {
            ray.dead |= matcher.visit(idx, &ray.q, &mut ray.last, j, self.h);
            self.flow.step(&mut ray.m, &mut ray.q, self.h);
        }
        self.mids.insert(key, idx as u32);
        Some(idx as u32)
    }

    fn chord_sq(&self, a: u32, b: u32) -> f64 {
        let (x, y) = (&self.rays[a as usize].q, &self.rays[b as usize].q);
        (0..4).map(|i| (x[i] - y[i]).powi(2)).sum()
    }

    fn dir_chord_sq(&self, a: u32, b: u32) -> f64 {
        let (x, y) = (&self.rays[a as usize].u, &self.rays[b as usize].u);
        (0..3).map(|i| (x[i] - y[i]).powi(2)).sum()
    }

    /// Bisects triangles until every live edge is within `eps` on the
    /// group or cannot be split further. Triangles are always cut along
    /// their longest edge on the direction sphere, which keeps them well
    /// shaped however strongly the flow distorts them.
    fn split(&mut self, eps: f64, k: u32, matcher: &mut Matcher) {
        let eps_sq = eps * eps;
        let mut i = 0;
        while i < self.tris.len() && self.rays.len() < self.max_rays {
            let [a, b, c] = self.tris[i];
            let edges = [(a, b, c), (b, c, a), (c, a, b)];
            let stretched = edges.iter().any(|&(x, y, _)| {
                let live = !(self.rays[x as usize].dead && self.rays[y as usize].dead);
                live && self.chord_sq(x, y) > eps_sq
            });
            if stretched {
                let (x, y, z) = edges
                    .into_iter()
                    .max_by(|e, f| self.dir_chord_sq(e.0, e.1).total_cmp(&self.dir_chord_sq(f.0, f.1)))
                    .unwrap();
                if let Some(m) = self.midpoint(x, y, k, matcher) {
                    self.tris[i] = [x, m, z];
                    self.tris.push([m, y, z]);
                    continue;
                }
            }
            i += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn coarse_pass(
    flow: &GeodesicFlow,
    shaping: [[f64; 3]; 3],
    mesh: &(Vec<Vec3>, Vec<[u32; 3]>),
    probes: &[[f64; 4]],
    h: f64,
    max_length: f64,
    eps: f64,
) -> CoarsePass {
    let mut matcher = Matcher {
        flow,
        probes,
        // cells no smaller than the radius keep the 3^4 neighbourhood exhaustive
        grid: ProbeGrid::new(probes, eps.max(MIN_GRID_CELL)),
        eps_sq: eps * eps,
        query_gap_sq: (0.25 * eps) * (0.25 * eps),
        link_gram: shaping,
        candidates: vec![[EMPTY; CANDIDATES]; probes.len()],
        upper: vec![f64::INFINITY; probes.len()],
        unmatched: probes.len(),
    };
    let mut front = Front {
        flow,
        shaping,
        h,
        rays: Vec::new(),
        covectors: Vec::new(),
        tris: mesh.1.clone(),
        mids: HashMap::new(),
        max_rays: (MAX_RAY_FACTOR * mesh.0.len()).max(MIN_RAY_BUDGET),
    };
    for &u in &mesh.0 {
        front.launch(u);
    }

    let mut k: u32 = 0;
    loop {
        let t = k as f64 * h;
        for (d, ray) in front.rays.iter_mut().enumerate() {
            ray.dead |= matcher.visit(d, &ray.q, &mut ray.last, k, h);
        }
        if t >= max_length {
            break;
        }
        // every later sample arrives after `t`, so once `t` passes every
        // probe's best score nothing can improve
        if matcher.unmatched == 0 && k.is_multiple_of(8) {
            let worst = matcher.candidates.iter().map(|c| c[0].score).fold(0.0, f64::max);
            if t >= worst {
                break;
            }
        }
        for ray in front.rays.iter_mut() {
            flow.step(&mut ray.m, &mut ray.q, h);
        }
        k += 1;
        if k.is_multiple_of(SPLIT_EVERY) {
            front.split(eps, k, &mut matcher);
        }
    }
    CoarsePass { candidates: matcher.candidates, unmatched: matcher.unmatched, covectors: front.covectors }
}

/// Newton shooting from the identity onto `target`, starting at momentum
/// `p0`. Returns the length of the converged geodesic.
fn shoot_onto(flow: &GeodesicFlow, target: &[f64; 4], p0: Vec3, h: f64) -> Option<f64> {
    const TOL: f64 = 1e-10;
    const MAX_ITERS: usize = 16;
    let residual = |p: &Vec3| -> Vector3<f64> {
        let end = flow.shoot(p, h);
        Vector3::from(qlog(&conj_mul(target, &end)))
    };
    let scale = flow.lambda_max.sqrt();
    let mut p = Vector3::from(p0);
    let mut r = residual(&p.into());
    for _ in 0..MAX_ITERS {
        if r.norm() < TOL {
            return Some(flow.speed_sq(&p.into()).sqrt());
        }
        let fd = 1e-7 * p.norm().max(1e-3 * scale);
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let mut pj = p;
            pj[j] += fd;
            jac.set_column(j, &((residual(&pj.into()) - r) / fd));
        }
        let delta = jac.lu().solve(&(-r))?;
        // damped update; cap the move so we stay on the same branch
        let cap = 0.5 * p.norm().max(scale);
        let mut step = if delta.norm() > cap { cap / delta.norm() } else { 1.0 };
        let mut accepted = false;
        for _ in 0..8 {
            let trial = p + delta * step;
            let rt = residual(&trial.into());
            if rt.norm() < r.norm() {
                p = trial;
                r = rt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (r.norm() < TOL).then(|| flow.speed_sq(&p.into()).sqrt())
}

fn refine_probe(
    flow: &GeodesicFlow,
    covectors: &[Vec3],
    probe: &[f64; 4],
    slots: &[Candidate; CANDIDATES],
    h: f64,
) -> f64 {
    let mut best = slots[0].score;
    for c in slots.iter().filter(|c| c.score.is_finite()) {
        let p0 = if c.step == 0 {
            // from the identity: one-parameter subgroup guess
            let v = qlog(probe);
            std::array::from_fn(|i| flow.gram[i][0] * v[0] + flow.gram[i][1] * v[1] + flow.gram[i][2] * v[2])
        } else {
            let t = c.step as f64 * h;
            covectors[c.dir as usize].map(|v| v * t)
        };
        if let Some(len) = shoot_onto(flow, probe, p0, h) {
            best = best.min(len);
        }
    }
    best
}

/// Eccentricity of the identity, estimated by geodesic shooting.
pub fn diameter(g: &Metric, params: &DiameterParams) -> Result<DiameterEstimate> {
    let flow = GeodesicFlow::new(g)?;
    if params.n_directions == 0 || params.n_probes == 0 {
        return Err(Error::Input("need at least one direction and one probe".into()));
    }
    let h = params.arc_step.unwrap_or(0.01 * flow.lambda_min.sqrt());
    let max_length = params.max_length.unwrap_or(4.0 * std::f64::consts::PI * flow.lambda_max.sqrt());
    if !(h > 0.0 && max_length > 0.0) {
        return Err(Error::Input("arc step and max length must be positive".into()));
    }
    if let Some(eps) = params.match_radius {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Input("match radius must be positive".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rot = cube_to_sphere(rng.random());
    let shift: [f64; 3] = rng.random();

    let shaping = direction_shaping(g);
    let mesh = cube_sphere(params.n_directions, &rot);
    let probes = probe_points(params.n_probes, shift);

    let mut eps = params.match_radius.unwrap_or(DEFAULT_MATCH_RADIUS);
    let coarse = loop {
        let pass = coarse_pass(&flow, shaping, &mesh, &probes, h, max_length, eps);
        if pass.unmatched == 0 {
            break pass;
        }
        if params.match_radius.is_some() || eps >= 1.0 {
            return Err(Error::UnmatchedProbes { unmatched: pass.unmatched, match_radius: eps });
        }
        eps *= 1.5;
    };

    // Refine in decreasing order of the coarse upper bound; a probe whose
    // coarse bound is below the best refined value cannot change the max.
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| coarse.candidates[b][0].score.total_cmp(&coarse.candidates[a][0].score).then(a.cmp(&b)));
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = order[0];
    let mut refined = 0;
    const BATCH: usize = 32;
    for chunk in order.chunks(BATCH) {
        let live: Vec<usize> = chunk.iter().copied().filter(|&i| coarse.candidates[i][0].score > best).collect();
        if live.is_empty() {
            break;
        }
        let values: Vec<f64> = live
            .par_iter()
            .map(|&i| refine_probe(&flow, &coarse.covectors, &probes[i], &coarse.candidates[i], h))
            .collect();
        refined += live.len();
        for (&i, &v) in live.iter().zip(&values) {
            if v > best {
                best = v;
                best_idx = i;
            }
        }
    }

    Ok(DiameterEstimate {
        value: best,
        n_directions: mesh.0.len(),
        n_probes: params.n_probes,
        arc_step: h,
        match_radius: eps,
        max_length,
        seed: params.seed,
        n_rays: coarse.covectors.len(),
        refined_probes: refined,
        farthest: GroupPoint { q: probes[best_idx] },
    })
}
