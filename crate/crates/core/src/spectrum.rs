//! First positive Laplace eigenvalue of a left-invariant metric on SU(2).
//!
//! By Peter–Weyl, `L^2(SU(2))` splits into copies of the irreducible
//! representations `V_n` (dimension `n + 1`), and the Laplacian of the metric
//! `g` acts on each copy as `-sum_ab (g^-1)_ab pi(X_a) pi(X_b)`. Because
//! `g^-1 >= lambda_min(g^-1) * I`, that operator dominates
//! `lambda_min(g^-1) * n(n+2)`, which bounds how far in `n` one must look.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::su2;
use crate::metric::Metric;

type C64 = Complex<f64>;

/// Matrices of `X1, X2, X3` on the `(n + 1)`-dimensional irrep of su(2).
#[derive(Debug, Clone)]
pub struct Irrep {
    n: usize,
    mats: [DMatrix<C64>; 3],
}

impl Irrep {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn mats(&self) -> &[DMatrix<C64>; 3] {
        &self.mats
    }

    /// Weight of basis vector `k`, i.e. `pi(X1) e_k = i * weight(k) * e_k`.
    pub fn weight(&self, k: usize) -> i64 {
        self.n as i64 - 2 * k as i64
    }

    pub fn skew_hermitian_defect(&self) -> f64 {
        self.mats.iter().map(|m| max_abs(&(m + m.adjoint()))).fold(0.0, f64::max)
    }

    /// Max-abs entry of `pi([Xi,Xj]) - [pi(Xi), pi(Xj)]` over all pairs.
    pub fn homomorphism_defect(&self) -> f64 {
        let alg = su2();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut lhs = DMatrix::<C64>::zeros(self.dim(), self.dim());
                for k in 0..3 {
                    lhs += &self.mats[k] * C64::new(alg.c(i, j, k), 0.0);
                }
                let rhs = &self.mats[i] * &self.mats[j] - &self.mats[j] * &self.mats[i];
                worst = worst.max(max_abs(&(lhs - rhs)));
            }
        }
        worst
    }

    /// Max-abs entry of `-sum pi(Xi)^2 - n(n+2) I`.
    pub fn casimir_defect(&self) -> f64 {
        let d = self.dim();
        let mut cas = DMatrix::<C64>::identity(d, d) * C64::new(casimir_eigenvalue(self.n), 0.0);
        for m in &self.mats {
            cas += m * m;
        }
        max_abs(&cas)
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spin-`n/2` representation in the weight basis `e_0, ..., e_n`, where
/// `pi(X1) = diag(i n, i (n-2), ..., -i n)`.
///
/// With the angular momentum operators `J_z, J_+, J_-` of spin `j = n/2`
/// (basis ordered by decreasing `J_z`), `pi(X1) = 2i J_z`,
/// `pi(X2) = J_+ - J_-` and `pi(X3) = i (J_+ + J_-)`. For `n = 1` these are
/// exactly the defining 2x2 matrices.
pub fn irrep_su2(n: usize) -> Irrep {
    let d = n + 1;
    let j = n as f64 / 2.0;
    let mut x1 = DMatrix::<C64>::zeros(d, d);
    let mut raise = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        let mu = j - k as f64;
        x1[(k, k)] = C64::new(0.0, 2.0 * mu);
        if k > 0 {
            // J_+ e_k = sqrt(j(j+1) - mu(mu+1)) e_{k-1}
            raise[(k - 1, k)] = (j * (j + 1.0) - mu * (mu + 1.0)).sqrt();
        }
    }
    let lower = raise.transpose();
    let x2 = (&raise - &lower).map(|v| C64::new(v, 0.0));
    let x3 = (&raise + &lower).map(|v| C64::new(0.0, v));
    Irrep { n, mats: [x1, x2, x3] }
}

/// Eigenvalue `n(n+2)` of the Casimir `-sum pi(Xi)^2` on the irrep `V_n`.
pub fn casimir_eigenvalue(n: usize) -> f64 {
    (n * (n + 2)) as f64
}

/// `-sum_ab (g^-1)_ab pi(X_a) pi(X_b)`; Hermitian and positive semidefinite.
pub fn laplacian_on_irrep(g: &Metric, rep: &Irrep) -> Result<DMatrix<C64>> {
    if g.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: g.dim() });
    }
    Ok(quadratic_operator(&g.inverse(), &rep.mats, &[0, 1, 2]))
}

fn quadratic_operator(ginv: &DMatrix<f64>, mats: &[DMatrix<C64>; 3], idx: &[usize]) -> DMatrix<C64> {
    let d = mats[0].nrows();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            let w = ginv[(a, b)];
            if w != 0.0 {
                out -= (&mats[ia] * &mats[ib]) * C64::new(w, 0.0);
            }
        }
    }
    // exact Hermitian symmetrization
    (&out + out.adjoint()) * C64::new(0.5, 0.0)
}

fn hermitian_eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Sorted eigenvalues of the Laplacian on `V_n`.
pub fn eigenvalues_on_irrep(g: &Metric, n: usize) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(laplacian_on_irrep(g, &irrep_su2(n))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Only irreps that descend to SO(3) (even `n`).
    pub so3: bool,
    /// Largest `n` examined before giving up on the truncation certificate.
    pub max_n_cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { so3: false, max_n_cap: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub lambda1: f64,
    /// Irrep label achieving the minimum.
    pub witness_n: usize,
    /// Peter–Weyl multiplicity `n + 1` of the witnessing irrep.
    pub witness_multiplicity_dim: usize,
    /// First `n` excluded by the Casimir bound; every irrep at or beyond it
    /// has Laplace eigenvalues above `lambda1`.
    pub truncation_n: usize,
}

pub fn lambda1(g: &Metric) -> Result<SpectrumResult> {
    lambda1_with(g, &SpectrumOptions::default())
}

/// Smallest positive Laplace eigenvalue, with a truncation certificate: the
/// scan stops at the first `N` with `lambda_min(g^-1) N(N+2) > best`.
pub fn lambda1_with(g: &Metric, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    if g.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: g.dim() });
    }
    let ginv = g.inverse();
    let floor = 1.0 / g.lambda_max();
    let (start, stride) = if opts.so3 { (2, 2) } else { (1, 1) };
    scan(start, stride, floor, opts.max_n_cap, |n| {
        let rep = irrep_su2(n);
        let lap = quadratic_operator(&ginv, &rep.mats, &[0, 1, 2]);
        Some(hermitian_eigenvalues(lap)[0])
    })
}

fn scan(
    start: usize,
    stride: usize,
    floor: f64,
    cap: usize,
    mut lowest: impl FnMut(usize) -> Option<f64>,
) -> Result<SpectrumResult> {
    let mut best: Option<(f64, usize)> = None;
    let mut n = start;
    loop {
        if let Some((b, _)) = best {
            if floor * casimir_eigenvalue(n) > b {
                break;
            }
        }
        if n > cap {
            return Err(Error::TruncationCap { cap });
        }
        if let Some(v) = lowest(n) {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, n));
            }
        }
        n += stride;
    }
    let (lambda1, witness_n) = best.expect("at least one irrep examined");
    Ok(SpectrumResult { lambda1, witness_n, witness_multiplicity_dim: witness_n + 1, truncation_n: n })
}

/// Smallest positive eigenvalue of the base `SU(2)/T` of the Hopf fibration,
/// with the metric `g_p` on `p = span{X2, X3}`.
///
/// Functions on the base lift to right-`T`-invariant functions, i.e. the
/// weight-0 vectors of the even irreps; on those the Laplacian of the base
/// is `-sum_ab (g_p^-1)_ab pi(X_a) pi(X_b)` over `a, b` in `{X2, X3}`.
/// `g_p` is given in the basis `(X2, X3)` and must be a multiple of the
/// identity.
pub fn lambda1_quotient(g_p: &Metric) -> Result<f64> {
    if g_p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g_p.dim() });
    }
    let gm = g_p.gram();
    let scale = gm.amax();
    if gm[(0, 1)].abs() > 1e-12 * scale || (gm[(0, 0)] - gm[(1, 1)]).abs() > 1e-12 * scale {
        return Err(Error::NonIsotropic);
    }
    let ginv = g_p.inverse();
    let floor = 1.0 / g_p.lambda_max();
    let res = scan(2, 2, floor, SpectrumOptions::default().max_n_cap, |n| {
        let rep = irrep_su2(n);
        let horiz = quadratic_operator(&ginv, &rep.mats, &[1, 2]);
        let zero: Vec<usize> = (0..rep.dim()).filter(|&k| rep.weight(k) == 0).collect();
        let block = DMatrix::from_fn(zero.len(), zero.len(), |r, c| horiz[(zero[r], zero[c])]);
        hermitian_eigenvalues(block).into_iter().find(|&v| v > 1e-12)
    })?;
    Ok(res.lambda1)
}
