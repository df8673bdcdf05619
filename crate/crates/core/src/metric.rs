//! Left-invariant metrics, represented by their inner product at the identity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{
    closure_defect, is_subalgebra, killing_form, orthogonal_complement, LieAlgebra, Subspace, RANK_TOL, RESIDUAL_TOL,
};

/// Relative tolerance for symmetry and positivity of a Gram matrix.
pub const GRAM_TOL: f64 = 1e-12;

/// Inner product on the Lie algebra, as a Gram matrix in the algebra basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    gram: DMatrix<f64>,
    eig_min: f64,
    eig_max: f64,
}

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    gram: Vec<Vec<f64>>,
}

impl Metric {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(Error::Input("Gram matrix must be square and non-empty".into()));
        }
        let scale = gram.amax();
        let asym = (&gram - gram.transpose()).amax();
        if !scale.is_finite() || asym > GRAM_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Input(format!("Gram matrix is not symmetric (defect {asym:e})")));
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let ev = gram.clone().symmetric_eigenvalues();
        let eig_min = ev.min();
        let eig_max = ev.max();
        if !(eig_max > 0.0 && eig_min > GRAM_TOL * eig_max.abs()) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: eig_min });
        }
        Ok(Self { gram, eig_min, eig_max })
    }

    /// Parses `{"gram": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MetricDoc = serde_json::from_str(text)?;
        let n = doc.gram.len();
        if doc.gram.iter().any(|row| row.len() != n) {
            return Err(Error::Input("Gram matrix rows must have equal length".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| doc.gram[i][j]))
    }

    pub fn to_json(&self) -> String {
        let n = self.dim();
        let gram = (0..n).map(|i| (0..n).map(|j| self.gram[(i, j)]).collect()).collect();
        serde_json::to_string(&MetricDoc { gram }).expect("serializable")
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.gram.clone().cholesky().expect("positive definite by construction").inverse();
        (&inv + inv.transpose()) * 0.5
    }

    /// Smallest eigenvalue of the Gram matrix.
    pub fn lambda_min(&self) -> f64 {
        self.eig_min
    }

    /// Largest eigenvalue of the Gram matrix.
    pub fn lambda_max(&self) -> f64 {
        self.eig_max
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.gram * y))
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).sqrt()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be a positive real, got {v}")))
    }
}

/// `g(X_i, X_j) = a_i^2 delta_ij` in the su(2) basis.
pub fn milnor_metric(a1: f64, a2: f64, a3: f64) -> Result<Metric> {
    positive("a1", a1)?;
    positive("a2", a2)?;
    positive("a3", a3)?;
    Metric::new(DMatrix::from_diagonal(&DVector::from_vec(vec![a1 * a1, a2 * a2, a3 * a3])))
}

/// Berger sphere: `beta` along the Hopf fibre `X1`, `alpha` on `span{X2, X3}`.
pub fn berger_metric(alpha: f64, beta: f64) -> Result<Metric> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    milnor_metric(beta.sqrt(), alpha.sqrt(), alpha.sqrt())
}

pub fn scale_metric(g: &Metric, c: f64) -> Result<Metric> {
    positive("scale factor", c)?;
    Ok(Metric { gram: &g.gram * c, eig_min: g.eig_min * c, eig_max: g.eig_max * c })
}

/// Change of coordinates from the algebra basis to block coordinates
/// `(k-coefficients, p-coefficients)` for a direct sum `k + p`.
fn split_coordinates(alg: &LieAlgebra, k: &Subspace, p: &Subspace) -> Result<DMatrix<f64>> {
    let n = alg.dim();
    if k.parent_dim() != n || p.parent_dim() != n || k.dim() + p.dim() != n {
        return Err(Error::NotComplementary { k_dim: k.dim(), p_dim: p.dim(), dim: n });
    }
    let mut frame = DMatrix::zeros(n, n);
    for (j, b) in k.basis().iter().chain(p.basis()).enumerate() {
        frame.set_column(j, b);
    }
    let sv = frame.singular_values();
    if sv.min() <= RANK_TOL * sv.max() {
        return Err(Error::NotComplementary { k_dim: k.dim(), p_dim: p.dim(), dim: n });
    }
    Ok(frame.try_inverse().expect("full rank"))
}

/// Naturally reductive normal form: `h` on `k`, `alpha * (-B)` on the
/// Killing-orthogonal complement `p`, and `k ⟂ p`.
///
/// `h_gram` is expressed in the stored basis of `k`. It need not be
/// bi-invariant (see [`is_bi_invariant_on`]).
pub fn nr_metric(alg: &LieAlgebra, k: &Subspace, h_gram: &DMatrix<f64>, alpha: f64) -> Result<Metric> {
    positive("alpha", alpha)?;
    if k.parent_dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: k.parent_dim() });
    }
    if !is_subalgebra(alg, k) {
        return Err(Error::NotSubalgebra { defect: closure_defect(alg, k) });
    }
    if h_gram.nrows() != k.dim() || h_gram.ncols() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: h_gram.nrows() });
    }
    if k.dim() > 0 {
        // validates symmetry and positivity
        Metric::new(h_gram.clone())?;
    }
    let b = killing_form(alg);
    let p = orthogonal_complement(alg, k, &b)?;
    let to_blocks = split_coordinates(alg, k, &p)?;

    let (m, n) = (k.dim(), alg.dim());
    let pb = p.basis_matrix();
    let neg_b_on_p = -(pb.transpose() * b.matrix() * &pb);
    let mut block = DMatrix::zeros(n, n);
    block.view_mut((0, 0), (m, m)).copy_from(h_gram);
    block.view_mut((m, m), (n - m, n - m)).copy_from(&(neg_b_on_p * alpha));
    let gram = to_blocks.transpose() * block * &to_blocks;
    Metric::new((&gram + gram.transpose()) * 0.5)
}

/// Checks `<[Z,X]_p, Y> + <X, [Z,Y]_p> = 0` for every basis element `Z` of
/// the algebra and `X, Y` in the basis of `p`, where `_p` is projection along
/// `k`. `inner` is an inner product on `p` in its stored basis.
pub fn is_naturally_reductive_split(alg: &LieAlgebra, k: &Subspace, p: &Subspace, inner: &Metric) -> Result<bool> {
    let to_blocks = split_coordinates(alg, k, p)?;
    let (m, dp) = (k.dim(), p.dim());
    if inner.dim() != dp {
        return Err(Error::DimensionMismatch { expected: dp, got: inner.dim() });
    }
    let p_coords = |v: &DVector<f64>| -> DVector<f64> { (&to_blocks * v).rows(m, dp).into_owned() };
    let g = inner.gram();
    let scale = g.amax();
    for zi in 0..alg.dim() {
        let z = alg.basis_vector(zi);
        // ad(Z) restricted to p, followed by projection to p, in p-coordinates
        let mut a = DMatrix::zeros(dp, dp);
        for (j, x) in p.basis().iter().enumerate() {
            a.set_column(j, &p_coords(&alg.bracket_unchecked(&z, x)));
        }
        // skew-symmetry of `a` with respect to `g`
        let defect = (a.transpose() * g + g * &a).amax();
        if defect > RESIDUAL_TOL * scale.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Infinitesimal bi-invariance: `h([z,x], y) + h(x, [z,y]) = 0` for `z, x, y`
/// in the basis of the subalgebra `k`. `h_gram` is in the stored basis of `k`.
pub fn is_bi_invariant_on(alg: &LieAlgebra, k: &Subspace, h_gram: &DMatrix<f64>) -> Result<bool> {
    if h_gram.nrows() != k.dim() || h_gram.ncols() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: h_gram.nrows() });
    }
    let kb = k.basis_matrix();
    let scale = h_gram.amax();
    for z in k.basis() {
        let ad_z = kb.transpose() * alg.ad(z)? * &kb;
        let defect = (ad_z.transpose() * h_gram + h_gram * &ad_z).amax();
        if defect > RESIDUAL_TOL * scale.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}
