//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! All vectors are coordinate vectors in the algebra's fixed basis
//! `X_0, ..., X_{n-1}`; the bracket is `[X_i, X_j] = sum_k c[i][j][k] X_k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;
/// Absolute residual allowed in membership tests (bracket closure, ideals).
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Largest Jacobi defect accepted when constructing an algebra.
pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    /// Flattened `c[i][j][k]`, index `(i * dim + j) * dim + k`.
    constants: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LieAlgebraDoc {
    dim: usize,
    brackets: Vec<(usize, usize, Vec<f64>)>,
}

impl LieAlgebra {
    /// Builds an algebra from a full `dim^3` table, rejecting tables that are
    /// not antisymmetric or fail the Jacobi identity.
    pub fn new(dim: usize, constants: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("algebra dimension must be positive".into()));
        }
        if constants.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, got: constants.len() });
        }
        let alg = Self { dim, constants };
        let anti = alg.antisymmetry_defect();
        if anti != 0.0 {
            return Err(Error::NotALieAlgebra { property: "antisymmetry", defect: anti });
        }
        let jac = alg.jacobi_defect();
        if jac > JACOBI_TOL {
            return Err(Error::NotALieAlgebra { property: "the Jacobi identity", defect: jac });
        }
        Ok(alg)
    }

    /// The abelian algebra of the given dimension.
    pub fn abelian(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * dim * dim])
    }

    /// Parses `{"dim": n, "brackets": [[i, j, [c_0, ...]], ...]}`.
    ///
    /// Indices are zero-based; pairs that are not listed bracket to zero and
    /// each listed pair also fixes its transpose by antisymmetry.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LieAlgebraDoc = serde_json::from_str(text)?;
        let n = doc.dim;
        if n == 0 {
            return Err(Error::Input("algebra dimension must be positive".into()));
        }
        let mut c = vec![0.0; n * n * n];
        let mut seen = vec![false; n * n];
        for (i, j, coeffs) in doc.brackets {
            if i >= n || j >= n {
                return Err(Error::Input(format!("bracket index ({i}, {j}) out of range")));
            }
            if coeffs.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: coeffs.len() });
            }
            if i == j && coeffs.iter().any(|&v| v != 0.0) {
                return Err(Error::NotALieAlgebra {
                    property: "antisymmetry",
                    defect: coeffs.iter().fold(0.0, |m, v| m.max(v.abs())),
                });
            }
            for k in 0..n {
                let new_ij = coeffs[k];
                let slot = (i * n + j) * n + k;
                if seen[i * n + j] && c[slot] != new_ij {
                    return Err(Error::Input(format!("conflicting entries for bracket ({i}, {j})")));
                }
                c[slot] = new_ij;
                c[(j * n + i) * n + k] = -new_ij;
            }
            seen[i * n + j] = true;
            seen[j * n + i] = true;
        }
        Self::new(n, c)
    }

    /// Serializes to the sparse JSON form read by [`LieAlgebra::from_json`].
    pub fn to_json(&self) -> String {
        let n = self.dim;
        let mut brackets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let row: Vec<f64> = (0..n).map(|k| self.c(i, j, k)).collect();
                if row.iter().any(|&v| v != 0.0) {
                    brackets.push((i, j, row));
                }
            }
        }
        serde_json::to_string(&LieAlgebraDoc { dim: n, brackets }).expect("serializable")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants[(i * self.dim + j) * self.dim + k]
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// Matrix of `ad x`, so that `ad(x) * y == [x, y]`.
    pub fn ad(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let n = self.dim;
        Ok(DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| x[i] * self.c(i, j, k)).sum()))
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.c(i, j, k) + self.c(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Max-abs component of `[[Xi,Xj],Xk] + [[Xj,Xk],Xi] + [[Xk,Xi],Xj]`
    /// over all basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.c(i, j, l) * self.c(l, k, m)
                                + self.c(j, k, l) * self.c(l, i, m)
                                + self.c(k, i, l) * self.c(l, j, m);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }
}

/// su(2) in the basis
/// `X1 = [[i,0],[0,-i]]`, `X2 = [[0,1],[-1,0]]`, `X3 = [[0,i],[i,0]]`,
/// stored as indices 0, 1, 2 with `[X1,X2] = 2X3` and cyclic.
pub fn su2() -> LieAlgebra {
    let mut c = vec![0.0; 27];
    let mut set = |i: usize, j: usize, k: usize, v: f64| {
        c[(i * 3 + j) * 3 + k] = v;
        c[(j * 3 + i) * 3 + k] = -v;
    };
    set(0, 1, 2, 2.0);
    set(1, 2, 0, 2.0);
    set(2, 0, 1, 2.0);
    LieAlgebra::new(3, c).expect("su(2) constants are a Lie algebra")
}

/// A linear subspace of an algebra, stored with a basis that is orthonormal
/// for the coordinate dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    parent_dim: usize,
    basis: Vec<DVector<f64>>,
}

impl Subspace {
    pub fn zero(parent_dim: usize) -> Self {
        Self { parent_dim, basis: Vec::new() }
    }

    pub fn full(parent_dim: usize) -> Self {
        let basis = (0..parent_dim)
            .map(|i| {
                let mut v = DVector::zeros(parent_dim);
                v[i] = 1.0;
                v
            })
            .collect();
        Self { parent_dim, basis }
    }

    /// Span of the given coordinate vectors.
    ///
    /// The rank is decided by singular values (relative threshold
    /// [`RANK_TOL`]); the stored basis is then obtained by Gram–Schmidt in
    /// input order, so an already orthonormal input is kept as is.
    pub fn span(parent_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        for v in vectors {
            if v.len() != parent_dim {
                return Err(Error::DimensionMismatch { expected: parent_dim, got: v.len() });
            }
        }
        let rank = numerical_rank(parent_dim, vectors);
        let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
        for v in vectors {
            if basis.len() == rank {
                break;
            }
            let mut r = v.clone();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let d = b.dot(&r);
                    r.axpy(-d, b, 1.0);
                }
            }
            let norm = r.norm();
            if norm > RANK_TOL * scale {
                basis.push(r / norm);
            }
        }
        Ok(Self { parent_dim, basis })
    }

    /// Span of the given basis elements `X_i` of the parent algebra.
    pub fn coordinate(parent_dim: usize, indices: &[usize]) -> Result<Self> {
        let vs: Vec<_> = indices
            .iter()
            .map(|&i| {
                if i >= parent_dim {
                    return Err(Error::Input(format!("basis index {i} out of range")));
                }
                let mut v = DVector::zeros(parent_dim);
                v[i] = 1.0;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Self::span(parent_dim, &vs)
    }

    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    /// `parent_dim x dim` matrix whose columns are the basis.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.parent_dim, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            m.set_column(j, b);
        }
        m
    }

    /// Orthogonal projection (coordinate dot product).
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.parent_dim);
        for b in &self.basis {
            out.axpy(b.dot(v), b, 1.0);
        }
        out
    }

    pub fn residual_norm(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.residual_norm(v) <= RESIDUAL_TOL * v.norm().max(1.0)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|b| self.contains(b))
    }

    /// Complement for the coordinate dot product.
    pub fn dot_complement(&self) -> Subspace {
        let n = self.parent_dim;
        let mut vs = self.basis.clone();
        vs.extend((0..n).map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        }));
        let all = Subspace::span(n, &vs).expect("dimensions agree");
        Subspace { parent_dim: n, basis: all.basis[self.dim()..].to_vec() }
    }
}

fn numerical_rank(parent_dim: usize, vectors: &[DVector<f64>]) -> usize {
    if vectors.is_empty() || parent_dim == 0 {
        return 0;
    }
    let mut m = DMatrix::zeros(parent_dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Symmetric bilinear form on the algebra, as a matrix in the fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    matrix: DMatrix<f64>,
}

impl BilinearForm {
    /// Symmetrizes the input; non-square input is rejected.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Input("bilinear form must be square".into()));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix: sym })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * y))
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.matrix.clone().symmetric_eigenvalues()
    }

    pub fn is_negative_definite(&self) -> bool {
        let ev = self.eigenvalues();
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        scale > 0.0 && ev.iter().all(|&v| v < -RANK_TOL * scale)
    }

    pub fn is_nondegenerate(&self) -> bool {
        let ev = self.eigenvalues();
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        scale > 0.0 && ev.iter().all(|&v| v.abs() > RANK_TOL * scale)
    }
}

/// `B[i][j] = trace(ad X_i . ad X_j)`.
pub fn killing_form(alg: &LieAlgebra) -> BilinearForm {
    let n = alg.dim();
    let ads: Vec<DMatrix<f64>> = (0..n).map(|i| alg.ad(&alg.basis_vector(i)).expect("basis vector")).collect();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (&ads[i] * &ads[j]).trace();
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    BilinearForm { matrix: b }
}

/// The `form`-orthogonal complement of `k`.
pub fn orthogonal_complement(alg: &LieAlgebra, k: &Subspace, form: &BilinearForm) -> Result<Subspace> {
    let n = alg.dim();
    if k.parent_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.parent_dim() });
    }
    if form.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: form.dim() });
    }
    if !form.is_nondegenerate() {
        return Err(Error::DegenerateForm);
    }
    // v is B-orthogonal to k iff v is dot-orthogonal to B k.
    let images: Vec<_> = k.basis().iter().map(|b| form.matrix() * b).collect();
    Ok(Subspace::span(n, &images)?.dot_complement())
}

/// Largest norm of the component of `[b_i, b_j]` outside `s`.
pub fn closure_defect(alg: &LieAlgebra, s: &Subspace) -> f64 {
    let b = s.basis();
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        for j in (i + 1)..b.len() {
            worst = worst.max(s.residual_norm(&alg.bracket_unchecked(&b[i], &b[j])));
        }
    }
    worst
}

pub fn is_subalgebra(alg: &LieAlgebra, s: &Subspace) -> bool {
    s.parent_dim() == alg.dim() && closure_defect(alg, s) <= RESIDUAL_TOL
}

/// Lie subalgebra generated by `p`, together with the number of closure
/// steps that enlarged the span.
///
/// Iterates `V <- V + [V, V]` until the rank stops growing.
pub fn generated_subalgebra_with_steps(alg: &LieAlgebra, p: &Subspace) -> (Subspace, usize) {
    let n = alg.dim();
    let mut current = p.clone();
    let mut steps = 0;
    loop {
        let b = current.basis();
        let mut vs: Vec<DVector<f64>> = b.to_vec();
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                vs.push(alg.bracket_unchecked(&b[i], &b[j]));
            }
        }
        let next = Subspace::span(n, &vs).expect("dimensions agree");
        if next.dim() == current.dim() {
            return (current, steps);
        }
        current = next;
        steps += 1;
    }
}

pub fn generated_subalgebra(alg: &LieAlgebra, p: &Subspace) -> Subspace {
    generated_subalgebra_with_steps(alg, p).0
}

/// Hörmander condition at the identity for a left-invariant distribution.
pub fn is_bracket_generating(alg: &LieAlgebra, p: &Subspace) -> bool {
    generated_subalgebra(alg, p).dim() == alg.dim()
}

pub fn is_ideal(alg: &LieAlgebra, a: &Subspace) -> bool {
    (0..alg.dim()).all(|i| {
        let x = alg.basis_vector(i);
        a.basis().iter().all(|v| a.contains(&alg.bracket_unchecked(&x, v)))
    })
}

/// Infinitesimal invariance `ad(k) p ⊆ p`.
pub fn is_ad_invariant(alg: &LieAlgebra, k: &Subspace, p: &Subspace) -> bool {
    k.basis().iter().all(|z| p.basis().iter().all(|v| p.contains(&alg.bracket_unchecked(z, v))))
}
