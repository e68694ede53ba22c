//! The measurement operator `A(X) = (⟨A_1, X⟩, …, ⟨A_p, X⟩)`, stored as an
//! explicit list of frames.

use rand::Rng;

use crate::error::{arg, dim, Result};
use crate::matrix::{gaussian_matrix, orthonormal_complement, svd, DenseMatrix, RANK_REL_TOL};
use crate::measure::MeasurementNorm;

/// Orthonormality tolerance for factor pairs passed to [`LinearTransformation::restrict`].
pub const FACTOR_ORTH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTransformation {
    m: usize,
    n: usize,
    frames: Vec<DenseMatrix>,
    norm: MeasurementNorm,
}

impl LinearTransformation {
    pub fn new(m: usize, n: usize, frames: Vec<DenseMatrix>) -> Result<Self> {
        if m == 0 || n == 0 {
            return arg(format!("operator domain must be nonempty, got {m}x{n}"));
        }
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.shape() != (m, n)) {
            return dim(format!(
                "frame {i} is {}x{}, expected {m}x{n}",
                f.rows(),
                f.cols()
            ));
        }
        Ok(Self {
            m,
            n,
            frames,
            norm: MeasurementNorm::default(),
        })
    }

    pub fn with_norm(mut self, norm: MeasurementNorm) -> Self {
        self.norm = norm;
        self
    }

    /// Frames `E_k` (elementary matrices in row-major order): `A(X) = vec(X)`.
    pub fn vectorization(m: usize, n: usize) -> Self {
        let frames = (0..m * n)
            .map(|k| {
                let mut e = DenseMatrix::zeros(m, n);
                e.as_mut_slice()[k] = 1.0;
                e
            })
            .collect();
        Self::new(m, n, frames).expect("valid dimensions")
    }

    /// Gaussian ensemble: i.i.d. entries with variance `1/p`, so that
    /// `E‖A(X)‖₂² = ‖X‖_F²`.
    pub fn gaussian<R: Rng + ?Sized>(m: usize, n: usize, p: usize, rng: &mut R) -> Self {
        let std = if p == 0 { 0.0 } else { (1.0 / p as f64).sqrt() };
        let frames = (0..p).map(|_| gaussian_matrix(m, n, std, rng)).collect();
        Self::new(m, n, frames).expect("valid dimensions")
    }

    /// Operator whose frames are an orthonormal basis of the orthogonal
    /// complement of `span(null)`, so its null space is exactly `span(null)`.
    pub fn with_null_space(m: usize, n: usize, null: &[DenseMatrix]) -> Result<Self> {
        let flat: Vec<Vec<f64>> = null.iter().map(|z| z.as_slice().to_vec()).collect();
        let basis = DenseMatrix::from_columns(m * n, &flat);
        let f = svd(&basis)?;
        let k = f.rank();
        let comp = orthonormal_complement(&f.u.leading_columns(k));
        let frames = (0..comp.cols())
            .map(|j| DenseMatrix::from_row_major(m, n, comp.column(j)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, n, frames)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.frames.len()
    }

    /// `min(m, n)`.
    #[inline]
    pub fn r(&self) -> usize {
        self.m.min(self.n)
    }

    pub fn frames(&self) -> &[DenseMatrix] {
        &self.frames
    }

    pub fn norm(&self) -> MeasurementNorm {
        self.norm
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.shape() != (self.m, self.n) {
            return dim(format!(
                "operator acts on {}x{} matrices, got {}x{}",
                self.m,
                self.n,
                x.rows(),
                x.cols()
            ));
        }
        Ok(self.frames.iter().map(|a| a.inner(x)).collect())
    }

    /// `A*(y) = Σ y_i A_i`.
    pub fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix> {
        if y.len() != self.p() {
            return dim(format!(
                "adjoint expects {} values, got {}",
                self.p(),
                y.len()
            ));
        }
        let mut out = DenseMatrix::zeros(self.m, self.n);
        for (a, &yi) in self.frames.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (o, &v) in out.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *o += yi * v;
            }
        }
        Ok(out)
    }

    /// `p × mn` matrix whose row `i` is the row-major flattening of `A_i`.
    pub fn matrix_representation(&self) -> DenseMatrix {
        let entries = self
            .frames
            .iter()
            .flat_map(|a| a.as_slice().iter().copied())
            .collect();
        DenseMatrix::from_row_major(self.p(), self.m * self.n, entries).expect("consistent frames")
    }

    pub fn representation_rank(&self) -> Result<usize> {
        if self.p() == 0 {
            return Ok(0);
        }
        Ok(svd(&self.matrix_representation())?.rank())
    }

    /// Representation of `A` on matrices `U · Diag(x) · Vᵀ`:
    /// `A_{ij} = (Uᵀ A_i V)_{jj}`.
    pub fn restrict(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<RestrictedRepresentation> {
        if u.rows() != self.m || v.rows() != self.n || u.cols() != v.cols() {
            return dim(format!(
                "factor pair {}x{} / {}x{} does not fit a {}x{} operator",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols(),
                self.m,
                self.n
            ));
        }
        let (du, dv) = (u.orthonormality_defect(), v.orthonormality_defect());
        if du > FACTOR_ORTH_TOL || dv > FACTOR_ORTH_TOL {
            return arg(format!(
                "factor pair is not orthonormal (defects {du:e}, {dv:e})"
            ));
        }
        let k = u.cols();
        let mut a = DenseMatrix::zeros(self.p(), k);
        for (i, frame) in self.frames.iter().enumerate() {
            let av = frame.matmul(v);
            for j in 0..k {
                a[(i, j)] = (0..self.m).map(|row| u[(row, j)] * av[(row, j)]).sum();
            }
        }
        Ok(RestrictedRepresentation {
            a,
            u: u.clone(),
            v: v.clone(),
        })
    }

    /// Orthonormal basis of `{X : A(X) = 0}` computed from the right singular
    /// vectors of the matrix representation.
    pub fn null_space_basis(&self) -> Result<NullSpaceBasis> {
        let mn = self.m * self.n;
        let row_space = if self.p() == 0 {
            DenseMatrix::zeros(mn, 0)
        } else {
            let f = svd(&self.matrix_representation())?;
            let top = f.sigma.first().copied().unwrap_or(0.0);
            let k = f
                .sigma
                .iter()
                .take_while(|&&s| top > 0.0 && s > RANK_REL_TOL * top)
                .count();
            f.v.leading_columns(k)
        };
        let flat = orthonormal_complement(&row_space);
        let basis = (0..flat.cols())
            .map(|j| DenseMatrix::from_row_major(self.m, self.n, flat.column(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(NullSpaceBasis {
            dim: basis.len(),
            basis,
            flat,
        })
    }
}

/// `A ∈ R^{p×r}` describing the action of the operator on matrices that are
/// diagonal in the factor pair `(U, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedRepresentation {
    pub a: DenseMatrix,
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl RestrictedRepresentation {
    /// `U · Diag(x) · Vᵀ`.
    pub fn lift(&self, x: &[f64]) -> DenseMatrix {
        DenseMatrix::from_factors(&self.u, x, &self.v)
    }

    /// Largest entrywise deviation from `(Uᵀ A_i V)_{jj}` recomputed on `op`.
    pub fn consistency_defect(&self, op: &LinearTransformation) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, frame) in op.frames().iter().enumerate() {
            let d = self.u.t_matmul(&frame.matmul(&self.v));
            for j in 0..self.a.cols() {
                worst = worst.max((d[(j, j)] - self.a[(i, j)]).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceBasis {
    pub dim: usize,
    pub basis: Vec<DenseMatrix>,
    /// The basis as columns of an `mn × dim` matrix.
    pub flat: DenseMatrix,
}

impl NullSpaceBasis {
    /// `Σ c_k B_k`.
    pub fn combine(&self, coeffs: &[f64]) -> DenseMatrix {
        assert_eq!(coeffs.len(), self.dim);
        let (m, n) = self.basis[0].shape();
        let entries = self.flat.matvec(coeffs);
        DenseMatrix::from_row_major(m, n, entries).expect("finite combination")
    }

    /// Coordinates of the orthogonal projection of `x` onto the null space.
    pub fn coordinates(&self, x: &DenseMatrix) -> Vec<f64> {
        self.flat.t_matvec(x.as_slice())
    }
}
