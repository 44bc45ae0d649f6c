//! Single-block deterministic streaming sketches (Frequent Directions and Robust Frequent
//! Directions), the Woodbury inverse application, and the exact dense covariance used as
//! the full-rank fallback.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::numerics::{
    add_outer, dot, norm_sq, rank1_inverse_update_in_place, right_svd, spd_inverse, svd,
    DenseMatrix,
};
use crate::tolerances::{QUADRATIC_CLAMP, RANK_RELATIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchKind {
    /// Frequent Directions: covariance approximated by `SᵀS`.
    Fd,
    /// Robust Frequent Directions: covariance approximated by `SᵀS + αI`.
    Rfd,
}

/// How the RFD counter grows with each shrink value σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlphaRule {
    /// `α ← α + σ`.
    #[default]
    Full,
    /// `α ← α + σ/2`, the rule of the original RFD construction.
    Halved,
}

/// Result of one shrink step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkOutcome {
    /// The squared `l`-th singular value subtracted from every squared singular value.
    pub shrink: f64,
    /// Numerical rank of the buffer before shrinking.
    pub rank: usize,
}

/// One FD or RFD sketch.
///
/// `s` holds the sketch rows. In per-row mode (`update`) it is always `l x d` with a zero
/// last row between updates. In buffered mode (`buffered_append`) rows are appended until
/// the buffer holds `2l` rows, at which point it is shrunk back to `l` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchState {
    kind: SketchKind,
    capacity: usize,
    dim: usize,
    s: DenseMatrix,
    m_diag: Vec<f64>,
    alpha: f64,
    shrink_total: f64,
    lambda: f64,
    pending_rows: usize,
    alpha_rule: AlphaRule,
    rank: usize,
}

impl SketchState {
    /// Empty sketch with `capacity` rows over `dim` columns and regularizer `lambda`.
    pub fn new(kind: SketchKind, capacity: usize, dim: usize, lambda: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("sketch capacity must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("sketch dimension must be positive".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: lambda,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            kind,
            capacity,
            dim,
            s: DenseMatrix::zeros(capacity, dim),
            m_diag: vec![1.0 / lambda; capacity],
            alpha: 0.0,
            shrink_total: 0.0,
            lambda,
            pending_rows: 0,
            alpha_rule: AlphaRule::Full,
            rank: 0,
        })
    }

    /// Same as [`SketchState::new`] but with an empty row buffer, for buffered mode.
    pub fn new_buffered(kind: SketchKind, capacity: usize, dim: usize, lambda: f64) -> Result<Self> {
        let mut s = Self::new(kind, capacity, dim, lambda)?;
        s.s = DenseMatrix::zeros(0, dim);
        s.m_diag.clear();
        Ok(s)
    }

    pub fn with_alpha_rule(mut self, rule: AlphaRule) -> Self {
        self.alpha_rule = rule;
        self
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    /// Sketch size `l`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &DenseMatrix {
        &self.s
    }

    /// Diagonal of `M = (SSᵀ + (λ+α)I)⁻¹`; valid after a per-row update or a buffer shrink.
    pub fn m_diag(&self) -> &[f64] {
        &self.m_diag
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Running sum of all shrink values.
    pub fn shrink_total(&self) -> f64 {
        self.shrink_total
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `λ + α`, the regularizer of the Woodbury form.
    pub fn reg(&self) -> f64 {
        self.lambda + self.alpha
    }

    /// Rows appended since the last buffer shrink.
    pub fn pending_rows(&self) -> usize {
        self.pending_rows
    }

    pub fn alpha_rule(&self) -> AlphaRule {
        self.alpha_rule
    }

    /// Numerical rank seen at the last SVD.
    pub fn last_rank(&self) -> usize {
        self.rank
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        ensure_dim("sketch update", self.dim, row.len())?;
        ensure_finite(row, "sketch row")
    }

    /// One Frequent-Directions step: insert `row` into the zero last row, take the SVD and
    /// shrink every squared singular value by the `l`-th one.
    pub fn fd_update(&mut self, row: &[f64]) -> Result<ShrinkOutcome> {
        if self.kind != SketchKind::Fd {
            return Err(Error::InvalidArgument("fd_update on an RFD sketch".into()));
        }
        self.per_row_update(row)
    }

    /// One Robust-Frequent-Directions step: as [`SketchState::fd_update`], and the shrink
    /// value is accumulated into `α`.
    pub fn rfd_update(&mut self, row: &[f64]) -> Result<ShrinkOutcome> {
        if self.kind != SketchKind::Rfd {
            return Err(Error::InvalidArgument("rfd_update on an FD sketch".into()));
        }
        self.per_row_update(row)
    }

    /// Dispatches to [`SketchState::fd_update`] or [`SketchState::rfd_update`].
    pub fn update(&mut self, row: &[f64]) -> Result<ShrinkOutcome> {
        self.per_row_update(row)
    }

    fn per_row_update(&mut self, row: &[f64]) -> Result<ShrinkOutcome> {
        self.check_row(row)?;
        if self.s.rows() != self.capacity {
            return Err(Error::InvalidArgument(
                "per-row update on a buffered sketch".into(),
            ));
        }
        let last = self.capacity - 1;
        self.s.row_mut(last).copy_from_slice(row);
        let outcome = self.shrink_to_capacity()?;
        Ok(outcome)
    }

    /// Appends `row` below the buffer; shrinks once the buffer holds `2l` rows.
    ///
    /// Returns the shrink outcome when a shrink happened.
    pub fn buffered_append(&mut self, row: &[f64]) -> Result<Option<ShrinkOutcome>> {
        self.check_row(row)?;
        self.s.push_row(row)?;
        self.pending_rows += 1;
        if self.s.rows() >= 2 * self.capacity {
            self.shrink_to_capacity().map(Some)
        } else {
            Ok(None)
        }
    }

    /// SVD of the current rows, shrink by `σ_l²`, keep `l` rows.
    fn shrink_to_capacity(&mut self) -> Result<ShrinkOutcome> {
        let l = self.capacity;
        let (sigma, basis) = singular_pairs(&self.s)?;
        let top = sigma.first().copied().unwrap_or(0.0);
        let rank = if top > 0.0 {
            sigma.iter().filter(|&&x| x > RANK_RELATIVE * top).count()
        } else {
            0
        };
        let shrink = sigma.get(l - 1).map_or(0.0, |x| x * x);

        let mut next = DenseMatrix::zeros(l, self.dim);
        let mut squared = vec![0.0; l];
        for i in 0..l.min(sigma.len()) {
            let kept = (sigma[i] * sigma[i] - shrink).max(0.0);
            if kept > 0.0 {
                let f = kept.sqrt();
                for (dst, src) in next.row_mut(i).iter_mut().zip(basis.row(i)) {
                    *dst = f * src;
                }
                squared[i] = kept;
            }
        }
        self.s = next;
        self.shrink_total += shrink;
        if self.kind == SketchKind::Rfd {
            self.alpha += match self.alpha_rule {
                AlphaRule::Full => shrink,
                AlphaRule::Halved => 0.5 * shrink,
            };
        }
        let reg = self.reg();
        self.m_diag = squared.iter().map(|s2| 1.0 / (reg + s2)).collect();
        self.pending_rows = 0;
        self.rank = rank;
        Ok(ShrinkOutcome { shrink, rank })
    }

    /// `SᵀS` (plus `αI` for RFD) as a dense `d x d` matrix. Test and oracle use only.
    pub fn approx_gram(&self) -> DenseMatrix {
        let mut g = self.s.col_gram();
        if self.kind == SketchKind::Rfd {
            g.add_diag(self.alpha);
        }
        g
    }

    /// `(reg·I + SᵀS)⁻¹ v` through the diagonal core.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        woodbury_inverse_apply(&self.s, &DiagonalCore(&self.m_diag), self.reg(), v)
    }

    /// `‖x‖²` in the inverse sketched covariance.
    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        woodbury_quadratic(&self.s, &DiagonalCore(&self.m_diag), self.reg(), x)
    }
}

/// Sorted singular values and right singular vectors (as rows) of any shape.
fn singular_pairs(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if a.rows() == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, a.cols())));
    }
    if a.rows() <= a.cols() {
        let r = right_svd(a)?;
        Ok((r.singular_values, r.basis))
    } else {
        let r = svd(a)?;
        Ok((r.singular_values, r.right_vectors.transpose()))
    }
}

/// The small `L x L` inverse `M` appearing in the Woodbury form.
pub trait InverseCore {
    fn dim(&self) -> usize;
    fn apply(&self, y: &[f64]) -> Vec<f64>;
}

impl InverseCore for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.row_iter().map(|r| dot(r, y)).collect()
    }
}

/// Diagonal `M` stored as its entries.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalCore<'a>(pub &'a [f64]);

impl InverseCore for DiagonalCore<'_> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.0.iter().zip(y).map(|(m, v)| m * v).collect()
    }
}

fn check_woodbury<C: InverseCore + ?Sized>(s: &DenseMatrix, m: &C, reg: f64, v: &[f64]) -> Result<()> {
    ensure_dim("woodbury: vector vs sketch columns", s.cols(), v.len())?;
    ensure_dim("woodbury: core vs sketch rows", s.rows(), m.dim())?;
    if !(reg > 0.0) {
        return Err(Error::OutOfRange {
            what: "reg",
            value: reg,
            range: "(0, inf)",
        });
    }
    Ok(())
}

/// `(reg·I + SᵀS)⁻¹ v = (v − Sᵀ M S v) / reg`, given `M = (SSᵀ + reg·I)⁻¹`.
///
/// Costs `O(Ld + L²)`; never forms a `d x d` matrix.
pub fn woodbury_inverse_apply<C: InverseCore + ?Sized>(
    s: &DenseMatrix,
    m: &C,
    reg: f64,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_woodbury(s, m, reg, v)?;
    let sv = s.matvec(v)?;
    let msv = m.apply(&sv);
    let correction = s.tmatvec(&msv)?;
    Ok(v.iter()
        .zip(&correction)
        .map(|(a, b)| (a - b) / reg)
        .collect())
}

/// `xᵀ (reg·I + SᵀS)⁻¹ x = (‖x‖² − (Sx)ᵀ M (Sx)) / reg`, clamped at zero for round-off.
pub fn woodbury_quadratic<C: InverseCore + ?Sized>(
    s: &DenseMatrix,
    m: &C,
    reg: f64,
    x: &[f64],
) -> Result<f64> {
    check_woodbury(s, m, reg, x)?;
    let sx = s.matvec(x)?;
    let msx = m.apply(&sx);
    let xx = norm_sq(x);
    let q = (xx - dot(&sx, &msx)) / reg;
    if q >= 0.0 {
        Ok(q)
    } else if -q <= QUADRATIC_CLAMP * (xx / reg).max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Numeric(format!(
            "negative quadratic form {q:e}: core inverse does not match the sketch"
        )))
    }
}

/// Exact regularized covariance `λI + Σ xxᵀ` with its inverse maintained by rank-1 updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseCovariance {
    dim: usize,
    lambda: f64,
    gram: DenseMatrix,
    inv: DenseMatrix,
}

impl DenseCovariance {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: lambda,
                range: "(0, inf)",
            });
        }
        let mut gram = DenseMatrix::identity(dim);
        gram = gram.scale(lambda);
        let inv = DenseMatrix::identity(dim).scale(1.0 / lambda);
        Ok(Self {
            dim,
            lambda,
            gram,
            inv,
        })
    }

    /// Starts from an arbitrary SPD `gram` (which already includes the regularizer `lambda`).
    pub fn from_gram(gram: DenseMatrix, lambda: f64) -> Result<Self> {
        ensure_dim("DenseCovariance::from_gram", gram.rows(), gram.cols())?;
        let inv = spd_inverse(&gram)?;
        Ok(Self {
            dim: gram.rows(),
            lambda,
            gram,
            inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `λI + Σ xxᵀ`.
    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn inverse(&self) -> &DenseMatrix {
        &self.inv
    }

    /// `gram − λI`, the covariance approximation without the regularizer.
    pub fn approx_gram(&self) -> DenseMatrix {
        let mut g = self.gram.clone();
        g.add_diag(-self.lambda);
        g
    }

    /// `gram += rowᵀrow`, inverse by Sherman–Morrison.
    pub fn rank1_update(&mut self, row: &[f64]) -> Result<()> {
        ensure_dim("DenseCovariance::rank1_update", self.dim, row.len())?;
        ensure_finite(row, "covariance row")?;
        rank1_inverse_update_in_place(&mut self.inv, row)?;
        add_outer(&mut self.gram, 1.0, row);
        Ok(())
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.inv.matvec(v)
    }

    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        let w = self.inv.matvec(x)?;
        Ok(dot(x, &w).max(0.0))
    }
}

/// Free-function form of [`DenseCovariance::rank1_update`].
pub fn dense_rank1_update(mut cov: DenseCovariance, row: &[f64]) -> Result<DenseCovariance> {
    cov.rank1_update(row)?;
    Ok(cov)
}
