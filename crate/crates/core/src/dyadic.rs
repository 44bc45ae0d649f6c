//! Dyadic Block Sketching: a ledger of FD/RFD blocks whose sketch sizes double from one
//! block to the next, each block capped in size so that the stacked sketch keeps a global
//! spectral-error bound. When the ledger would need more sketch rows than the ambient
//! dimension, an exact dense covariance takes over.
//!
//! Two update rules are provided. [`UpdateRule::Standard`] runs a full shrink step per row
//! and recombines the global inverse core after each row. [`UpdateRule::Fast`] appends rows
//! to a doubled buffer, shrinks only when the buffer is full, and extends the global inverse
//! core by a bordered rank-1 formula in between.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::numerics::{dot, norm_sq, spd_inverse, DenseMatrix};
use crate::sketch::{
    woodbury_inverse_apply, woodbury_quadratic, AlphaRule, DenseCovariance, ShrinkOutcome,
    SketchKind, SketchState,
};
use crate::tolerances::{BORDERED_SCHUR_MIN, SHRINK_NONZERO};

/// Snapshot format version written by [`DyadicSketch::to_snapshot_json`].
pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_FORMAT: &str = "dyadic-sketch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UpdateRule {
    /// Shrink per row, new block when the size passes `ε·l₀`.
    Standard,
    /// Doubled buffer, shrink every `length` rows, new block when the size passes `ε/2·l₀`.
    #[default]
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicConfig {
    /// Sketch size of the first block.
    pub l0: usize,
    /// Error parameter ε.
    pub epsilon: f64,
    pub lambda: f64,
    pub kind: SketchKind,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
    #[serde(default)]
    pub rule: UpdateRule,
}

impl DyadicConfig {
    pub fn new(l0: usize, epsilon: f64, lambda: f64, kind: SketchKind) -> Self {
        Self {
            l0,
            epsilon,
            lambda,
            kind,
            alpha_rule: AlphaRule::Full,
            rule: UpdateRule::Fast,
        }
    }

    pub fn with_rule(mut self, rule: UpdateRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_alpha_rule(mut self, rule: AlphaRule) -> Self {
        self.alpha_rule = rule;
        self
    }

    /// Per-block size cap: `ε·l₀` for the standard rule, `ε/2·l₀` for the fast rule.
    pub fn size_cap(&self) -> f64 {
        match self.rule {
            UpdateRule::Standard => self.epsilon * self.l0 as f64,
            UpdateRule::Fast => 0.5 * self.epsilon * self.l0 as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.l0 == 0 {
            return Err(Error::InvalidArgument("l0 must be positive".into()));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                range: "(0, inf)",
            });
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: self.lambda,
                range: "(0, inf)",
            });
        }
        Ok(())
    }
}

/// One entry of the block ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    sketch: SketchState,
    size: f64,
    length: usize,
    active: bool,
    rank_seen: usize,
    rows: usize,
    /// Orthonormal basis of the covered rows while the block is exact; dropped on closing.
    #[serde(default)]
    span: Option<DenseMatrix>,
    /// Rank of the covered rows plus the row that closed the block.
    #[serde(default)]
    closing_rank: Option<usize>,
}

impl Block {
    fn new(cfg: &DyadicConfig, length: usize, dim: usize) -> Result<Self> {
        let sketch = match cfg.rule {
            UpdateRule::Standard => SketchState::new(cfg.kind, length, dim, cfg.lambda)?,
            UpdateRule::Fast => SketchState::new_buffered(cfg.kind, length, dim, cfg.lambda)?,
        }
        .with_alpha_rule(cfg.alpha_rule);
        Ok(Self {
            sketch,
            size: 0.0,
            length,
            active: true,
            rank_seen: 0,
            rows: 0,
            span: Some(DenseMatrix::zeros(0, dim)),
            closing_rank: None,
        })
    }

    pub fn sketch(&self) -> &SketchState {
        &self.sketch
    }

    /// Sum of squared norms of the rows the block covers.
    pub fn size(&self) -> f64 {
        self.size
    }

    /// Sketch capacity of the block.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Rank of the covered rows while the block is exact; `length` once a nonzero shrink
    /// has shown that the rows do not fit in the sketch.
    pub fn rank_seen(&self) -> usize {
        self.rank_seen
    }

    /// Whether the sketch still reproduces the covered rows' Gram matrix exactly
    /// (rank at most `length − 1`).
    pub fn is_exact(&self) -> bool {
        self.rank_seen < self.length
    }

    /// Number of stream rows covered.
    pub fn row_count(&self) -> usize {
        self.rows
    }

    /// σ̄ of the block: sum of its shrink values.
    pub fn shrink_sum(&self) -> f64 {
        self.sketch.shrink_total()
    }

    /// Whether `x` adds a direction outside the span of the covered rows.
    fn adds_direction(&self, x: &[f64], threshold: f64) -> bool {
        match &self.span {
            Some(span) => residual(span, x).map_or(true, |r| norm_sq(&r) > threshold),
            None => true,
        }
    }

    /// Whether the sketch would still be exact after absorbing `x`.
    fn absorbs_exactly(&self, x: &[f64], threshold: f64) -> bool {
        self.is_exact() && self.rank_seen + usize::from(self.adds_direction(x, threshold)) < self.length
    }

    /// Tracks the span of the covered rows after `x` was fed to the sketch.
    fn record_row(&mut self, x: &[f64], outcome: Option<ShrinkOutcome>, threshold: f64) -> Result<()> {
        if let Some(span) = &mut self.span {
            if let Some(r) = residual(span, x) {
                let n2 = norm_sq(&r);
                if n2 > threshold {
                    let inv = 1.0 / n2.sqrt();
                    span.push_row(&r.iter().map(|v| v * inv).collect::<Vec<_>>())?;
                    self.rank_seen += 1;
                }
            }
        }
        let shrunk = outcome.is_some_and(|o| o.shrink > threshold);
        if shrunk || self.rank_seen >= self.length {
            self.rank_seen = self.length;
            self.span = None;
        }
        Ok(())
    }

    fn close(&mut self, next_row: &[f64], threshold: f64) {
        let extra = usize::from(self.is_exact() && self.adds_direction(next_row, threshold));
        self.closing_rank = Some(self.rank_seen + extra);
        self.active = false;
        self.span = None;
    }

    #[cfg(test)]
    pub(crate) fn fixture(
        sketch: SketchState,
        size: f64,
        active: bool,
        rank_seen: usize,
        closing_rank: Option<usize>,
    ) -> Self {
        Self {
            length: sketch.capacity(),
            sketch,
            size,
            active,
            rank_seen,
            rows: 0,
            span: None,
            closing_rank,
        }
    }
}

/// Component of `x` orthogonal to the orthonormal rows of `basis` (Gram–Schmidt applied twice
/// for stability); `None` when `x` is zero.
fn residual(basis: &DenseMatrix, x: &[f64]) -> Option<Vec<f64>> {
    if norm_sq(x) == 0.0 {
        return None;
    }
    let mut r = x.to_vec();
    for _ in 0..2 {
        for b in basis.row_iter() {
            let c = dot(b, &r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
        }
    }
    Some(r)
}

/// Stacked sketch `S` (L x d) with `M = (SSᵀ + reg·I)⁻¹`, `reg = λ + α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSketchView {
    s: DenseMatrix,
    gram: DenseMatrix,
    m: DenseMatrix,
    lambda: f64,
    alpha: f64,
}

impl GlobalSketchView {
    /// No rows; `reg = λ`.
    pub fn empty(dim: usize, lambda: f64) -> Self {
        Self {
            s: DenseMatrix::zeros(0, dim),
            gram: DenseMatrix::zeros(0, 0),
            m: DenseMatrix::zeros(0, 0),
            lambda,
            alpha: 0.0,
        }
    }

    pub fn s(&self) -> &DenseMatrix {
        &self.s
    }

    /// `SSᵀ`.
    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn m(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Accumulated RFD counter (zero in FD mode).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reg(&self) -> f64 {
        self.lambda + self.alpha
    }

    /// Number of stacked rows `L`.
    pub fn len(&self) -> usize {
        self.s.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.rows() == 0
    }

    /// Stacks the block below this view and inverts the bordered Gram matrix.
    pub fn combine(&self, block: &Block) -> Result<GlobalSketchView> {
        self.combine_rows(block.sketch.rows(), block.sketch.alpha())
    }

    fn combine_rows(&self, rows: &DenseMatrix, alpha: f64) -> Result<GlobalSketchView> {
        ensure_dim("combine", self.s.cols(), rows.cols())?;
        let reg = self.reg() + alpha;
        if !(reg > 0.0) {
            return Err(Error::Numeric(format!(
                "combined regularizer {reg:e} is not positive"
            )));
        }
        let (p, q) = (self.s.rows(), rows.rows());
        let cross = self.s.cross_gram(rows)?;
        let block_gram = rows.row_gram();
        let n = p + q;
        let mut gram = DenseMatrix::zeros(n, n);
        for i in 0..p {
            for j in 0..p {
                gram.set(i, j, self.gram.get(i, j));
            }
            for j in 0..q {
                gram.set(i, p + j, cross.get(i, j));
                gram.set(p + j, i, cross.get(i, j));
            }
        }
        for i in 0..q {
            for j in 0..q {
                gram.set(p + i, p + j, block_gram.get(i, j));
            }
        }
        let mut shifted = gram.clone();
        shifted.add_diag(reg);
        let m = spd_inverse(&shifted)?;
        Ok(GlobalSketchView {
            s: self.s.vstack(rows)?,
            gram,
            m,
            lambda: self.lambda,
            alpha: self.alpha + alpha,
        })
    }

    /// Appends one row and extends `M` by the bordered formula
    /// `[[M + φφᵀ/ξ, −φ/ξ], [−φᵀ/ξ, 1/ξ]]`, `φ = M S x`, `ξ = ‖x‖² − (Sx)ᵀφ + reg`.
    pub fn border_extend(&mut self, x: &[f64]) -> Result<()> {
        ensure_dim("border_extend", self.s.cols(), x.len())?;
        let sx = self.s.matvec(x)?;
        let phi: Vec<f64> = self.m.row_iter().map(|r| dot(r, &sx)).collect();
        let xx = norm_sq(x);
        let xi = xx - dot(&sx, &phi) + self.reg();
        if !(xi > BORDERED_SCHUR_MIN) {
            return Err(Error::Numeric(format!(
                "bordered Schur complement {xi:e} is not positive"
            )));
        }
        let l = self.s.rows();
        let n = l + 1;
        let mut m = DenseMatrix::zeros(n, n);
        let mut gram = DenseMatrix::zeros(n, n);
        for i in 0..l {
            let mi = self.m.row(i);
            let gi = self.gram.row(i);
            let row = m.row_mut(i);
            for j in 0..l {
                row[j] = mi[j] + phi[i] * phi[j] / xi;
            }
            row[l] = -phi[i] / xi;
            gram.row_mut(i)[..l].copy_from_slice(gi);
            gram.set(i, l, sx[i]);
        }
        for j in 0..l {
            m.set(l, j, -phi[j] / xi);
            gram.set(l, j, sx[j]);
        }
        m.set(l, l, 1.0 / xi);
        gram.set(l, l, xx);
        self.s.push_row(x)?;
        self.m = m;
        self.gram = gram;
        Ok(())
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        woodbury_inverse_apply(&self.s, &self.m, self.reg(), v)
    }

    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        woodbury_quadratic(&self.s, &self.m, self.reg(), x)
    }

    /// `SᵀS + αI` as a dense `d x d` matrix (oracle use).
    pub fn approx_gram(&self) -> DenseMatrix {
        let mut g = self.s.col_gram();
        g.add_diag(self.alpha);
        g
    }
}

/// Either the stacked sketch or, once the fallback engaged, the exact covariance.
#[derive(Debug, Clone, Copy)]
pub enum CovarianceView<'a> {
    Sketched(&'a GlobalSketchView),
    Exact(&'a DenseCovariance),
}

impl CovarianceView<'_> {
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            CovarianceView::Sketched(s) => s.apply_inverse(v),
            CovarianceView::Exact(c) => c.apply_inverse(v),
        }
    }

    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        match self {
            CovarianceView::Sketched(s) => s.quadratic(x),
            CovarianceView::Exact(c) => c.quadratic(x),
        }
    }

    /// Approximation of `XᵀX` without the regularizer (oracle use).
    pub fn approx_gram(&self) -> DenseMatrix {
        match self {
            CovarianceView::Sketched(s) => s.approx_gram(),
            CovarianceView::Exact(c) => c.approx_gram(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CovarianceView::Exact(_))
    }
}

/// What one update did to the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateReport {
    pub opened_block: bool,
    pub shrink: Option<f64>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSketch {
    cfg: DyadicConfig,
    dim: usize,
    blocks: Vec<Block>,
    prefix: GlobalSketchView,
    view: GlobalSketchView,
    fallback: Option<DenseCovariance>,
    rows_seen: usize,
    frobenius_sq: f64,
    block_frobenius_sq: f64,
}

impl DyadicSketch {
    pub fn new(cfg: DyadicConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let first = Block::new(&cfg, cfg.l0, dim)?;
        let prefix = GlobalSketchView::empty(dim, cfg.lambda);
        Ok(Self {
            cfg,
            dim,
            blocks: vec![first],
            view: prefix.clone(),
            prefix,
            fallback: None,
            rows_seen: 0,
            frobenius_sq: 0.0,
            block_frobenius_sq: 0.0,
        })
    }

    pub fn config(&self) -> &DyadicConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Index `B` of the newest block.
    pub fn active_index(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Sketch size of the newest block.
    pub fn active_length(&self) -> usize {
        self.blocks[self.active_index()].length
    }

    pub fn shrink_sums(&self) -> Vec<f64> {
        self.blocks.iter().map(Block::shrink_sum).collect()
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.length).collect()
    }

    /// Sum of the RFD counters of all blocks.
    pub fn alpha_total(&self) -> f64 {
        self.blocks.iter().map(|b| b.sketch.alpha()).sum()
    }

    pub fn fallback_engaged(&self) -> bool {
        self.fallback.is_some()
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// `‖X‖_F²` of the whole stream so far.
    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// Active block index at which the dense fallback takes over:
    /// `⌊log₂(d/l₀ + 1)⌋ − 1`.
    pub fn fallback_threshold(&self) -> i64 {
        fallback_threshold(self.dim, self.cfg.l0)
    }

    /// Current covariance approximation.
    pub fn global_view(&self) -> CovarianceView<'_> {
        match &self.fallback {
            Some(c) => CovarianceView::Exact(c),
            None => CovarianceView::Sketched(&self.view),
        }
    }

    /// The stacked sketch, even after the fallback engaged (it then stays frozen).
    pub fn sketch_view(&self) -> &GlobalSketchView {
        &self.view
    }

    /// The combined inactive blocks.
    pub fn prefix_view(&self) -> &GlobalSketchView {
        &self.prefix
    }

    /// Approximation of `XᵀX` (oracle use).
    pub fn approx_gram(&self) -> DenseMatrix {
        self.global_view().approx_gram()
    }

    fn shrink_threshold(&self) -> f64 {
        let mean = if self.rows_seen > 0 {
            self.frobenius_sq / self.rows_seen as f64
        } else {
            0.0
        };
        SHRINK_NONZERO * mean.max(1.0)
    }

    /// Feeds one row using the configured update rule.
    pub fn update(&mut self, row: &[f64]) -> Result<UpdateReport> {
        ensure_dim("dyadic update", self.dim, row.len())?;
        ensure_finite(row, "dyadic row")?;
        let norm2 = norm_sq(row);
        self.rows_seen += 1;
        self.frobenius_sq += norm2;

        if self.fallback.is_some() || self.active_index() as i64 >= self.fallback_threshold() {
            self.absorb_into_fallback(row)?;
            return Ok(UpdateReport {
                fallback: true,
                ..UpdateReport::default()
            });
        }

        let threshold = self.shrink_threshold();
        let opened = self.maybe_open_block(row, norm2, threshold)?;
        let idx = self.active_index();
        let shrink = match self.cfg.rule {
            UpdateRule::Standard => {
                let block = &mut self.blocks[idx];
                let outcome = block.sketch.update(row)?;
                block.size += norm2;
                block.rows += 1;
                block.record_row(row, Some(outcome), threshold)?;
                self.view = self.prefix.combine(&self.blocks[idx])?;
                Some(outcome.shrink)
            }
            UpdateRule::Fast => {
                let block = &mut self.blocks[idx];
                let outcome = block.sketch.buffered_append(row)?;
                block.size += norm2;
                block.rows += 1;
                block.record_row(row, outcome, threshold)?;
                match outcome {
                    Some(outcome) => {
                        self.view = self.prefix.combine(&self.blocks[idx])?;
                        Some(outcome.shrink)
                    }
                    None => {
                        self.view.border_extend(row)?;
                        None
                    }
                }
            }
        };
        self.block_frobenius_sq += norm2;
        Ok(UpdateReport {
            opened_block: opened,
            shrink,
            fallback: false,
        })
    }

    /// Opens a doubled block when the active one would pass its size cap and could not
    /// absorb `row` without becoming (or staying) inexact.
    fn maybe_open_block(&mut self, row: &[f64], norm2: f64, threshold: f64) -> Result<bool> {
        let cap = self.cfg.size_cap();
        let idx = self.active_index();
        let active = &self.blocks[idx];
        if !(active.size + norm2 > cap) || active.absorbs_exactly(row, threshold) {
            return Ok(false);
        }
        let length = active.length * 2;
        self.prefix = self.prefix.combine(active)?;
        self.blocks[idx].close(row, threshold);
        self.blocks.push(Block::new(&self.cfg, length, self.dim)?);
        Ok(true)
    }

    fn absorb_into_fallback(&mut self, row: &[f64]) -> Result<()> {
        if self.fallback.is_none() {
            let mut gram = self.view.approx_gram();
            gram.add_diag(self.cfg.lambda);
            self.fallback = Some(DenseCovariance::from_gram(gram, self.cfg.lambda)?);
            for b in &mut self.blocks {
                b.active = false;
                b.span = None;
            }
        }
        self.fallback
            .as_mut()
            .expect("fallback engaged above")
            .rank1_update(row)
    }

    /// Verifies the ledger invariants. `stream_rank`, when known, enables the rank term of
    /// the block-count bound.
    pub fn check_invariants(&self, stream_rank: Option<usize>) -> InvariantReport {
        let cap = self.cfg.size_cap();
        let n = self.blocks.len();
        let engaged = self.fallback.is_some();

        // 1: a block only closes once its rows, with the closing row, exceed its exact capacity
        let closed: Vec<(usize, usize)> = self
            .blocks
            .iter()
            .filter_map(|b| b.closing_rank.map(|r| (r, b.length)))
            .collect();
        let worst_margin = closed
            .iter()
            .map(|&(r, len)| r as f64 - len as f64)
            .fold(f64::INFINITY, f64::min);
        let inv1 = InvariantCheck {
            passed: closed.iter().all(|&(r, len)| r >= len),
            measured: if closed.is_empty() { 0.0 } else { worst_margin },
            limit: 0.0,
            detail: "min over closed blocks of closing rank - length (must be >= 0)".into(),
        };

        // 2: stored sketch rows stay below d unless the fallback took over
        let total_rows: usize = self.blocks.iter().map(|b| b.length).sum();
        let inv2 = InvariantCheck {
            passed: engaged || total_rows < self.dim,
            measured: total_rows as f64,
            limit: self.dim as f64,
            detail: if engaged {
                "fallback engaged".into()
            } else {
                "sum of block lengths (must be < d)".into()
            },
        };

        // 3: block sizes stay under the cap, except blocks that are still exact
        let mut worst = 0.0f64;
        let mut ok3 = true;
        for b in self.blocks.iter().filter(|b| !b.is_exact()) {
            worst = worst.max(b.size);
            ok3 &= b.size <= cap;
        }
        let inv3 = InvariantCheck {
            passed: ok3,
            measured: worst,
            limit: cap,
            detail: "largest size of an inexact block vs cap".into(),
        };

        // block count: indices 0..=B with B = ceil(min(log2(k/l0), size/(eps*l0))) + 1
        let size_term = self.block_frobenius_sq / cap;
        let term = match stream_rank {
            Some(k) if k > 0 => size_term.min((k as f64 / self.cfg.l0 as f64).log2()),
            _ => size_term,
        };
        let bound = (term.ceil() + 2.0).max(1.0);
        let count = InvariantCheck {
            passed: n as f64 <= bound,
            measured: n as f64,
            limit: bound,
            detail: "number of blocks vs ceil(min(log2(k/l0), size/(eps*l0))) + 2".into(),
        };

        InvariantReport {
            rank_below_length: inv1,
            rows_below_dim: inv2,
            size_below_cap: inv3,
            block_count: count,
            warning: threshold_warning(self.dim, self.cfg.l0),
        }
    }

    /// Serializes the whole structure to the versioned JSON snapshot format.
    pub fn to_snapshot_json(&self) -> Result<String> {
        let snap = SnapshotRef {
            format: SNAPSHOT_FORMAT,
            version: SNAPSHOT_VERSION,
            sketch: self,
        };
        serde_json::to_string(&snap).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_snapshot_json(json: &str) -> Result<Self> {
        let snap: SnapshotOwned =
            serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unknown format {:?}", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let sk = snap.sketch;
        sk.cfg.validate()?;
        if sk.blocks.is_empty() {
            return Err(Error::Snapshot("snapshot has no blocks".into()));
        }
        for b in &sk.blocks {
            ensure_dim("snapshot block", sk.dim, b.sketch.dim())?;
            if !b.sketch.rows().is_finite() {
                return Err(Error::Snapshot("non-finite sketch rows".into()));
            }
        }
        ensure_dim("snapshot view", sk.dim, sk.view.s.cols())?;
        ensure_dim("snapshot view core", sk.view.s.rows(), sk.view.m.rows())?;
        Ok(sk)
    }

    #[cfg(test)]
    pub(crate) fn with_blocks_for_test(mut self, blocks: Vec<Block>) -> Self {
        self.blocks = blocks;
        self
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format: &'a str,
    version: u32,
    sketch: &'a DyadicSketch,
}

#[derive(Deserialize)]
struct SnapshotOwned {
    format: String,
    version: u32,
    sketch: DyadicSketch,
}

/// `⌊log₂(d/l₀ + 1)⌋ − 1`.
pub fn fallback_threshold(dim: usize, l0: usize) -> i64 {
    ((dim as f64 / l0 as f64 + 1.0).log2().floor() as i64) - 1
}

/// Describes any disagreement between the active-index fallback rule and the
/// "fewer than d sketch rows" reading of the row budget.
fn threshold_warning(dim: usize, l0: usize) -> Option<String> {
    let t = fallback_threshold(dim, l0);
    if t < 0 {
        return None;
    }
    // largest index a block can reach before the fallback absorbs rows
    let rows_at = |b: i64| l0 as f64 * (2f64.powi(b as i32 + 1) - 1.0);
    let reachable = rows_at(t);
    if reachable >= dim as f64 {
        return Some(format!(
            "index rule allows {reachable} sketch rows, not below d = {dim}"
        ));
    }
    if rows_at(t + 1) < dim as f64 {
        return Some(format!(
            "index rule engages the fallback one block early: {} rows would still be below d = {dim}",
            rows_at(t + 1)
        ));
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub rank_below_length: InvariantCheck,
    pub rows_below_dim: InvariantCheck,
    pub size_below_cap: InvariantCheck,
    pub block_count: InvariantCheck,
    pub warning: Option<String>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.rank_below_length.passed
            && self.rows_below_dim.passed
            && self.size_below_cap.passed
            && self.block_count.passed
    }
}
