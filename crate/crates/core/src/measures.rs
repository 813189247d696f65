//! Finite measures, feature tables and the moment operator with its adjoint.
//!
//! At finite support every space in the duality diagram is a coordinate
//! space: measures are weight vectors indexed by the support, the moment
//! space is `ℝ^K`, and the constraint operator is the `n×K` feature table
//! read column-wise (`Q ↦ Σ_z θ(z) Q_z`) or row-wise for its adjoint
//! (`y ↦ (⟨y, θ(z)⟩)_z`). No completion step is needed.

use std::collections::HashSet;
use std::ops::Deref;

use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, Scalar};

/// A labelled point of a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint<S> {
    pub id: String,
    /// Optional coordinates; only instance generators look at them.
    pub coordinates: Option<Vec<S>>,
}

impl<S> SupportPoint<S> {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            coordinates: None,
        }
    }

    pub fn with_coordinates(id: impl Into<String>, coordinates: Vec<S>) -> Self {
        Self {
            id: id.into(),
            coordinates: Some(coordinates),
        }
    }
}

/// Weighted point masses on a finite, ordered support. Weights may be signed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    support: Vec<SupportPoint<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(support: Vec<SupportPoint<S>>, weights: Vec<S>) -> Result<Self> {
        check_dim("measure weights", support.len(), weights.len())?;
        let mut seen = HashSet::with_capacity(support.len());
        for p in &support {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate support id {:?}", p.id)));
            }
        }
        if weights.iter().any(|w| w.is_nan()) {
            return Err(Error::NotANumber("measure weights"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("measure weights must be finite".into()));
        }
        Ok(Self { support, weights })
    }

    /// Measure on an anonymous support labelled `z0, z1, ...`.
    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        let support = (0..weights.len()).map(|i| SupportPoint::new(format!("z{i}"))).collect();
        Self::new(support, weights)
    }

    /// Reference measure: as [`DiscreteMeasure::new`] but every weight must
    /// be strictly positive.
    pub fn reference(support: Vec<SupportPoint<S>>, weights: Vec<S>) -> Result<Self> {
        let m = Self::new(support, weights)?;
        m.ensure_positive()?;
        Ok(m)
    }

    pub fn ensure_positive(&self) -> Result<()> {
        match self.weights.iter().position(|&w| !(w > S::zero())) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidInput(format!(
                "reference weight at {:?} must be strictly positive",
                self.support[i].id
            ))),
        }
    }

    /// Same support, new weights.
    pub fn with_weights(&self, weights: Vec<S>) -> Result<Self> {
        Self::new(self.support.clone(), weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn support(&self) -> &[SupportPoint<S>] {
        &self.support
    }

    pub fn total_mass(&self) -> S {
        self.weights.iter().copied().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.weights.iter().all(|&w| w >= S::zero())
            && (self.total_mass() - S::one()).abs() <= S::lit(1e-12).max(S::epsilon() * S::lit(8.0))
    }

    /// Checks that both measures live on the same support (same ids, same order).
    pub fn same_support(&self, other: &Self) -> Result<()> {
        check_dim("support size", self.len(), other.len())?;
        for (a, b) in self.support.iter().zip(&other.support) {
            if a.id != b.id {
                return Err(Error::SupportMismatch(format!("{:?} vs {:?}", a.id, b.id)));
            }
        }
        Ok(())
    }

    /// `α·self + β·other` on a shared support.
    pub fn combine(&self, alpha: S, other: &Self, beta: S) -> Result<Self> {
        self.same_support(other)?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        self.with_weights(weights)
    }
}

/// The `n×K` feature table `θ`, row `z` holding `θ(z) ∈ ℝ^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> FeatureMap<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * k);
        for row in &rows {
            check_dim("feature row length", k, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, k, data)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidInput("feature map needs at least one feature".into()));
        }
        if rows == 0 {
            return Err(Error::InvalidInput(
                "feature map needs at least one support point".into(),
            ));
        }
        check_dim("feature table entries", rows * cols, data.len())?;
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber("feature table"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Number of support points `n`.
    pub fn n_points(&self) -> usize {
        self.rows
    }

    /// Number of features `K`.
    pub fn n_features(&self) -> usize {
        self.cols
    }

    pub fn row(&self, z: usize) -> &[S] {
        &self.data[z * self.cols..(z + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn entry(&self, z: usize, k: usize) -> S {
        self.data[z * self.cols + k]
    }

    /// Index and value of a feature column that is constant and positive
    /// (a mass feature), if any.
    pub fn mass_feature(&self) -> Option<(usize, S)> {
        (0..self.cols).find_map(|k| {
            let v = self.entry(0, k);
            (v > S::zero() && (0..self.rows).all(|z| self.entry(z, k) == v)).then_some((k, v))
        })
    }

    /// Rows permuted by `perm` (new row `i` is old row `perm[i]`).
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_dim("row permutation", self.rows, perm.len())?;
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Self::from_row_major(self.rows, self.cols, data)
    }
}

/// Moment vector `x ∈ ℝ^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<S>(pub Vec<S>);

impl<S: Scalar> MomentVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber("moment vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("moment values must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

impl<S> Deref for MomentVector<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

/// `Σ_z θ(z)·w_z` for a raw weight slice, accumulated in support order.
pub(crate) fn push_weights<S: Scalar>(features: &FeatureMap<S>, weights: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); features.n_features()];
    for (row, &w) in features.rows().zip(weights) {
        for (acc, &theta) in out.iter_mut().zip(row) {
            *acc = *acc + theta * w;
        }
    }
    out
}

/// `(⟨y, θ(z)⟩)_z` for a raw dual vector.
pub(crate) fn adjoint_raw<S: Scalar>(features: &FeatureMap<S>, y: &[S]) -> Vec<S> {
    features.rows().map(|row| dot(row, y)).collect()
}

/// Moments `Σ_z θ(z) Q_z` of a measure.
pub fn push_moments<S: Scalar>(features: &FeatureMap<S>, measure: &DiscreteMeasure<S>) -> Result<MomentVector<S>> {
    check_dim("push_moments support", features.n_points(), measure.len())?;
    Ok(MomentVector(push_weights(features, measure.weights())))
}

/// Adjoint of the moment operator: `u_z = ⟨y, θ(z)⟩`.
pub fn adjoint_features<S: Scalar>(features: &FeatureMap<S>, y: &[S]) -> Result<Vec<S>> {
    check_dim("adjoint_features dual vector", features.n_features(), y.len())?;
    if y.iter().any(|v| v.is_nan()) {
        return Err(Error::NotANumber("dual vector"));
    }
    Ok(adjoint_raw(features, y))
}

/// Feature table of the marginal constraint on an `m×n` product support.
///
/// Support point `(a_i, b_j)` sits at row `i·n + j` and carries
/// `θ = (e_i, e_j) ∈ ℝ^{m+n}`, so pushed moments are the two marginals and
/// the adjoint maps `(f, g)` to `f ⊕ g`.
pub fn marginal_feature_map<S: Scalar>(m: usize, n: usize) -> Result<FeatureMap<S>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("marginal spaces must be nonempty".into()));
    }
    let k = m + n;
    let mut data = vec![S::zero(); m * n * k];
    for i in 0..m {
        for j in 0..n {
            let row = (i * n + j) * k;
            data[row + i] = S::one();
            data[row + m + j] = S::one();
        }
    }
    FeatureMap::from_row_major(m * n, k, data)
}

/// Support of an `m×n` product space, labelled `a{i}b{j}` in row-major order.
pub fn product_support<S: Scalar>(m: usize, n: usize) -> Vec<SupportPoint<S>> {
    (0..m)
        .flat_map(|i| (0..n).map(move |j| SupportPoint::new(format!("a{i}b{j}"))))
        .collect()
}
