//! Brute-force entropy minimization on a lattice of candidate measures.

use crate::error::{Error, Result};
use crate::integrands::entropy_of_weights;
use crate::linalg::regularized_solve;
use crate::moment::MomentProblem;
use crate::scalar::{norm_one, Scalar};

/// Largest support the grid oracle accepts.
pub const MAX_GRID_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport<S> {
    /// Smallest entropy found, `None` when no grid point meets the slack.
    pub value: Option<S>,
    pub best: Option<Vec<S>>,
    /// Local Lipschitz estimate `L`.
    pub lipschitz: S,
    /// `L·h`: the oracle value is at least the true optimum minus this.
    pub bound: S,
    pub step: S,
    pub slack: S,
    pub mass_cap: S,
    pub evaluated: u64,
}

impl<S: Scalar> GridReport<S> {
    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }
}

/// [`entropy_oracle_grid_capped`] with the cap read off a mass feature:
/// `(x̂_k + ε)/c` for a column `k` that equals `c > 0` at every point.
pub fn entropy_oracle_grid<S: Scalar>(p: &MomentProblem<S>, step: S, slack: S) -> Result<GridReport<S>> {
    let target = target_of(p)?;
    let (k, c) = p
        .features()
        .mass_feature()
        .ok_or_else(|| Error::InvalidInput("grid oracle needs a mass feature or an explicit cap".into()))?;
    entropy_oracle_grid_capped(p, step, slack, (target[k] + slack) / c)
}

fn target_of<S: Scalar>(p: &MomentProblem<S>) -> Result<&[S]> {
    p.target()
        .map(|t| t.0.as_slice())
        .ok_or_else(|| Error::InvalidInput("grid oracle needs an equality constraint".into()))
}

/// Minimizes `I(Q)` over `Q_z ∈ hℤ ∩ [0, cap]` (or `[−cap, cap]` for weights
/// allowed to be negative) subject to `‖TQ − x̂‖∞ ≤ ε`.
///
/// Every feasible `Q` satisfies `I(Q) ≥ I* + ⟨ȳ, TQ − x̂⟩ ≥ I* − ε‖ȳ‖₁`.
/// The report estimates `‖ȳ‖₁` as the largest least-squares multiplier
/// `‖y(Q)‖₁`, `T*y(Q) ≈ ∇I(Q)`, over grid points with `‖TQ − x̂‖∞ ≤ ε/2`
/// and sets
/// `L = 2(ε/h)·max ‖y(Q)‖₁`, the factor two absorbing the estimation error.
pub fn entropy_oracle_grid_capped<S: Scalar>(
    p: &MomentProblem<S>,
    step: S,
    slack: S,
    mass_cap: S,
) -> Result<GridReport<S>> {
    let target = target_of(p)?;
    let n = p.n_points();
    if n > MAX_GRID_POINTS {
        return Err(Error::TooLarge {
            what: "grid oracle",
            size: n,
            limit: MAX_GRID_POINTS,
        });
    }
    if !(step > S::zero()) || !(slack >= S::zero()) || !(mass_cap > S::zero()) || !mass_cap.is_finite() {
        return Err(Error::InvalidInput(
            "grid step and cap must be positive, slack nonnegative".into(),
        ));
    }
    let fam = p.family();
    let r = p.reference().weights();
    let kf = p.n_features();
    let theta: Vec<Vec<S>> = (0..n).map(|z| p.features().row(z).to_vec()).collect();

    let mut ranges = Vec::with_capacity(n);
    for z in 0..n {
        let dom = fam.conjugate_domain(z);
        let mut lo = if dom.lo.is_finite() { dom.lo * r[z] } else { -mass_cap };
        let mut hi = if dom.hi.is_finite() { dom.hi * r[z] } else { mass_cap };
        lo = lo.max(-mass_cap);
        hi = hi.min(mass_cap);
        ranges.push(((lo / step).ceil(), (hi / step).floor()));
    }

    let mut search = Search {
        theta: &theta,
        target,
        slack,
        step,
        ranges: &ranges,
        kf,
        q: vec![S::zero(); n],
        best: None,
        evaluated: 0,
        largest_multiplier: S::zero(),
        eval: |q: &[S]| entropy_of_weights(fam, r, q),
        multiplier: |q: &[S]| norm_one(&estimate_multiplier(p, q, step)),
    };
    let partial = vec![S::zero(); kf];
    search.descend(0, &partial);
    let evaluated = search.evaluated;
    let largest = search.largest_multiplier;
    let best = search.best;

    let (value, best_q) = match best {
        Some((v, q)) => (Some(v), Some(q)),
        None => (None, None),
    };
    let lipschitz = S::lit(2.0) * slack / step * largest;
    Ok(GridReport {
        value,
        best: best_q,
        lipschitz,
        bound: lipschitz * step,
        step,
        slack,
        mass_cap,
        evaluated,
    })
}

struct Search<'a, S, F, G> {
    theta: &'a [Vec<S>],
    target: &'a [S],
    slack: S,
    step: S,
    ranges: &'a [(S, S)],
    kf: usize,
    q: Vec<S>,
    best: Option<(S, Vec<S>)>,
    evaluated: u64,
    largest_multiplier: S,
    eval: F,
    multiplier: G,
}

impl<S: Scalar, F: Fn(&[S]) -> S, G: Fn(&[S]) -> S> Search<'_, S, F, G> {
    /// Interval of grid indices for coordinate `z` that can still reach the
    /// slack band given the partial moments and the ranges of later points.
    fn index_range(&self, z: usize, partial: &[S]) -> Option<(S, S)> {
        let (mut lo, mut hi) = self.ranges[z];
        let n = self.theta.len();
        for k in 0..self.kf {
            // reachable contribution of points after z
            let (mut rest_lo, mut rest_hi) = (S::zero(), S::zero());
            for w in z + 1..n {
                let t = self.theta[w][k];
                let (a, b) = (self.ranges[w].0 * self.step * t, self.ranges[w].1 * self.step * t);
                rest_lo = rest_lo + a.min(b);
                rest_hi = rest_hi + a.max(b);
            }
            let t = self.theta[z][k];
            let band_lo = self.target[k] - self.slack - partial[k] - rest_hi;
            let band_hi = self.target[k] + self.slack - partial[k] - rest_lo;
            if t == S::zero() {
                if band_lo > S::zero() || band_hi < S::zero() {
                    return None;
                }
                continue;
            }
            let (a, b) = (band_lo / t, band_hi / t);
            let (a, b) = if t > S::zero() { (a, b) } else { (b, a) };
            // widen by a hair so that round-off never drops a boundary point
            let fuzz = S::epsilon() * S::lit(64.0);
            lo = lo.max((a / self.step - fuzz * (S::one() + (a / self.step).abs())).ceil());
            hi = hi.min((b / self.step + fuzz * (S::one() + (b / self.step).abs())).floor());
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn descend(&mut self, z: usize, partial: &[S]) {
        let n = self.theta.len();
        if z == n {
            let ok = (0..self.kf).all(|k| (partial[k] - self.target[k]).abs() <= self.slack);
            if !ok {
                return;
            }
            self.evaluated += 1;
            let v = (self.eval)(&self.q);
            let inner = (0..self.kf).all(|k| (partial[k] - self.target[k]).abs() <= self.slack * S::lit(0.5));
            if v.is_finite() && inner {
                let y = (self.multiplier)(&self.q);
                if y.is_finite() {
                    self.largest_multiplier = self.largest_multiplier.max(y);
                }
            }
            if v.is_finite() && self.best.as_ref().is_none_or(|(b, _)| v < *b) {
                self.best = Some((v, self.q.clone()));
            }
            return;
        }
        let Some((lo, hi)) = self.index_range(z, partial) else {
            return;
        };
        let mut idx = lo;
        let mut next = partial.to_vec();
        while idx <= hi {
            let qz = idx * self.step;
            self.q[z] = qz;
            for k in 0..self.kf {
                next[k] = partial[k] + self.theta[z][k] * qz;
            }
            self.descend(z + 1, &next);
            idx = idx + S::one();
        }
    }
}

/// Least-squares fit of `⟨y, θ(z)⟩ ≈ ∂I/∂Q_z` at the points where the entropy
/// slope is finite; slopes come from central differences of `γ*_z`.
fn estimate_multiplier<S: Scalar>(p: &MomentProblem<S>, q: &[S], step: S) -> Vec<S> {
    let fam = p.family();
    let r = p.reference().weights();
    let kf = p.n_features();
    let mut normal = vec![S::zero(); kf * kf];
    let mut rhs = vec![S::zero(); kf];
    let delta = step * S::lit(1e-3);
    for z in 0..p.n_points() {
        let s = q[z] / r[z];
        let d = delta / r[z];
        let plus = fam.conjugate(z, s + d);
        let minus = fam.conjugate(z, s - d);
        if !plus.is_finite() || !minus.is_finite() {
            continue;
        }
        let slope = (plus - minus) / (d + d);
        let row = p.features().row(z);
        for i in 0..kf {
            rhs[i] = rhs[i] + row[i] * slope;
            for j in 0..kf {
                normal[i * kf + j] = normal[i * kf + j] + row[i] * row[j];
            }
        }
    }
    let trace = (0..kf).fold(S::zero(), |acc, i| acc + normal[i * kf + i]);
    let shift = S::lit(1e-12) * if trace > S::zero() { trace } else { S::one() };
    regularized_solve(&normal, kf, &rhs, shift).0
}
