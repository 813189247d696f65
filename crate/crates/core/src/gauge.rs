//! Gauge functionals of convex level sets and the norms built from them.
//!
//! For a convex `θ ≥ 0` with `θ(0) = 0`, the gauge of its unit level set
//! `C_θ = {θ ≤ 1}` is `j_θ(s) = inf{α > 0 : θ(s/α) ≤ 1}`. The norms on
//! feature space and on dual space are gauges of symmetrized integral
//! functionals.
//!
//! Searches are operational: the gauge bracket starts at
//! `[1e-8, 1e8]·‖s‖_∞` and is widened geometrically up to a cap, beyond which
//! the gauge is reported as `+∞` (or `0` at the lower end).

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::integrands::IntegrandFamily;
use crate::measures::{DiscreteMeasure, FeatureMap};
use crate::scalar::{dot, norm_inf, Scalar};
use crate::search::{bisect_threshold, maximize_concave};

/// Largest dimension accepted by the support and conjugate searches.
pub const MAX_SEARCH_DIM: usize = 3;

type ThetaFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;

/// Convex function `θ: ℝ^d → [0, ∞]` with `θ(0) = 0`.
#[derive(Clone)]
pub enum Theta<S> {
    /// `Σ_i w_i |s_i|^p` with `p ≥ 1`.
    Power { exponent: S, weights: Vec<S> },
    /// `Σ_i w_i λ_i(s_i)`.
    Lambda {
        family: IntegrandFamily<S>,
        weights: Vec<S>,
    },
    /// `Σ_i w_i λ_⋄(i, s_i)`.
    LambdaMax {
        family: IntegrandFamily<S>,
        weights: Vec<S>,
    },
    /// `max(Φ(s), Φ(−s))` with `Φ(s) = Σ_i w_i λ_i(s_i)`.
    SymmetricPhi {
        family: IntegrandFamily<S>,
        weights: Vec<S>,
    },
    /// User-supplied evaluator; convexity is only sampled by
    /// [`ConvexGaugeSpec::validate`].
    Function { dim: usize, f: ThetaFn<S> },
}

impl<S: fmt::Debug> fmt::Debug for Theta<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Power { exponent, weights } => f
                .debug_struct("Power")
                .field("exponent", exponent)
                .field("weights", weights)
                .finish(),
            Theta::Lambda { weights, .. } => f.debug_struct("Lambda").field("weights", weights).finish(),
            Theta::LambdaMax { weights, .. } => f.debug_struct("LambdaMax").field("weights", weights).finish(),
            Theta::SymmetricPhi { weights, .. } => f.debug_struct("SymmetricPhi").field("weights", weights).finish(),
            Theta::Function { dim, .. } => f.debug_struct("Function").field("dim", dim).finish(),
        }
    }
}

fn phi_sum<S: Scalar>(family: &IntegrandFamily<S>, weights: &[S], s: &[S], sign: S) -> S {
    let mut total = S::zero();
    for (z, (&w, &v)) in weights.iter().zip(s).enumerate() {
        let l = family.lambda(z, sign * v);
        if l == S::infinity() {
            return l;
        }
        total = total + w * l;
    }
    total
}

impl<S: Scalar> Theta<S> {
    pub fn function(dim: usize, f: impl Fn(&[S]) -> S + Send + Sync + 'static) -> Self {
        Theta::Function { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Theta::Power { weights, .. }
            | Theta::Lambda { weights, .. }
            | Theta::LambdaMax { weights, .. }
            | Theta::SymmetricPhi { weights, .. } => weights.len(),
            Theta::Function { dim, .. } => *dim,
        }
    }

    /// Evaluates `θ(s)`; `+∞` outside the domain.
    pub fn eval(&self, s: &[S]) -> S {
        match self {
            Theta::Power { exponent, weights } => weights
                .iter()
                .zip(s)
                .fold(S::zero(), |acc, (&w, &v)| acc + w * v.abs().powf(*exponent)),
            Theta::Lambda { family, weights } => phi_sum(family, weights, s, S::one()),
            Theta::LambdaMax { family, weights } => {
                let mut total = S::zero();
                for (z, (&w, &v)) in weights.iter().zip(s).enumerate() {
                    let l = family.lambda_max(z, v);
                    if l == S::infinity() {
                        return l;
                    }
                    total = total + w * l;
                }
                total
            }
            Theta::SymmetricPhi { family, weights } => {
                phi_sum(family, weights, s, S::one()).max(phi_sum(family, weights, s, -S::one()))
            }
            Theta::Function { f, .. } => f(s),
        }
    }
}

/// A convex `θ` together with the search parameters of its gauge.
#[derive(Debug, Clone)]
pub struct ConvexGaugeSpec<S> {
    pub theta: Theta<S>,
    /// Initial bracket `[lo, hi]`, relative to `‖s‖_∞`.
    pub bracket: (S, S),
    /// Upper end beyond which the gauge is `+∞`, relative to `‖s‖_∞`.
    pub cap: S,
    /// Lower end below which the gauge is `0`, relative to `‖s‖_∞`.
    pub floor: S,
}

impl<S: Scalar> ConvexGaugeSpec<S> {
    pub fn new(theta: Theta<S>) -> Self {
        Self {
            theta,
            bracket: (S::lit(1e-8), S::lit(1e8)),
            cap: S::lit(1e16),
            floor: S::lit(1e-16).max(S::min_positive_value().sqrt()),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    /// Sampled checks of `θ(0) = 0`, `θ ≥ 0` and midpoint convexity on the
    /// lattice `{−2, −1, −½, 0, ½, 1, 2}^d` (`d ≤ 3`).
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidInput("gauge dimension must be at least 1".into()));
        }
        let origin = vec![S::zero(); d];
        if self.theta.eval(&origin) != S::zero() {
            return Err(Error::InvalidInput("theta(0) must be 0".into()));
        }
        if d > MAX_SEARCH_DIM {
            return Ok(());
        }
        let ticks: Vec<S> = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&v| S::lit(v))
            .collect();
        let points: Vec<Vec<S>> = (0..ticks.len().pow(d as u32))
            .map(|mut code| {
                (0..d)
                    .map(|_| {
                        let v = ticks[code % ticks.len()];
                        code /= ticks.len();
                        v
                    })
                    .collect()
            })
            .collect();
        let values: Vec<S> = points.iter().map(|p| self.theta.eval(p)).collect();
        for (p, &v) in points.iter().zip(&values) {
            if v.is_nan() || v < S::zero() {
                return Err(Error::InvalidInput(format!("theta is negative or NaN at {p:?}")));
            }
        }
        let slack = S::lit(1e-9);
        for (a, &fa) in points.iter().zip(&values) {
            for (b, &fb) in points.iter().zip(&values) {
                if fa.is_infinite() || fb.is_infinite() {
                    continue;
                }
                let mid: Vec<S> = a.iter().zip(b).map(|(&x, &y)| (x + y) * S::lit(0.5)).collect();
                let fm = self.theta.eval(&mid);
                let chord = (fa + fb) * S::lit(0.5);
                if !(fm <= chord + slack * (S::one() + chord.abs())) {
                    return Err(Error::InvalidInput(format!(
                        "theta fails midpoint convexity between {a:?} and {b:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn gauge_of<S, F>(spec: &ConvexGaugeSpec<S>, s: &[S], theta: F) -> S
where
    S: Scalar,
    F: Fn(&[S]) -> S,
{
    let scale = norm_inf(s);
    if scale == S::zero() {
        return S::zero();
    }
    let mut buf = vec![S::zero(); s.len()];
    let mut holds = |alpha: S| {
        for (b, &v) in buf.iter_mut().zip(s) {
            *b = v / alpha;
        }
        theta(&buf) <= S::one()
    };
    let widen = S::lit(100.0);
    let mut hi = spec.bracket.1 * scale;
    while !holds(hi) {
        hi = hi * widen;
        if hi > spec.cap * scale {
            return S::infinity();
        }
    }
    let mut lo = (spec.bracket.0 * scale).min(hi * S::lit(0.5));
    while holds(lo) {
        lo = lo / widen;
        if lo < spec.floor * scale {
            return S::zero();
        }
    }
    bisect_threshold(lo, hi, holds)
}

fn check_point<S: Scalar>(spec: &ConvexGaugeSpec<S>, s: &[S]) -> Result<()> {
    check_dim("gauge point", spec.dim(), s.len())?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("gauge point must be finite".into()));
    }
    Ok(())
}

/// `j_θ(s) = inf{α > 0 : θ(s/α) ≤ 1}`; `0` at `s = 0`, `+∞` when no `α` up
/// to the bracket cap qualifies.
pub fn gauge<S: Scalar>(spec: &ConvexGaugeSpec<S>, s: &[S]) -> Result<S> {
    check_point(spec, s)?;
    Ok(gauge_of(spec, s, |p| spec.theta.eval(p)))
}

fn search_dim<S: Scalar>(spec: &ConvexGaugeSpec<S>) -> Result<usize> {
    let d = spec.dim();
    if d > MAX_SEARCH_DIM {
        return Err(Error::TooLarge {
            what: "level-set search dimension",
            size: d,
            limit: MAX_SEARCH_DIM,
        });
    }
    Ok(d)
}

/// `⟨r,u⟩ / j(u)` with the conventions `x/0 = +∞` for `x > 0` and `0` otherwise.
fn ratio<S: Scalar>(num: S, j: S) -> S {
    if num <= S::zero() {
        S::zero()
    } else if j == S::zero() {
        S::infinity()
    } else {
        num / j
    }
}

/// Golden-section maximization of `h` on `[a, b]`, returning the best value seen.
fn golden_max<S: Scalar>(mut a: S, mut b: S, mut h: impl FnMut(S) -> S, mut best: S) -> S {
    let ratio = S::lit(0.618_033_988_749_894_8);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..120 {
        best = best.max(f1).max(f2);
        if b - a <= S::lit(1e-12) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = h(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = h(x1);
        }
    }
    best.max(f1).max(f2)
}

/// Support function of the unit level set, `ι*_{C_θ}(r) = sup_{θ(s)≤1} ⟨r,s⟩`,
/// computed as `sup_u ⟨r,u⟩ / j_θ(u)` over unit directions: exactly in
/// `d = 1`, by a direction grid with golden-section polish for `d ∈ {2, 3}`.
pub fn support_of_levelset<S: Scalar>(spec: &ConvexGaugeSpec<S>, r: &[S]) -> Result<S> {
    check_point(spec, r)?;
    let d = search_dim(spec)?;
    if norm_inf(r) == S::zero() {
        return Ok(S::zero());
    }
    let j = |u: &[S]| gauge_of(spec, u, |p| spec.theta.eval(p));
    let h = |u: &[S]| ratio(dot(r, u), j(u));
    Ok(match d {
        1 => h(&[S::one()]).max(h(&[-S::one()])),
        2 => {
            let h2 = |phi: S| h(&[phi.cos(), phi.sin()]);
            let steps = 720;
            let step = S::TAU() / S::from_index(steps);
            let mut best = S::neg_infinity();
            let mut arg = S::zero();
            for k in 0..steps {
                let phi = step * S::from_index(k);
                let v = h2(phi);
                if v > best {
                    best = v;
                    arg = phi;
                }
            }
            if best.is_infinite() {
                return Ok(best);
            }
            golden_max(arg - step, arg + step, h2, best)
        }
        _ => {
            let h3 = |pol: S, az: S| {
                let sp = pol.sin();
                h(&[sp * az.cos(), sp * az.sin(), pol.cos()])
            };
            let (n_pol, n_az) = (90, 180);
            let dp = S::PI() / S::from_index(n_pol);
            let da = S::TAU() / S::from_index(n_az);
            let mut best = S::neg_infinity();
            let (mut bp, mut ba) = (S::zero(), S::zero());
            for i in 0..=n_pol {
                for k in 0..n_az {
                    let (pol, az) = (dp * S::from_index(i), da * S::from_index(k));
                    let v = h3(pol, az);
                    if v > best {
                        best = v;
                        bp = pol;
                        ba = az;
                    }
                }
            }
            if best.is_infinite() {
                return Ok(best);
            }
            let (mut wp, mut wa) = (dp, da);
            for _ in 0..24 {
                let mut arg_p = bp;
                best = golden_max(
                    bp - wp,
                    bp + wp,
                    |p| {
                        let v = h3(p, ba);
                        if v > best {
                            arg_p = p;
                        }
                        v
                    },
                    best,
                );
                bp = arg_p;
                let mut arg_a = ba;
                best = golden_max(
                    ba - wa,
                    ba + wa,
                    |a| {
                        let v = h3(bp, a);
                        if v > best {
                            arg_a = a;
                        }
                        v
                    },
                    best,
                );
                ba = arg_a;
                wp = wp * S::lit(0.5);
                wa = wa * S::lit(0.5);
            }
            best
        }
    })
}

/// `θ*(r) = sup_s {⟨r,s⟩ − θ(s)}` by nested one-dimensional searches (`d ≤ 3`).
pub fn conjugate_nd<S: Scalar>(theta: &Theta<S>, r: &[S]) -> Result<S> {
    check_dim("conjugate point", theta.dim(), r.len())?;
    if theta.dim() > MAX_SEARCH_DIM {
        return Err(Error::TooLarge {
            what: "conjugate search dimension",
            size: theta.dim(),
            limit: MAX_SEARCH_DIM,
        });
    }
    Ok(nested_sup(theta, r, &mut Vec::with_capacity(r.len())))
}

fn nested_sup<S: Scalar>(theta: &Theta<S>, r: &[S], prefix: &mut Vec<S>) -> S {
    let level = prefix.len();
    maximize_concave(|s: S| {
        prefix.push(s);
        let v = if level + 1 == r.len() {
            let t = theta.eval(prefix);
            if t == S::infinity() {
                S::neg_infinity()
            } else {
                dot(r, prefix) - t
            }
        } else {
            nested_sup(theta, r, prefix)
        };
        prefix.pop();
        v
    })
}

/// The three terms of the two-sided estimate `½ j_{θ*} ≤ ι*_{C_θ} ≤ 2 j_{θ*}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich<S> {
    pub lower: S,
    pub mid: S,
    pub upper: S,
    pub ok: bool,
}

impl<S: Scalar> Sandwich<S> {
    /// `ι* / j_{θ*}`, which lies in `[½, 2]` when the estimate holds.
    pub fn tightness(&self) -> Option<S> {
        let j = self.upper * S::lit(0.5);
        (j > S::zero() && j.is_finite() && self.mid.is_finite()).then(|| self.mid / j)
    }
}

/// Evaluates `(½ j_{θ*}(r), ι*_{C_θ}(r), 2 j_{θ*}(r))` and whether the
/// ordering holds up to a relative slack of `1e-6`.
pub fn pgauge_sandwich<S: Scalar>(spec: &ConvexGaugeSpec<S>, r: &[S]) -> Result<Sandwich<S>> {
    check_point(spec, r)?;
    search_dim(spec)?;
    let mid = support_of_levelset(spec, r)?;
    let j_star = gauge_of(spec, r, |p| {
        nested_sup(&spec.theta, p, &mut Vec::with_capacity(p.len()))
    });
    let (lower, upper) = (j_star * S::lit(0.5), j_star * S::lit(2.0));
    let rel = S::one() + S::lit(1e-6);
    let abs = S::lit(1e-9);
    let ok = lower <= mid * rel + abs && mid <= upper * rel + abs;
    Ok(Sandwich { lower, mid, upper, ok })
}

fn norm_spec<S: Scalar>(theta: Theta<S>) -> ConvexGaugeSpec<S> {
    ConvexGaugeSpec::new(theta)
}

/// `|u|_Φ`: gauge of `u` under `Φ_±(u) = max(Φ(u), Φ(−u))`, with
/// `Φ(u) = Σ_z λ_z(u_z) R_z`.
pub fn norm_phi<S: Scalar>(reference: &DiscreteMeasure<S>, family: &IntegrandFamily<S>, u: &[S]) -> Result<S> {
    reference.ensure_positive()?;
    family.validate_for(reference.len())?;
    let spec = norm_spec(Theta::SymmetricPhi {
        family: family.clone(),
        weights: reference.weights().to_vec(),
    });
    let value = gauge(&spec, u)?;
    if value == S::zero() && norm_inf(u) > S::zero() {
        return Err(Error::DegenerateNorm("Phi vanishes along a nonzero direction".into()));
    }
    Ok(value)
}

/// `|y|_Λ`: gauge of `y` under `Λ_±(y) = max(Λ(y), Λ(−y))`, `Λ(y) = Φ(T*y)`.
///
/// Evaluated directly on `y` (inner products are formed after scaling), so
/// that comparing with `norm_phi(T*y)` checks two distinct computations.
pub fn norm_lambda<S: Scalar>(
    reference: &DiscreteMeasure<S>,
    family: &IntegrandFamily<S>,
    features: &FeatureMap<S>,
    y: &[S],
) -> Result<S> {
    reference.ensure_positive()?;
    family.validate_for(reference.len())?;
    check_dim("feature rows", reference.len(), features.n_points())?;
    check_dim("dual vector", features.n_features(), y.len())?;
    let weights = reference.weights().to_vec();
    let fam = family.clone();
    let rows: Vec<Vec<S>> = features.rows().map(<[S]>::to_vec).collect();
    let big_lambda = move |v: &[S], sign: S| {
        let mut total = S::zero();
        for (z, (row, &w)) in rows.iter().zip(&weights).enumerate() {
            let l = fam.lambda(z, sign * dot(v, row));
            if l == S::infinity() {
                return l;
            }
            total = total + w * l;
        }
        total
    };
    let spec = norm_spec(Theta::function(y.len(), move |v: &[S]| {
        big_lambda(v, S::one()).max(big_lambda(v, -S::one()))
    }));
    let value = gauge(&spec, y)?;
    if value == S::zero() && norm_inf(y) > S::zero() {
        return Err(Error::DegenerateNorm(
            "Lambda vanishes along a nonzero direction (feature map not injective on y)".into(),
        ));
    }
    Ok(value)
}

/// Both sides of `|y|_Λ = |T*y|_Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormIdentity<S> {
    pub lambda: S,
    pub phi: S,
    pub agree: bool,
}

/// Computes `|y|_Λ` and `|T*y|_Φ` and checks agreement to `1e-9·(1 + |y|_Λ)`.
pub fn norm_identity_check<S: Scalar>(
    reference: &DiscreteMeasure<S>,
    family: &IntegrandFamily<S>,
    features: &FeatureMap<S>,
    y: &[S],
) -> Result<NormIdentity<S>> {
    let lambda = norm_lambda(reference, family, features, y)?;
    let u = crate::measures::adjoint_features(features, y)?;
    let phi = norm_phi(reference, family, &u)?;
    let tol = S::lit(1e-9).max(S::epsilon() * S::lit(64.0));
    let agree = (lambda - phi).abs() <= tol * (S::one() + lambda);
    Ok(NormIdentity { lambda, phi, agree })
}
