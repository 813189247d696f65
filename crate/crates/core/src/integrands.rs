//! Convex integrands `γ_z`, their conjugates `γ*_z`, and the entropy functional.
//!
//! Every family is stored unscaled; a support point `z` may carry a scale
//! `c_z > 0` and a divisor `d_z > 0`, giving
//!
//! ```text
//! γ_z(s)  = γ(c_z·s) / d_z          γ*_z(t) = γ*(t·d_z / c_z) / d_z
//! γ′_z(s) = c_z·γ′(c_z·s) / d_z     m(z)    = γ′_z(0)
//! λ_z(s)  = γ_z(s) − m(z)·s         λ_⋄(z, s) = max(λ_z(s), λ_z(−s))
//! ```
//!
//! The entropy of `Q` relative to `R` is `Σ_z γ*_z(Q_z / R_z)·R_z`.
//! Boundary points of `dom γ*` use the continuous extension (`0·ln 0 = 0`);
//! anything outside the closure evaluates to `+∞`.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::Scalar;
use crate::search::{conjugate_by_slope, Interval};

/// Built-in family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    RelativeEntropy,
    Quadratic,
    Burg,
    Fermi,
    Custom,
}

impl FamilyTag {
    pub const BUILT_IN: [FamilyTag; 4] = [
        FamilyTag::RelativeEntropy,
        FamilyTag::Quadratic,
        FamilyTag::Burg,
        FamilyTag::Fermi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::RelativeEntropy => "relative_entropy",
            FamilyTag::Quadratic => "quadratic",
            FamilyTag::Burg => "burg",
            FamilyTag::Fermi => "fermi",
            FamilyTag::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            FamilyTag::RelativeEntropy,
            FamilyTag::Quadratic,
            FamilyTag::Burg,
            FamilyTag::Fermi,
            FamilyTag::Custom,
        ]
        .into_iter()
        .find(|t| t.name() == name)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// User-supplied integrand given by a table of derivative values.
///
/// `γ′` is the piecewise-linear interpolant of `(knots, slopes)` on the closed
/// interval `[knots[0], knots[last]]`, and `γ(s) = ∫_0^s γ′`, so `γ(0) = 0`.
/// Outside the knot range `γ = +∞`. The conjugate has no closed form and is
/// always computed numerically.
#[derive(Clone, PartialEq)]
pub struct TabulatedIntegrand<S> {
    knots: Vec<S>,
    slopes: Vec<S>,
    /// `∫_{knots[0]}^{knots[i]} γ′`
    cumulative: Vec<S>,
    offset: S,
}

impl<S: Scalar> TabulatedIntegrand<S> {
    pub fn new(knots: Vec<S>, slopes: Vec<S>) -> Result<Self> {
        check_dim("tabulated slopes", knots.len(), slopes.len())?;
        if knots.len() < 2 {
            return Err(Error::InvalidInput(
                "tabulated integrand needs at least two knots".into(),
            ));
        }
        if knots.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated integrand entries must be finite".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("knots must be strictly increasing".into()));
        }
        // strict convexity is only checked on the sampled table
        if slopes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "slopes must be strictly increasing (strictly convex integrand)".into(),
            ));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if !(first < S::zero() && S::zero() < last) {
            return Err(Error::InvalidInput("knot range must contain 0 in its interior".into()));
        }
        let half = S::lit(0.5);
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(S::zero());
        for i in 1..knots.len() {
            let area = (knots[i] - knots[i - 1]) * (slopes[i] + slopes[i - 1]) * half;
            cumulative.push(cumulative[i - 1] + area);
        }
        let mut table = Self {
            knots,
            slopes,
            cumulative,
            offset: S::zero(),
        };
        table.offset = table.integral_from_start(S::zero());
        Ok(table)
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    pub fn slopes(&self) -> &[S] {
        &self.slopes
    }

    fn domain(&self) -> Interval<S> {
        Interval::closed(self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn segment(&self, s: S) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.iter().position(|&k| k > s) {
            Some(0) => 0,
            Some(i) => (i - 1).min(last),
            None => last,
        }
    }

    fn integral_from_start(&self, s: S) -> S {
        let i = self.segment(s);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (g0, g1) = (self.slopes[i], self.slopes[i + 1]);
        let h = s - k0;
        let rate = (g1 - g0) / (k1 - k0);
        self.cumulative[i] + g0 * h + rate * h * h * S::lit(0.5)
    }

    fn value(&self, s: S) -> S {
        if !self.domain().contains(s) {
            return S::infinity();
        }
        self.integral_from_start(s) - self.offset
    }

    fn derivative(&self, s: S) -> S {
        let dom = self.domain();
        if s > dom.hi {
            return S::infinity();
        }
        if s < dom.lo {
            return S::neg_infinity();
        }
        let i = self.segment(s);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (g0, g1) = (self.slopes[i], self.slopes[i + 1]);
        g0 + (g1 - g0) * (s - k0) / (k1 - k0)
    }

    fn second_derivative(&self, s: S) -> S {
        if !self.domain().contains(s) {
            return S::infinity();
        }
        let i = self.segment(s);
        (self.slopes[i + 1] - self.slopes[i]) / (self.knots[i + 1] - self.knots[i])
    }
}

impl<S: fmt::Debug> fmt::Debug for TabulatedIntegrand<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedIntegrand")
            .field("knots", &self.knots)
            .field("slopes", &self.slopes)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind<S> {
    /// `γ*(t) = t ln t − t + 1`, `γ(s) = e^s − 1`.
    RelativeEntropy,
    /// `γ*(t) = t²/2`, `γ(s) = s²/2`.
    Quadratic,
    /// `γ*(t) = t − 1 − ln t`, `γ(s) = −ln(1 − s)`.
    Burg,
    /// `γ*(t) = t ln t + (1−t) ln(1−t) + ln 2`, `γ(s) = ln((1 + e^s)/2)`.
    Fermi,
    Custom(Arc<TabulatedIntegrand<S>>),
}

/// Quantity selector for [`integrand_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    Conjugate,
    Derivative,
    Lambda,
    LambdaMax,
}

/// A convex integrand family with optional per-point scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandFamily<S> {
    kind: FamilyKind<S>,
    scale: Option<Vec<S>>,
    divisor: Option<Vec<S>>,
}

fn xlogx<S: Scalar>(t: S) -> S {
    if t == S::zero() {
        S::zero()
    } else {
        t * t.ln()
    }
}

fn softplus<S: Scalar>(s: S) -> S {
    s.max(S::zero()) + (-s.abs()).exp().ln_1p()
}

fn logistic<S: Scalar>(s: S) -> S {
    if s >= S::zero() {
        S::one() / (S::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (S::one() + e)
    }
}

impl<S: Scalar> FamilyKind<S> {
    fn gamma(&self, s: S) -> S {
        match self {
            FamilyKind::RelativeEntropy => s.exp_m1(),
            FamilyKind::Quadratic => s * s * S::lit(0.5),
            FamilyKind::Burg => {
                if s < S::one() {
                    -(-s).ln_1p()
                } else {
                    S::infinity()
                }
            }
            FamilyKind::Fermi => softplus(s) - S::LN_2(),
            FamilyKind::Custom(t) => t.value(s),
        }
    }

    fn gamma_prime(&self, s: S) -> S {
        match self {
            FamilyKind::RelativeEntropy => s.exp(),
            FamilyKind::Quadratic => s,
            FamilyKind::Burg => {
                if s < S::one() {
                    S::one() / (S::one() - s)
                } else {
                    S::infinity()
                }
            }
            FamilyKind::Fermi => logistic(s),
            FamilyKind::Custom(t) => t.derivative(s),
        }
    }

    fn gamma_second(&self, s: S) -> S {
        match self {
            FamilyKind::RelativeEntropy => s.exp(),
            FamilyKind::Quadratic => S::one(),
            FamilyKind::Burg => {
                if s < S::one() {
                    let r = S::one() / (S::one() - s);
                    r * r
                } else {
                    S::infinity()
                }
            }
            FamilyKind::Fermi => {
                let p = logistic(s);
                p * (S::one() - p)
            }
            FamilyKind::Custom(t) => t.second_derivative(s),
        }
    }

    fn domain(&self) -> Interval<S> {
        match self {
            FamilyKind::Burg => Interval {
                lo: S::neg_infinity(),
                hi: S::one(),
                lo_closed: false,
                hi_closed: false,
            },
            FamilyKind::Custom(t) => t.domain(),
            _ => Interval::real_line(),
        }
    }

    /// Closed form of `γ*`, `None` for tabulated integrands.
    fn conjugate(&self, t: S) -> Option<S> {
        let inf = S::infinity();
        Some(match self {
            FamilyKind::RelativeEntropy => {
                if t < S::zero() {
                    inf
                } else {
                    xlogx(t) - t + S::one()
                }
            }
            FamilyKind::Quadratic => t * t * S::lit(0.5),
            FamilyKind::Burg => {
                if t > S::zero() {
                    t - S::one() - t.ln()
                } else {
                    inf
                }
            }
            FamilyKind::Fermi => {
                if t < S::zero() || t > S::one() {
                    inf
                } else {
                    xlogx(t) + xlogx(S::one() - t) + S::LN_2()
                }
            }
            FamilyKind::Custom(_) => return None,
        })
    }

    fn conjugate_domain(&self) -> Interval<S> {
        match self {
            FamilyKind::RelativeEntropy => Interval {
                lo: S::zero(),
                hi: S::infinity(),
                lo_closed: true,
                hi_closed: false,
            },
            FamilyKind::Burg => Interval {
                lo: S::zero(),
                hi: S::infinity(),
                lo_closed: false,
                hi_closed: false,
            },
            FamilyKind::Fermi => Interval::closed(S::zero(), S::one()),
            FamilyKind::Quadratic | FamilyKind::Custom(_) => Interval::real_line(),
        }
    }
}

impl<S: Scalar> IntegrandFamily<S> {
    pub fn new(kind: FamilyKind<S>) -> Self {
        Self {
            kind,
            scale: None,
            divisor: None,
        }
    }

    pub fn relative_entropy() -> Self {
        Self::new(FamilyKind::RelativeEntropy)
    }

    pub fn quadratic() -> Self {
        Self::new(FamilyKind::Quadratic)
    }

    pub fn burg() -> Self {
        Self::new(FamilyKind::Burg)
    }

    pub fn fermi() -> Self {
        Self::new(FamilyKind::Fermi)
    }

    pub fn custom(table: TabulatedIntegrand<S>) -> Self {
        Self::new(FamilyKind::Custom(Arc::new(table)))
    }

    pub fn from_tag(tag: FamilyTag) -> Option<Self> {
        Some(Self::new(match tag {
            FamilyTag::RelativeEntropy => FamilyKind::RelativeEntropy,
            FamilyTag::Quadratic => FamilyKind::Quadratic,
            FamilyTag::Burg => FamilyKind::Burg,
            FamilyTag::Fermi => FamilyKind::Fermi,
            FamilyTag::Custom => return None,
        }))
    }

    /// Attaches per-point scales `c_z` and divisors `d_z` (both `> 0`).
    pub fn with_scaling(mut self, scale: Option<Vec<S>>, divisor: Option<Vec<S>>) -> Result<Self> {
        for v in scale.iter().chain(&divisor).flatten() {
            if !(*v > S::zero()) || !v.is_finite() {
                return Err(Error::InvalidInput(
                    "per-point scaling must be finite and positive".into(),
                ));
            }
        }
        if let (Some(c), Some(d)) = (&scale, &divisor) {
            check_dim("per-point scaling", c.len(), d.len())?;
        }
        self.scale = scale;
        self.divisor = divisor;
        Ok(self)
    }

    pub fn kind(&self) -> &FamilyKind<S> {
        &self.kind
    }

    pub fn tag(&self) -> FamilyTag {
        match self.kind {
            FamilyKind::RelativeEntropy => FamilyTag::RelativeEntropy,
            FamilyKind::Quadratic => FamilyTag::Quadratic,
            FamilyKind::Burg => FamilyTag::Burg,
            FamilyKind::Fermi => FamilyTag::Fermi,
            FamilyKind::Custom(_) => FamilyTag::Custom,
        }
    }

    pub fn scale(&self) -> Option<&[S]> {
        self.scale.as_deref()
    }

    pub fn divisor(&self) -> Option<&[S]> {
        self.divisor.as_deref()
    }

    /// Checks that per-point parameters cover a support of size `n`.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if let Some(c) = &self.scale {
            check_dim("integrand scale", n, c.len())?;
        }
        if let Some(d) = &self.divisor {
            check_dim("integrand divisor", n, d.len())?;
        }
        Ok(())
    }

    #[inline]
    fn params(&self, z: usize) -> (S, S) {
        let c = self.scale.as_ref().map_or(S::one(), |v| v[z]);
        let d = self.divisor.as_ref().map_or(S::one(), |v| v[z]);
        (c, d)
    }

    /// `γ_z(s)`; `+∞` outside the domain.
    pub fn gamma(&self, z: usize, s: S) -> S {
        let (c, d) = self.params(z);
        self.kind.gamma(c * s) / d
    }

    pub fn gamma_prime(&self, z: usize, s: S) -> S {
        let (c, d) = self.params(z);
        c * self.kind.gamma_prime(c * s) / d
    }

    pub fn gamma_second(&self, z: usize, s: S) -> S {
        let (c, d) = self.params(z);
        c * c * self.kind.gamma_second(c * s) / d
    }

    pub fn domain(&self, z: usize) -> Interval<S> {
        let (c, _) = self.params(z);
        self.kind.domain().scaled(S::one() / c)
    }

    pub fn conjugate_domain(&self, z: usize) -> Interval<S> {
        let (c, d) = self.params(z);
        self.kind.conjugate_domain().scaled(c / d)
    }

    /// `γ*_z(t)`, closed form where available and numeric otherwise.
    pub fn conjugate(&self, z: usize, t: S) -> S {
        let (c, d) = self.params(z);
        match self.kind.conjugate(t * d / c) {
            Some(v) => v / d,
            None => self.numeric_conjugate_raw(z, t),
        }
    }

    /// Unique minimizer `m(z)` of `γ*_z`.
    pub fn normalizer(&self, z: usize) -> S {
        self.gamma_prime(z, S::zero())
    }

    /// `λ_z(s) = γ_z(s) − m(z)·s`.
    pub fn lambda(&self, z: usize, s: S) -> S {
        let g = self.gamma(z, s);
        if g == S::infinity() {
            g
        } else {
            g - self.normalizer(z) * s
        }
    }

    pub fn lambda_max(&self, z: usize, s: S) -> S {
        self.lambda(z, s).max(self.lambda(z, -s))
    }

    fn numeric_conjugate_raw(&self, z: usize, t: S) -> S {
        conjugate_by_slope(t, self.domain(z), |s| self.gamma(z, s), |s| self.gamma_prime(z, s))
    }
}

fn check_point<S: Scalar>(fam: &IntegrandFamily<S>, z: usize, s: S) -> Result<()> {
    if s.is_nan() {
        return Err(Error::NotANumber("integrand argument"));
    }
    if let Some(c) = fam.scale() {
        if z >= c.len() {
            return Err(Error::InvalidInput(format!("support index {z} out of range")));
        }
    }
    if let Some(d) = fam.divisor() {
        if z >= d.len() {
            return Err(Error::InvalidInput(format!("support index {z} out of range")));
        }
    }
    Ok(())
}

/// Evaluates one of `γ_z`, `γ*_z`, `γ′_z`, `λ_z`, `λ_⋄(z, ·)` at `s`.
pub fn integrand_eval<S: Scalar>(fam: &IntegrandFamily<S>, z: usize, which: Quantity, s: S) -> Result<S> {
    check_point(fam, z, s)?;
    Ok(match which {
        Quantity::Value => fam.gamma(z, s),
        Quantity::Conjugate => fam.conjugate(z, s),
        Quantity::Derivative => fam.gamma_prime(z, s),
        Quantity::Lambda => fam.lambda(z, s),
        Quantity::LambdaMax => fam.lambda_max(z, s),
    })
}

/// `sup_s { t·s − γ_z(s) }` by search on the concave objective, using only
/// `γ_z` and `γ′_z`. Returns `+∞` when the supremum is unbounded.
pub fn numeric_conjugate<S: Scalar>(fam: &IntegrandFamily<S>, z: usize, t: S) -> Result<S> {
    check_point(fam, z, t)?;
    Ok(fam.numeric_conjugate_raw(z, t))
}

/// Raw-weight version of [`entropy_value`] for callers that already checked supports.
pub(crate) fn entropy_of_weights<S: Scalar>(fam: &IntegrandFamily<S>, reference: &[S], q: &[S]) -> S {
    let mut total = S::zero();
    for (z, (&r, &w)) in reference.iter().zip(q).enumerate() {
        let c = fam.conjugate(z, w / r);
        if c == S::infinity() {
            return c;
        }
        total = total + c * r;
    }
    total
}

/// Entropy `I(Q) = Σ_z γ*_z(Q_z/R_z)·R_z` of `Q` relative to `R`.
pub fn entropy_value<S: Scalar>(
    fam: &IntegrandFamily<S>,
    reference: &DiscreteMeasure<S>,
    q: &DiscreteMeasure<S>,
) -> Result<S> {
    reference.same_support(q)?;
    reference.ensure_positive()?;
    fam.validate_for(reference.len())?;
    Ok(entropy_of_weights(fam, reference.weights(), q.weights()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<IntegrandFamily<f64>> {
        FamilyTag::BUILT_IN
            .iter()
            .map(|&t| IntegrandFamily::from_tag(t).unwrap())
            .collect()
    }

    #[test]
    fn conjugate_vanishes_at_normalizer() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        assert_eq!(integrand_eval(&re, 0, Quantity::Conjugate, 1.0).unwrap(), 0.0);
        let fermi = IntegrandFamily::<f64>::fermi();
        assert!(integrand_eval(&fermi, 0, Quantity::Conjugate, 0.5).unwrap().abs() < 1e-16);
        for fam in all_families() {
            let m = fam.normalizer(0);
            assert!(fam.conjugate(0, m).abs() < 1e-15, "{}", fam.tag());
        }
    }

    #[test]
    fn closed_form_values_against_numeric_oracle() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        let expected = 2.0 * 2.0f64.ln() - 1.0;
        assert!((numeric_conjugate(&re, 0, 2.0).unwrap() - expected).abs() < 1e-10);
        assert!((re.conjugate(0, 2.0) - 0.386_294_361_119_890_6).abs() < 1e-12);

        let burg = IntegrandFamily::<f64>::burg();
        let expected = 1.0 - 2.0f64.ln();
        assert!((numeric_conjugate(&burg, 0, 2.0).unwrap() - expected).abs() < 1e-10);
        assert!((burg.conjugate(0, 2.0) - 0.306_852_819_440_054_7).abs() < 1e-12);
    }

    #[test]
    fn numeric_conjugate_examples() {
        let q = IntegrandFamily::<f64>::quadratic();
        assert!((numeric_conjugate(&q, 0, 3.0).unwrap() - 4.5).abs() < 1e-10);
        let re = IntegrandFamily::<f64>::relative_entropy();
        assert!((numeric_conjugate(&re, 0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        for fam in all_families() {
            let slope = fam.gamma_prime(0, 0.0);
            assert_eq!(numeric_conjugate(&fam, 0, slope).unwrap(), 0.0);
        }
    }

    #[test]
    fn numeric_conjugate_reports_unbounded() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        assert_eq!(numeric_conjugate(&re, 0, -0.5).unwrap(), f64::INFINITY);
        let burg = IntegrandFamily::<f64>::burg();
        assert_eq!(numeric_conjugate(&burg, 0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(numeric_conjugate(&burg, 0, -1.0).unwrap(), f64::INFINITY);
        let fermi = IntegrandFamily::<f64>::fermi();
        assert_eq!(numeric_conjugate(&fermi, 0, 1.5).unwrap(), f64::INFINITY);
        // boundary of the conjugate domain: limit value ln 2
        assert!((numeric_conjugate(&fermi, 0, 1.0).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!((fermi.conjugate(0, 0.0) - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn domain_boundaries() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        assert_eq!(re.conjugate(0, 0.0), 1.0);
        assert_eq!(re.conjugate(0, -1e-300), f64::INFINITY);
        let burg = IntegrandFamily::<f64>::burg();
        assert_eq!(burg.gamma(0, 1.0), f64::INFINITY);
        assert_eq!(burg.conjugate(0, 0.0), f64::INFINITY);
        assert_eq!(integrand_eval(&burg, 0, Quantity::Lambda, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn nan_is_structural() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        assert!(matches!(
            integrand_eval(&re, 0, Quantity::Value, f64::NAN),
            Err(Error::NotANumber(_))
        ));
        assert!(numeric_conjugate(&re, 0, f64::NAN).is_err());
    }

    #[test]
    fn lambda_is_nonnegative_and_vanishes_at_zero() {
        for fam in all_families() {
            assert_eq!(fam.lambda(0, 0.0), 0.0);
            for i in -40..=40 {
                let s = i as f64 * 0.05;
                assert!(fam.lambda(0, s) >= -1e-15, "{} at {s}", fam.tag());
                assert!(fam.lambda_max(0, s) >= fam.lambda(0, s));
                assert_eq!(fam.lambda_max(0, s), fam.lambda_max(0, -s));
            }
        }
    }

    #[test]
    fn scaled_family_matches_definition() {
        let fam = IntegrandFamily::<f64>::relative_entropy()
            .with_scaling(Some(vec![2.0]), Some(vec![3.0]))
            .unwrap();
        let s = 0.3;
        assert!((fam.gamma(0, s) - (0.6f64.exp() - 1.0) / 3.0).abs() < 1e-15);
        assert!((fam.normalizer(0) - 2.0 / 3.0).abs() < 1e-15);
        let t = 0.9;
        let numeric = numeric_conjugate(&fam, 0, t).unwrap();
        assert!((fam.conjugate(0, t) - numeric).abs() < 1e-10);
        assert!(fam.conjugate(0, fam.normalizer(0)).abs() < 1e-15);
        assert!(IntegrandFamily::<f64>::quadratic()
            .with_scaling(Some(vec![0.0]), None)
            .is_err());
    }

    #[test]
    fn entropy_examples() {
        let re = IntegrandFamily::<f64>::relative_entropy();
        let r = DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        assert_eq!(entropy_value(&re, &r, &r).unwrap(), 0.0);
        let q = DiscreteMeasure::from_weights(vec![0.25, 0.75]).unwrap();
        let expected = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        let v = entropy_value(&re, &r, &q).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.130_812).abs() < 1e-6);
        let neg = DiscreteMeasure::from_weights(vec![-0.1, 1.1]).unwrap();
        assert_eq!(entropy_value(&re, &r, &neg).unwrap(), f64::INFINITY);
        let other = DiscreteMeasure::new(
            vec![
                crate::measures::SupportPoint::new("x"),
                crate::measures::SupportPoint::new("y"),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(entropy_value(&re, &r, &other), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn entropy_vanishes_at_normalized_reference() {
        let r = DiscreteMeasure::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
        for fam in all_families() {
            let m: Vec<f64> = r
                .weights()
                .iter()
                .enumerate()
                .map(|(z, &w)| fam.normalizer(z) * w)
                .collect();
            let q = r.with_weights(m).unwrap();
            assert!(entropy_value(&fam, &r, &q).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn tabulated_integrand() {
        // γ′ piecewise linear through (-1,-1), (0,0), (2,2): γ(s) = s²/2 on [-1, 2]
        let table = TabulatedIntegrand::<f64>::new(vec![-1.0, 0.0, 2.0], vec![-1.0, 0.0, 2.0]).unwrap();
        let fam: IntegrandFamily<f64> = IntegrandFamily::custom(table);
        assert_eq!(fam.tag(), FamilyTag::Custom);
        assert!((fam.gamma(0, 1.5) - 1.125).abs() < 1e-15);
        assert!((fam.gamma(0, -0.5) - 0.125).abs() < 1e-15);
        assert_eq!(fam.gamma(0, 2.5), f64::INFINITY);
        assert_eq!(fam.gamma_second(0, 0.5), 1.0);
        // interior slope: same as the quadratic
        assert!((fam.conjugate(0, 1.0) - 0.5).abs() < 1e-10);
        // beyond the last slope the maximizer sits at the closed edge s = 2
        assert!((fam.conjugate(0, 3.0) - (6.0 - 2.0)).abs() < 1e-12);
        assert!(TabulatedIntegrand::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(TabulatedIntegrand::new(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn single_precision_families() {
        let re = IntegrandFamily::<f32>::relative_entropy();
        assert!((re.conjugate(0, 2.0) - 0.386_294_4).abs() < 1e-6);
        let v = numeric_conjugate(&re, 0, 2.0f32).unwrap();
        assert!((v - 0.386_294_4).abs() < 1e-5);
    }
}
