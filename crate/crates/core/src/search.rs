//! One-dimensional searches on concave objectives.
//!
//! These routines back the numeric conjugates and the nested searches of the
//! gauge module. They work with extended reals: `-∞` marks points outside the
//! domain of a concave objective, `+∞` an unbounded supremum.

use crate::scalar::Scalar;

/// Largest |s| probed when marching toward an infinite domain edge.
const MARCH_LIMIT_EXP: i32 = 27;

/// Interval of the real line with per-end openness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<S: Scalar> Interval<S> {
    pub fn real_line() -> Self {
        Self {
            lo: S::neg_infinity(),
            hi: S::infinity(),
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: S, hi: S) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn contains(&self, s: S) -> bool {
        let above = if self.lo_closed { s >= self.lo } else { s > self.lo };
        let below = if self.hi_closed { s <= self.hi } else { s < self.hi };
        above && below
    }

    /// Image under `s ↦ factor·s` with `factor > 0`.
    pub fn scaled(&self, factor: S) -> Self {
        Self {
            lo: self.lo * factor,
            hi: self.hi * factor,
            ..*self
        }
    }
}

/// `sup_s { t·s − γ(s) }` for a closed convex `γ` with `0 ∈ dom γ`, given its
/// derivative `γ′` (nondecreasing).
///
/// The maximizer is located by bisection on the decreasing slope `t − γ′(s)`.
/// When no sign change exists before the domain edge, the supremum is the
/// limit of the objective toward that edge; along an infinite edge it is
/// declared `+∞` if the objective still grows at the last doubling step.
pub fn conjugate_by_slope<S, G, D>(t: S, domain: Interval<S>, gamma: G, prime: D) -> S
where
    S: Scalar,
    G: Fn(S) -> S,
    D: Fn(S) -> S,
{
    let objective = |s: S| {
        let g = gamma(s);
        if g.is_infinite() && g > S::zero() {
            S::neg_infinity()
        } else {
            t * s - g
        }
    };
    let slope = |s: S| t - prime(s);
    let g0 = slope(S::zero());
    if g0 == S::zero() {
        return objective(S::zero());
    }
    let dir = if g0 > S::zero() { S::one() } else { -S::one() };
    let ascending = |s: S| slope(s) * dir > S::zero();
    let (edge, closed) = if dir > S::zero() {
        (domain.hi, domain.hi_closed)
    } else {
        (domain.lo, domain.lo_closed)
    };

    let mut inner = S::zero();
    if edge.is_finite() {
        if closed {
            if ascending(edge) || slope(edge) == S::zero() {
                return objective(edge);
            }
            return bisect_slope(inner, edge, &ascending, &objective);
        }
        let half = S::lit(0.5);
        let mut gap = edge;
        for _ in 0..200 {
            gap = gap * half;
            let s = edge - gap;
            if !ascending(s) {
                return bisect_slope(inner, s, &ascending, &objective);
            }
            inner = s;
            if gap.abs() <= S::epsilon() * edge.abs() {
                break;
            }
        }
        return objective(inner);
    }

    let two = S::lit(2.0);
    let mut prev = objective(S::zero());
    let mut last_increment = S::zero();
    let mut s = dir;
    for _ in 0..=MARCH_LIMIT_EXP {
        if !ascending(s) {
            return bisect_slope(inner, s, &ascending, &objective);
        }
        inner = s;
        let value = objective(s);
        last_increment = value - prev;
        prev = value;
        s = s * two;
    }
    if last_increment > S::lit(1e-10) * (S::one() + prev.abs()) {
        S::infinity()
    } else {
        prev
    }
}

fn bisect_slope<S, A, F>(mut a: S, mut b: S, ascending: &A, objective: &F) -> S
where
    S: Scalar,
    A: Fn(S) -> bool,
    F: Fn(S) -> S,
{
    let half = S::lit(0.5);
    for _ in 0..400 {
        let mid = (a + b) * half;
        if mid == a || mid == b {
            break;
        }
        if ascending(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mid = (a + b) * half;
    objective(mid).max(objective(a)).max(objective(b))
}

/// Supremum of a concave function of one variable that is finite at 0.
///
/// A three-point bracket is grown from `{-1, 0, 1}` by doubling, then
/// shrunk by golden-section steps. Unbounded growth up to `|s| = 2^27`
/// returns `+∞`; a plateau returns the limit value.
pub fn maximize_concave<S, F>(mut f: F) -> S
where
    S: Scalar,
    F: FnMut(S) -> S,
{
    let f0 = f(S::zero());
    if f0 == S::infinity() {
        return f0;
    }
    let one = S::one();
    let fp = f(one);
    let fm = f(-one);
    if fp == S::infinity() || fm == S::infinity() {
        return S::infinity();
    }

    let (mut a, mut b, mut c, mut fb);
    if fp > f0 || fm > f0 {
        let dir = if fp > f0 { one } else { -one };
        let mut prev_x = S::zero();
        let mut x = dir;
        let mut fx = if fp > f0 { fp } else { fm };
        let two = S::lit(2.0);
        loop {
            let next = x * two;
            let fnext = f(next);
            if fnext == S::infinity() {
                return fnext;
            }
            if fnext <= fx {
                a = prev_x;
                b = x;
                c = next;
                fb = fx;
                break;
            }
            if next.abs() >= S::lit(2.0).powi(MARCH_LIMIT_EXP) {
                let increment = fnext - fx;
                return if increment > S::lit(1e-10) * (one + fnext.abs()) {
                    S::infinity()
                } else {
                    fnext
                };
            }
            prev_x = x;
            x = next;
            fx = fnext;
        }
    } else {
        a = -one;
        b = S::zero();
        c = one;
        fb = f0;
    }
    if a > c {
        std::mem::swap(&mut a, &mut c);
    }

    // golden-section on the bracket (a, b, c) with f(b) >= f(a), f(c)
    let ratio = S::lit(0.381_966_011_250_105_1);
    for _ in 0..300 {
        let width = c - a;
        if width <= S::lit(1e-11) * (one + b.abs()) {
            break;
        }
        let x = if b - a > c - b {
            b - ratio * (b - a)
        } else {
            b + ratio * (c - b)
        };
        if x == b {
            break;
        }
        let fx = f(x);
        if fx == S::infinity() {
            return fx;
        }
        if fx > fb {
            if x < b {
                c = b;
            } else {
                a = b;
            }
            b = x;
            fb = fx;
        } else if x < b {
            a = x;
        } else {
            c = x;
        }
    }
    fb
}

/// Smallest `α` in a bracket at which a nondecreasing predicate turns true,
/// found by bisection (geometric while the bracket spans more than a factor
/// 2, arithmetic afterwards) down to machine resolution.
pub fn bisect_threshold<S, P>(mut lo: S, mut hi: S, mut holds: P) -> S
where
    S: Scalar,
    P: FnMut(S) -> bool,
{
    let two = S::lit(2.0);
    let half = S::lit(0.5);
    for _ in 0..600 {
        if hi - lo <= S::lit(4.0) * S::epsilon() * hi {
            break;
        }
        let mid = if hi > two * lo && lo > S::zero() {
            (lo * hi).sqrt()
        } else {
            (lo + hi) * half
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * half
}
