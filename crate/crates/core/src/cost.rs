//! Concave transportation costs and their maintenance costs.
//!
//! A transportation cost `tau` is nondecreasing and concave on `[0, inf)`
//! with `tau(0) = 0`; it may jump at the origin. The maintenance cost is the
//! conjugate `eps(b) = sup_{m >= 0} tau(m) - b m`, which is convex,
//! nonincreasing, vanishes exactly from `a = tau'(0)` on and is `+inf` for
//! negative `b`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ExtReal, Finite, PlusInfinity, Scalar};

/// One closed-form concave piece of a piecewise cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece<T> {
    /// `c0 + c1 m`
    Affine { c0: T, c1: T },
    /// `c0 + c1 m + c2 m^2` with `c2 <= 0`
    Quadratic { c0: T, c1: T, c2: T },
    /// `c0 + scale * sqrt(m + shift)` with `scale > 0`
    ShiftedSqrt { c0: T, scale: T, shift: T },
}

impl<T: Scalar> Piece<T> {
    pub fn value(&self, m: T) -> T {
        match *self {
            Piece::Affine { c0, c1 } => c0 + c1 * m,
            Piece::Quadratic { c0, c1, c2 } => c0 + m * (c1 + c2 * m),
            Piece::ShiftedSqrt { c0, scale, shift } => c0 + scale * (m + shift).max(T::zero()).sqrt(),
        }
    }

    /// Derivative at `m`; `+inf` at the branch point of a square root.
    pub fn derivative(&self, m: T) -> ExtReal<T> {
        match *self {
            Piece::Affine { c1, .. } => Finite(c1),
            Piece::Quadratic { c1, c2, .. } => Finite(c1 + T::lit(2.0) * c2 * m),
            Piece::ShiftedSqrt { scale, shift, .. } => {
                let r = m + shift;
                if r <= T::zero() {
                    PlusInfinity
                } else {
                    Finite(scale / (T::lit(2.0) * r.sqrt()))
                }
            }
        }
    }

    /// `lim tau(m)/m` and whether `tau(m) - slope*m` stays bounded.
    fn asymptotics(&self) -> (T, bool) {
        match *self {
            Piece::Affine { c1, .. } => (c1, true),
            Piece::Quadratic { c1, c2, .. } if c2 == T::zero() => (c1, true),
            Piece::Quadratic { .. } => (T::neg_infinity(), true),
            Piece::ShiftedSqrt { .. } => (T::zero(), false),
        }
    }

    /// `sup_{m in [lo, hi]} value(m) - b m` for finite `b`; `hi = None` is `+inf`.
    fn sup_minus_linear(&self, b: T, lo: T, hi: Option<T>) -> ExtReal<T> {
        let g = |m: T| self.value(m) - b * m;
        let clamp = |m: T| {
            let m = m.max(lo);
            match hi {
                Some(h) => m.min(h),
                None => m,
            }
        };
        match *self {
            Piece::Affine { c1, .. } => match hi {
                Some(h) => Finite(g(lo).max(g(h))),
                None if c1 > b => PlusInfinity,
                None => Finite(g(lo)),
            },
            Piece::Quadratic { c1, c2, .. } => {
                if c2 == T::zero() {
                    return Piece::Affine { c0: self.value(T::zero()), c1 }.sup_minus_linear(b, lo, hi);
                }
                Finite(g(clamp((b - c1) / (T::lit(2.0) * c2))))
            }
            Piece::ShiftedSqrt { scale, shift, .. } => {
                if b <= T::zero() {
                    return match hi {
                        Some(h) => Finite(g(h)),
                        None => PlusInfinity,
                    };
                }
                let r = scale / (T::lit(2.0) * b);
                Finite(g(clamp(r * r - shift)))
            }
        }
    }
}

/// A piece active from `start` up to the next piece's start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTerm<T> {
    pub start: T,
    #[serde(flatten)]
    pub piece: Piece<T>,
}

impl<T> PiecewiseTerm<T> {
    pub fn new(start: T, piece: Piece<T>) -> Self {
        PiecewiseTerm { start, piece }
    }
}

/// The cost families the toolkit knows in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CostFamily<T> {
    /// `m^alpha`, `alpha in (0, 1]`
    Power { alpha: T },
    /// `min(a_bar m, b_bar m + c_bar)`
    AffineCapped { a_bar: T, b_bar: T, c_bar: T },
    /// `c_bar` for every `m > 0`
    Discrete { c_bar: T },
    Piecewise { pieces: Vec<PiecewiseTerm<T>> },
}

/// A validated concave transportation cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CostFamily<T>",
    into = "CostFamily<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct CostFunction<T> {
    family: CostFamily<T>,
    jump_at_zero: T,
}

impl<T: Scalar> TryFrom<CostFamily<T>> for CostFunction<T> {
    type Error = Error;
    fn try_from(family: CostFamily<T>) -> Result<Self> {
        CostFunction::new(family)
    }
}

impl<T> From<CostFunction<T>> for CostFamily<T> {
    fn from(c: CostFunction<T>) -> Self {
        c.family
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidCost(msg.into()))
}

impl<T: Scalar> CostFunction<T> {
    pub fn new(family: CostFamily<T>) -> Result<Self> {
        let zero = T::zero();
        let jump_at_zero = match &family {
            CostFamily::Power { alpha } => {
                if !(*alpha > zero && *alpha <= T::one()) {
                    return invalid(format!("power exponent {alpha} outside (0, 1]"));
                }
                zero
            }
            CostFamily::AffineCapped { a_bar, b_bar, c_bar } => {
                let finite = a_bar.is_finite() && b_bar.is_finite() && c_bar.is_finite();
                if !(finite && *c_bar > zero && *b_bar >= zero && *a_bar > *b_bar) {
                    return invalid("affine capped cost needs a_bar > b_bar >= 0 and c_bar > 0");
                }
                zero
            }
            CostFamily::Discrete { c_bar } => {
                if !(c_bar.is_finite() && *c_bar > zero) {
                    return invalid("discrete cost needs c_bar > 0");
                }
                *c_bar
            }
            CostFamily::Piecewise { pieces } => validate_pieces(pieces)?,
        };
        Ok(CostFunction { family, jump_at_zero })
    }

    pub fn power(alpha: T) -> Result<Self> {
        Self::new(CostFamily::Power { alpha })
    }

    /// `tau(m) = m`, the Wasserstein-1 case.
    pub fn linear() -> Self {
        Self::new(CostFamily::Power { alpha: T::one() }).expect("valid")
    }

    pub fn affine_capped(a_bar: T, b_bar: T, c_bar: T) -> Result<Self> {
        Self::new(CostFamily::AffineCapped { a_bar, b_bar, c_bar })
    }

    pub fn discrete(c_bar: T) -> Result<Self> {
        Self::new(CostFamily::Discrete { c_bar })
    }

    pub fn piecewise(pieces: Vec<PiecewiseTerm<T>>) -> Result<Self> {
        Self::new(CostFamily::Piecewise { pieces })
    }

    pub fn family(&self) -> &CostFamily<T> {
        &self.family
    }

    /// `tau_+(0) = lim_{m -> 0+} tau(m)`.
    pub fn jump_at_zero(&self) -> T {
        self.jump_at_zero
    }

    /// Piecewise view of every family except fractional powers.
    fn pieces(&self) -> Option<Cow<'_, [PiecewiseTerm<T>]>> {
        let zero = T::zero();
        let affine = |start, c0, c1| PiecewiseTerm::new(start, Piece::Affine { c0, c1 });
        match &self.family {
            CostFamily::Power { alpha } if *alpha == T::one() => {
                Some(Cow::Owned(vec![affine(zero, zero, T::one())]))
            }
            CostFamily::Power { .. } => None,
            CostFamily::AffineCapped { a_bar, b_bar, c_bar } => Some(Cow::Owned(vec![
                affine(zero, zero, *a_bar),
                affine(*c_bar / (*a_bar - *b_bar), *c_bar, *b_bar),
            ])),
            CostFamily::Discrete { c_bar } => Some(Cow::Owned(vec![affine(zero, *c_bar, zero)])),
            CostFamily::Piecewise { pieces } => Some(Cow::Borrowed(pieces)),
        }
    }

    /// `tau(m)` for `m >= 0`, without input checking.
    pub fn value(&self, m: T) -> T {
        if m <= T::zero() {
            return T::zero();
        }
        match &self.family {
            CostFamily::Power { alpha } => m.powf(*alpha),
            CostFamily::AffineCapped { a_bar, b_bar, c_bar } => (*a_bar * m).min(*b_bar * m + *c_bar),
            CostFamily::Discrete { c_bar } => *c_bar,
            CostFamily::Piecewise { pieces } => {
                // pieces own the half-open intervals (start_i, start_{i+1}]
                let i = pieces.partition_point(|p| p.start < m).max(1) - 1;
                pieces[i].piece.value(m)
            }
        }
    }

    pub fn eval_tau(&self, m: T) -> Result<T> {
        if !(m >= T::zero()) || !m.is_finite() {
            return Err(Error::NegativeMass(m.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(self.value(m))
    }

    /// `a = lim_{m -> 0+} tau(m) / m`.
    pub fn tau_prime_zero(&self) -> ExtReal<T> {
        if self.jump_at_zero > T::zero() {
            return PlusInfinity;
        }
        match &self.family {
            CostFamily::Power { alpha } if *alpha < T::one() => PlusInfinity,
            _ => {
                let pieces = self.pieces().expect("piecewise view");
                pieces[0].piece.derivative(T::zero())
            }
        }
    }

    /// Right derivative `tau'_+(m)` for `m > 0`.
    pub fn right_derivative(&self, m: T) -> ExtReal<T> {
        match &self.family {
            CostFamily::Power { alpha } => Finite(*alpha * m.powf(*alpha - T::one())),
            _ => {
                let pieces = self.pieces().expect("piecewise view");
                let i = pieces.partition_point(|p| p.start <= m).max(1) - 1;
                pieces[i].piece.derivative(m)
            }
        }
    }

    /// Left derivative `tau'_-(m)` for `m > 0`.
    pub fn left_derivative(&self, m: T) -> ExtReal<T> {
        match &self.family {
            CostFamily::Power { .. } => self.right_derivative(m),
            _ => {
                let pieces = self.pieces().expect("piecewise view");
                let i = pieces.partition_point(|p| p.start < m).max(1) - 1;
                pieces[i].piece.derivative(m)
            }
        }
    }

    /// `lim tau(m)/m` as `m -> inf`, and whether `tau(m) - slope m` is bounded.
    pub fn asymptotic_slope(&self) -> (T, bool) {
        match &self.family {
            CostFamily::Power { alpha } if *alpha < T::one() => (T::zero(), false),
            _ => {
                let pieces = self.pieces().expect("piecewise view");
                pieces.last().expect("nonempty").piece.asymptotics()
            }
        }
    }

    /// Friction coefficient induced by a positive mass: `-max d(-tau)(m)`,
    /// which for concave `tau` is the right derivative.
    pub fn friction_from_mass(&self, m: T) -> Result<T> {
        if !(m > T::zero()) {
            return if m == T::zero() {
                Err(Error::ZeroMass)
            } else {
                Err(Error::NegativeMass(m.to_f64().unwrap_or(f64::NAN)))
            };
        }
        match self.right_derivative(m) {
            Finite(b) => Ok(b.max(T::zero())),
            PlusInfinity => Err(Error::InvalidCost(format!("unbounded slope at m = {m}"))),
        }
    }

    /// `tau~ = tau - tau_+(0) 1_{(0, inf)}`, the cost with its jump removed.
    pub fn without_jump(&self) -> Self {
        let jump = self.jump_at_zero;
        if jump == T::zero() {
            return self.clone();
        }
        let pieces = self
            .pieces()
            .expect("jumps only occur in piecewise families")
            .iter()
            .map(|t| {
                let piece = match t.piece {
                    Piece::Affine { c0, c1 } => Piece::Affine { c0: c0 - jump, c1 },
                    Piece::Quadratic { c0, c1, c2 } => Piece::Quadratic { c0: c0 - jump, c1, c2 },
                    Piece::ShiftedSqrt { c0, scale, shift } => {
                        Piece::ShiftedSqrt { c0: c0 - jump, scale, shift }
                    }
                };
                PiecewiseTerm::new(t.start, piece)
            })
            .collect();
        CostFunction::piecewise(pieces).expect("shifting keeps validity")
    }

    pub fn maintenance(&self) -> MaintenanceCost<T> {
        MaintenanceCost::new(self.clone())
    }

    /// Per-length cost of a single road type with friction `b_bar` and upkeep
    /// `c_bar`: `0` for `b >= a_bar`, `c_bar` on `[b_bar, a_bar)`, `+inf` below.
    /// Only defined for the affine capped family. `eps <= c`, with equality
    /// outside the open interval `(b_bar, a_bar)`.
    pub fn single_road_cost(&self, b: T) -> Option<ExtReal<T>> {
        let CostFamily::AffineCapped { a_bar, b_bar, c_bar } = self.family else {
            return None;
        };
        Some(if b >= a_bar {
            Finite(T::zero())
        } else if b >= b_bar {
            Finite(c_bar)
        } else {
            PlusInfinity
        })
    }

    /// `b m + eps(b) - tau(m)`, nonnegative by the Fenchel-Young inequality.
    pub fn fenchel_young_residual(&self, m: T, b: T) -> ExtReal<T> {
        match self.epsilon_closed(b) {
            Finite(e) => Finite(b * m + e - self.value(m)),
            PlusInfinity => PlusInfinity,
        }
    }

    fn epsilon_closed(&self, b: T) -> ExtReal<T> {
        let zero = T::zero();
        if b.is_nan() || b < zero {
            return PlusInfinity;
        }
        if let CostFamily::Power { alpha } = self.family {
            if alpha < T::one() {
                if b == zero {
                    return PlusInfinity;
                }
                let one = T::one();
                return Finite((one - alpha) * (alpha / b).powf(alpha / (one - alpha)));
            }
        }
        let pieces = self.pieces().expect("piecewise view");
        let (slope, bounded) = pieces.last().expect("nonempty").piece.asymptotics();
        if b < slope || (b == slope && !bounded) {
            return PlusInfinity;
        }
        let mut best = Finite(zero);
        for (i, term) in pieces.iter().enumerate() {
            let hi = pieces.get(i + 1).map(|next| next.start);
            best = best.max(term.piece.sup_minus_linear(b, term.start, hi));
        }
        best
    }
}

fn validate_pieces<T: Scalar>(pieces: &[PiecewiseTerm<T>]) -> Result<T> {
    let zero = T::zero();
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
    let Some(first) = pieces.first() else {
        return invalid("piecewise cost needs at least one piece");
    };
    if first.start != zero {
        return invalid("first piece must start at 0");
    }
    for (i, term) in pieces.iter().enumerate() {
        let coeffs_finite = match term.piece {
            Piece::Affine { c0, c1 } => c0.is_finite() && c1.is_finite(),
            Piece::Quadratic { c0, c1, c2 } => {
                if c2 > zero {
                    return invalid(format!("piece {i} is convex"));
                }
                c0.is_finite() && c1.is_finite() && c2.is_finite()
            }
            Piece::ShiftedSqrt { c0, scale, shift } => {
                if !(scale > zero) {
                    return invalid(format!("piece {i} needs a positive sqrt scale"));
                }
                if term.start + shift < zero {
                    return invalid(format!("piece {i} takes a square root of a negative number"));
                }
                c0.is_finite() && scale.is_finite() && shift.is_finite()
            }
        };
        if !coeffs_finite || !term.start.is_finite() {
            return invalid(format!("piece {i} has non-finite coefficients"));
        }
        if let Some(next) = pieces.get(i + 1) {
            if !(next.start > term.start) {
                return invalid("breakpoints must be strictly increasing");
            }
            let m = next.start;
            let (left, right) = (term.piece.value(m), next.piece.value(m));
            if (left - right).abs() > tol * (T::one() + left.abs()) {
                return invalid(format!("discontinuity at breakpoint {m}"));
            }
            let (dl, dr) = (term.piece.derivative(m), next.piece.derivative(m));
            if dl < Finite(-tol) {
                return invalid(format!("piece {i} decreases before {m}"));
            }
            if dr > dl + tol {
                return invalid(format!("slope increases at breakpoint {m}"));
            }
        }
    }
    let (slope, _) = pieces.last().expect("nonempty").piece.asymptotics();
    if slope < zero {
        return invalid("last piece must be nondecreasing");
    }
    let jump = first.piece.value(zero);
    if jump < -tol {
        return invalid("tau must be nonnegative near 0");
    }
    Ok(jump.max(zero))
}

/// Search window of the numeric conjugate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBounds<T> {
    pub m_max: T,
    pub tolerance: T,
}

impl<T: Scalar> Default for SearchBounds<T> {
    fn default() -> Self {
        SearchBounds { m_max: T::lit(1e3), tolerance: T::search_tol() }
    }
}

/// The maintenance cost `eps = (-tau)^*(-.)` of a transportation cost.
#[derive(Clone, Debug)]
pub struct MaintenanceCost<T> {
    source: CostFunction<T>,
    ambient: ExtReal<T>,
    pub search: SearchBounds<T>,
}

impl<T: Scalar> MaintenanceCost<T> {
    pub fn new(source: CostFunction<T>) -> Self {
        let ambient = source.tau_prime_zero();
        MaintenanceCost { source, ambient, search: SearchBounds::default() }
    }

    pub fn source(&self) -> &CostFunction<T> {
        &self.source
    }

    /// `a = tau'(0) = inf eps^{-1}(0)`.
    pub fn ambient(&self) -> ExtReal<T> {
        self.ambient
    }

    /// `eps(b)` from the closed form.
    pub fn eval(&self, b: T) -> ExtReal<T> {
        self.source.epsilon_closed(b)
    }

    /// `eps(b)` by golden-section maximisation of `m -> tau(m) - b m`,
    /// with the tail decided from the asymptotic slope of `tau`.
    pub fn eval_numeric(&self, b: T) -> ExtReal<T> {
        if b.is_nan() || b < T::zero() {
            return PlusInfinity;
        }
        let (slope, bounded) = self.source.asymptotic_slope();
        if b < slope || (b == slope && !bounded) {
            return PlusInfinity;
        }
        let g = |m: T| self.source.value(m) - b * m;
        let mut hi = self.search.m_max;
        let limit = T::lit(1e15);
        loop {
            let (arg, val) = golden_max(&g, T::zero(), hi, self.search.tolerance);
            let best = val.max(g(hi)).max(T::zero());
            if arg < hi * T::lit(0.999) || hi >= limit {
                return Finite(best);
            }
            hi = hi * T::lit(16.0);
        }
    }
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max<T: Scalar>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while hi - lo > tol * (T::one() + lo.abs()) && iterations < 400 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        iterations += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
