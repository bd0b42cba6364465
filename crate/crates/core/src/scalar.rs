//! Scalar abstraction and extended reals.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

/// Floating point type the toolkit can compute in: `f32` or `f64`.
///
/// The tolerance hooks let each precision pick thresholds that are
/// meaningful for its mantissa; everything numeric in the crate is written
/// against this trait.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Grid used to merge coincident measure atoms.
    fn atom_snap() -> Self;

    /// Distance below which two geometric points are the same node.
    fn geometry_snap() -> Self;

    /// Masses at or below this are treated as zero.
    fn mass_tol() -> Self;

    /// Allowed deviation of a probability measure's total mass from one.
    fn normalization_tol() -> Self;

    /// Bracket width at which golden-section search stops.
    fn search_tol() -> Self;
}

impl Scalar for f64 {
    fn atom_snap() -> Self {
        1e-12
    }
    fn geometry_snap() -> Self {
        1e-9
    }
    fn mass_tol() -> Self {
        1e-14
    }
    fn normalization_tol() -> Self {
        1e-9
    }
    fn search_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn atom_snap() -> Self {
        1e-6
    }
    fn geometry_snap() -> Self {
        1e-5
    }
    fn mass_tol() -> Self {
        1e-7
    }
    fn normalization_tol() -> Self {
        1e-5
    }
    fn search_tol() -> Self {
        1e-6
    }
}

/// A value in `[-inf, +inf)` extended by an explicit `+inf`.
///
/// Only the positive infinity is modelled; costs, distances and energies
/// never become `-inf`. Multiplication follows the convention `0 * inf = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal<T> {
    Finite(T),
    PlusInfinity,
}

pub use ExtReal::{Finite, PlusInfinity};

impl<T: Scalar> ExtReal<T> {
    /// Wraps a float, mapping `+inf` to [`ExtReal::PlusInfinity`].
    pub fn from_float(x: T) -> Self {
        if x == T::infinity() {
            PlusInfinity
        } else {
            Finite(x)
        }
    }

    pub fn zero() -> Self {
        Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PlusInfinity)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<T> {
        match self {
            Finite(x) => Some(x),
            PlusInfinity => None,
        }
    }

    /// Lossy conversion back to a float (`+inf` for the infinite case).
    pub fn to_float(self) -> T {
        match self {
            Finite(x) => x,
            PlusInfinity => T::infinity(),
        }
    }

    /// `self * k` for a nonnegative scalar `k`, with `inf * 0 = 0`.
    pub fn scale(self, k: T) -> Self {
        match self {
            Finite(x) => Finite(x * k),
            PlusInfinity if k == T::zero() => Finite(T::zero()),
            PlusInfinity => PlusInfinity,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// `|self - other| <= tol`, with two infinities considered equal.
    pub fn approx_eq(self, other: Self, tol: T) -> bool {
        match (self, other) {
            (Finite(a), Finite(b)) => (a - b).abs() <= tol,
            (PlusInfinity, PlusInfinity) => true,
            _ => false,
        }
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), PlusInfinity) => Some(Ordering::Less),
            (PlusInfinity, Finite(_)) => Some(Ordering::Greater),
            (PlusInfinity, PlusInfinity) => Some(Ordering::Equal),
        }
    }
}

impl<T: Scalar> Add for ExtReal<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            _ => PlusInfinity,
        }
    }
}

impl<T: Scalar> Add<T> for ExtReal<T> {
    type Output = Self;
    fn add(self, rhs: T) -> Self {
        self + Finite(rhs)
    }
}

impl<T: Scalar> AddAssign for ExtReal<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Mul<T> for ExtReal<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> Sum for ExtReal<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl<T: Scalar> From<T> for ExtReal<T> {
    fn from(x: T) -> Self {
        Self::from_float(x)
    }
}

impl<T: Display> Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite(x) => Display::fmt(x, f),
            PlusInfinity => f.write_str("inf"),
        }
    }
}

impl<T: Serialize> Serialize for ExtReal<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Finite(x) => x.serialize(serializer),
            PlusInfinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for ExtReal<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Num(T),
            Text(String),
        }
        match Repr::<T>::deserialize(deserializer)? {
            Repr::Num(x) if x.is_finite() => Ok(Finite(x)),
            Repr::Num(_) => Err(de::Error::custom("expected a finite number or \"inf\"")),
            Repr::Text(s) if matches!(s.as_str(), "inf" | "+inf" | "infinity") => Ok(PlusInfinity),
            Repr::Text(s) => Err(de::Error::custom(format!("invalid extended real {s:?}"))),
        }
    }
}

/// Total order on floats for use in heaps; NaN never reaches the solvers.
pub(crate) fn cmp_f<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::<f64>::PlusInfinity.scale(0.0), Finite(0.0));
        assert_eq!(ExtReal::<f64>::PlusInfinity.scale(2.0), PlusInfinity);
    }

    #[test]
    fn ordering_puts_infinity_last() {
        let xs = [Finite(3.0), PlusInfinity, Finite(-1.0)];
        let max = xs.iter().copied().fold(Finite(f64::MIN), ExtReal::max);
        assert_eq!(max, PlusInfinity);
        assert!(Finite(1e300) < PlusInfinity);
    }

    #[test]
    fn json_round_trip() {
        let v: ExtReal<f64> = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(v, PlusInfinity);
        let v: ExtReal<f64> = serde_json::from_str("1.8").unwrap();
        assert_eq!(v, Finite(1.8));
        assert_eq!(serde_json::to_string(&PlusInfinity::<f64>).unwrap(), "\"inf\"");
        assert!(serde_json::from_str::<ExtReal<f64>>("\"banana\"").is_err());
    }

    #[test]
    fn f32_lane_shares_semantics() {
        let x: ExtReal<f32> = Finite(1.5) + Finite(2.0);
        assert_eq!(x, Finite(3.5));
        assert!((Finite(1.0f32) + PlusInfinity).is_infinite());
    }
}
