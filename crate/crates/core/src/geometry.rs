//! Points and segments in `R^n`.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// A point (or displacement) in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T>(pub Vec<T>);

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point(coords)
    }

    pub fn xy(x: T, y: T) -> Self {
        Point(vec![x, y])
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    /// `self + t (other - self)`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        Point(self.0.iter().zip(&other.0).map(|(&a, &b)| a + t * (b - a)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Lexicographic comparison, used for deterministic orderings.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(ord) => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    /// Integer grid key; equal keys mean the points are identified.
    pub(crate) fn grid_key(&self, snap: T) -> Vec<i64> {
        self.0
            .iter()
            .map(|&x| (x / snap).round().to_i64().unwrap_or(i64::MAX))
            .collect()
    }
}

impl<T: Scalar> Index<usize> for Point<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> Sub for &Point<T> {
    type Output = Point<T>;
    fn sub(self, rhs: Self) -> Point<T> {
        Point(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Scalar> Add for &Point<T> {
    type Output = Point<T>;
    fn add(self, rhs: Self) -> Point<T> {
        Point(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<T: Scalar> Mul<T> for &Point<T> {
    type Output = Point<T>;
    fn mul(self, k: T) -> Point<T> {
        Point(self.0.iter().map(|&a| a * k).collect())
    }
}

impl<T: Scalar> fmt::Display for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// Parameter of the orthogonal projection of `x` onto the line through
/// `p`, `q`, clamped to `[0, 1]`.
pub fn project_param<T: Scalar>(p: &Point<T>, q: &Point<T>, x: &Point<T>) -> T {
    let d = q - p;
    let len2 = d.dot(&d);
    if len2 == T::zero() {
        return T::zero();
    }
    let t = (x - p).dot(&d) / len2;
    t.max(T::zero()).min(T::one())
}

/// Distance from `x` to the closed segment `[p, q]`.
pub fn dist_to_segment<T: Scalar>(p: &Point<T>, q: &Point<T>, x: &Point<T>) -> T {
    let t = project_param(p, q, x);
    p.lerp(q, t).dist(x)
}

/// Unclamped parameter of `x` along `p -> q` together with its distance
/// from the supporting line.
pub fn line_coordinates<T: Scalar>(p: &Point<T>, q: &Point<T>, x: &Point<T>) -> (T, T) {
    let d = q - p;
    let len2 = d.dot(&d);
    let t = (x - p).dot(&d) / len2;
    (t, p.lerp(q, t).dist(x))
}

/// Closest pair of points between segments `[p1, q1]` and `[p2, q2]`,
/// returned as parameters `(s, t)` on each.
pub fn closest_params<T: Scalar>(
    p1: &Point<T>,
    q1: &Point<T>,
    p2: &Point<T>,
    q2: &Point<T>,
) -> (T, T) {
    let zero = T::zero();
    let one = T::one();
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let clamp = |x: T| x.max(zero).min(one);
    let mut s = if denom > T::epsilon() * a * e {
        clamp((b * f - c * e) / denom)
    } else {
        zero
    };
    let mut t = (b * s + f) / e;
    if t < zero {
        t = zero;
        s = clamp(-c / a);
    } else if t > one {
        t = one;
        s = clamp((b - c) / a);
    }
    (s, t)
}
