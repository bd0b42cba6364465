//! Small reference instances with known optimal values.
//!
//! They are shared by the unit tests, the acceptance suite and the CLI's
//! `verify` command.

use crate::cost::{CostFunction, Piece, PiecewiseTerm};
use crate::flow::{FluxEdge, MassFlux};
use crate::geometry::Point;
use crate::measures::{Atom, DiscreteMeasure};
use crate::network::{Street, StreetNetwork};
use crate::scalar::{ExtReal, Finite, Scalar};

fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

fn pt<T: Scalar>(x: f64, y: f64) -> Point<T> {
    Point::xy(lit(x), lit(y))
}

fn measure<T: Scalar>(atoms: &[((f64, f64), f64)]) -> DiscreteMeasure<T> {
    let atoms = atoms.iter().map(|&((x, y), m)| Atom::new(pt(x, y), lit(m))).collect();
    DiscreteMeasure::probability(atoms, false).expect("fixture masses sum to one")
}

/// Four atoms on a diamond: sources `(0,0)`, `(2,0)`, sinks `(1,1)`, `(1,-1)`,
/// each of mass one half. Every pair is `sqrt 2` apart.
pub fn diamond_measures<T: Scalar>() -> (DiscreteMeasure<T>, DiscreteMeasure<T>) {
    (
        measure(&[((0.0, 0.0), 0.5), ((2.0, 0.0), 0.5)]),
        measure(&[((1.0, 1.0), 0.5), ((1.0, -1.0), 0.5)]),
    )
}

/// The coupling of the diamond measures with `m` on `(x1, y1)`, `m in [0, 1/2]`.
pub fn diamond_plan<T: Scalar>(m: T) -> Vec<Vec<T>> {
    let h = lit::<T>(0.5);
    vec![vec![m, h - m], vec![h - m, m]]
}

/// Straight-line flux realising [`diamond_plan`].
pub fn diamond_flux<T: Scalar>(m: T) -> MassFlux<T> {
    let h = lit::<T>(0.5);
    let (x1, x2, y1, y2) = (pt(0.0, 0.0), pt(2.0, 0.0), pt(1.0, 1.0), pt(1.0, -1.0));
    MassFlux::new(vec![
        FluxEdge::new(x1.clone(), y1.clone(), m),
        FluxEdge::new(x1, y2.clone(), h - m),
        FluxEdge::new(x2.clone(), y1, h - m),
        FluxEdge::new(x2, y2, m),
    ])
    .expect("finite fixture")
}

/// A differentiable cost that is affine with slope one half on `[2/5, 3/5]`:
///
/// ```text
/// tau(m) = m                          on [0, 1/5]
///          2/5 - 5/4 (m - 3/5)^2      on (1/5, 2/5]
///          3/20 + m/2                 on (2/5, 3/5]
///          -11/20 + sqrt(m + 2/5)     beyond
/// ```
///
/// Its maintenance cost has a kink at `b = 1/2`.
pub fn two_column_cost<T: Scalar>() -> CostFunction<T> {
    CostFunction::piecewise(vec![
        PiecewiseTerm::new(lit(0.0), Piece::Affine { c0: lit(0.0), c1: lit(1.0) }),
        PiecewiseTerm::new(lit(0.2), Piece::Quadratic { c0: lit(-0.05), c1: lit(1.5), c2: lit(-1.25) }),
        PiecewiseTerm::new(lit(0.4), Piece::Affine { c0: lit(0.15), c1: lit(0.5) }),
        PiecewiseTerm::new(lit(0.6), Piece::ShiftedSqrt { c0: lit(-0.55), scale: lit(1.0), shift: lit(0.4) }),
    ])
    .expect("valid fixture cost")
}

/// Closed form of the maintenance cost of [`two_column_cost`].
pub fn two_column_epsilon(b: f64) -> f64 {
    if b <= 0.5 {
        1.0 / (4.0 * b) - 0.55 + 0.4 * b
    } else if b <= 1.0 {
        b * b / 5.0 - 0.6 * b + 0.4
    } else {
        0.0
    }
}

/// Three sources `(0,0)`, `(1,-l)`, `(2,0)` and three sinks `(0,1)`,
/// `(1,1+l)`, `(2,1)` with masses `2/5, 1/5, 2/5`. With [`two_column_cost`]
/// the middle mass joins one of the outer columns; the two mirror images
/// are both optimal.
#[derive(Clone, Debug)]
pub struct TwoColumn<T> {
    pub ell: T,
    pub cost: CostFunction<T>,
    pub mu_plus: DiscreteMeasure<T>,
    pub mu_minus: DiscreteMeasure<T>,
}

pub fn two_column<T: Scalar>(ell: T) -> TwoColumn<T> {
    let l = ell.to_f64().expect("finite");
    TwoColumn {
        ell,
        cost: two_column_cost(),
        mu_plus: measure(&[((0.0, 0.0), 0.4), ((1.0, -l), 0.2), ((2.0, 0.0), 0.4)]),
        mu_minus: measure(&[((0.0, 1.0), 0.4), ((1.0, 1.0 + l), 0.2), ((2.0, 1.0), 0.4)]),
    }
}

impl<T: Scalar> TwoColumn<T> {
    /// Routing of the middle mass through the column at `x = side`.
    fn column_flux(&self, side: f64) -> MassFlux<T> {
        let l = self.ell.to_f64().expect("finite");
        let other = 2.0 - side;
        MassFlux::new(vec![
            FluxEdge::new(pt(1.0, -l), pt(side, 0.0), lit(0.2)),
            FluxEdge::new(pt(side, 0.0), pt(side, 1.0), lit(0.6)),
            FluxEdge::new(pt(side, 1.0), pt(1.0, 1.0 + l), lit(0.2)),
            FluxEdge::new(pt(other, 0.0), pt(other, 1.0), lit(0.4)),
        ])
        .expect("finite fixture")
    }

    pub fn left_flux(&self) -> MassFlux<T> {
        self.column_flux(0.0)
    }

    pub fn right_flux(&self) -> MassFlux<T> {
        self.column_flux(2.0)
    }

    /// Optimal energy `2 tau(1/5) sqrt(1 + l^2) + tau(3/5) + tau(2/5)`.
    pub fn optimal_value(&self) -> T {
        let c = &self.cost;
        lit::<T>(2.0) * c.value(lit(0.2)) * (T::one() + self.ell * self.ell).sqrt()
            + c.value(lit(0.6))
            + c.value(lit(0.4))
    }

    /// The two unit columns with friction one half and `a = 1`.
    pub fn optimal_network(&self) -> StreetNetwork<T> {
        let h = lit(0.5);
        StreetNetwork::new(
            vec![Street::new(pt(0.0, 0.0), pt(0.0, 1.0), h), Street::new(pt(2.0, 0.0), pt(2.0, 1.0), h)],
            Finite(T::one()),
        )
        .expect("valid fixture network")
    }
}

/// `tau(m) = min(m, 1)` transporting `delta_x` to `delta_y` with
/// `x = (0,0)`, `y = (len, 0)`.
pub fn single_pair<T: Scalar>(len: T) -> (CostFunction<T>, DiscreteMeasure<T>, DiscreteMeasure<T>) {
    let cost = CostFunction::affine_capped(T::one(), T::zero(), T::one()).expect("valid");
    let x = Point::xy(T::zero(), T::zero());
    let y = Point::xy(len, T::zero());
    (cost, DiscreteMeasure::dirac(x), DiscreteMeasure::dirac(y))
}

/// The segment `[x, y]` of [`single_pair`] with constant friction `b`, `a = 1`.
pub fn single_pair_network<T: Scalar>(len: T, b: T) -> StreetNetwork<T> {
    let seg = Street::new(Point::xy(T::zero(), T::zero()), Point::xy(len, T::zero()), b);
    StreetNetwork::new(vec![seg], Finite(T::one())).expect("valid")
}

/// `j` V-shaped roads from `x = (0,0)` to `y = (1,0)` through the apexes
/// `(1/2, 1/i)`, `i = 1..=j`, all of friction one. The cheapest route uses
/// the flattest V and costs `sqrt(1 + 4/j^2)`, which tends to `|x - y| = 1`
/// without ever reaching it.
pub fn v_staircase<T: Scalar>(j: usize, a: ExtReal<T>) -> (StreetNetwork<T>, DiscreteMeasure<T>, DiscreteMeasure<T>) {
    let x = pt::<T>(0.0, 0.0);
    let y = pt::<T>(1.0, 0.0);
    let segments = (1..=j)
        .flat_map(|i| {
            let z = pt::<T>(0.5, 1.0 / i as f64);
            [Street::new(x.clone(), z.clone(), T::one()), Street::new(z, y.clone(), T::one())]
        })
        .collect();
    let net = StreetNetwork::new(segments, a).expect("valid fixture network");
    (net, DiscreteMeasure::dirac(x), DiscreteMeasure::dirac(y))
}

/// Value of the cheapest route through [`v_staircase`].
pub fn v_staircase_value(j: usize) -> f64 {
    (1.0 + 4.0 / (j * j) as f64).sqrt()
}
