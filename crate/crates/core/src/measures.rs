//! Finite atomic measures and couplings between them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scalar::{ExtReal, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    #[serde(rename = "p")]
    pub point: Point<T>,
    #[serde(rename = "m")]
    pub mass: T,
}

impl<T> Atom<T> {
    pub fn new(point: Point<T>, mass: T) -> Self {
        Atom { point, mass }
    }
}

/// A finite sum of weighted Dirac masses with positive weights.
///
/// Measures built through [`DiscreteMeasure::probability`] have total mass
/// one; [`DiscreteMeasure::nonnegative`] admits any positive total and is
/// used for positive and negative parts of divergences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "MeasureSpec<T>",
    into = "MeasureSpec<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct DiscreteMeasure<T> {
    atoms: Vec<Atom<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSpec<T> {
    pub atoms: Vec<Atom<T>>,
}

impl<T: Scalar> TryFrom<MeasureSpec<T>> for DiscreteMeasure<T> {
    type Error = Error;
    fn try_from(spec: MeasureSpec<T>) -> Result<Self> {
        DiscreteMeasure::probability(spec.atoms, false)
    }
}

impl<T> From<DiscreteMeasure<T>> for MeasureSpec<T> {
    fn from(m: DiscreteMeasure<T>) -> Self {
        MeasureSpec { atoms: m.atoms }
    }
}

/// Merges atoms at coincident points, keeping first-occurrence order.
fn merge_atoms<T: Scalar>(atoms: Vec<Atom<T>>, snap: T) -> Vec<Atom<T>> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match index.get(&atom.point.grid_key(snap)) {
            Some(&i) => merged[i].mass = merged[i].mass + atom.mass,
            None => {
                index.insert(atom.point.grid_key(snap), merged.len());
                merged.push(atom);
            }
        }
    }
    merged
}

fn check_dims(points: impl Iterator<Item = usize>) -> Result<()> {
    let mut dim = None;
    for d in points {
        match dim {
            None => dim = Some(d),
            Some(e) if e != d => return Err(Error::DimensionMismatch { expected: e, found: d }),
            _ => {}
        }
    }
    if dim == Some(0) {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    Ok(())
}

impl<T: Scalar> DiscreteMeasure<T> {
    /// Builds a probability measure; with `normalize` the masses are rescaled
    /// to total one, otherwise a total off by more than the normalization
    /// tolerance is rejected.
    pub fn probability(atoms: Vec<Atom<T>>, normalize: bool) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut measure = Self::nonnegative(atoms)?;
        let total = measure.total_mass();
        if !normalize && (total - T::one()).abs() > T::normalization_tol() {
            return Err(Error::UnnormalizedMass(total.to_f64().unwrap_or(f64::NAN)));
        }
        // rescale inside the tolerance too, so totals agree to rounding
        for a in &mut measure.atoms {
            a.mass = a.mass / total;
        }
        Ok(measure)
    }

    /// A finite positive measure with arbitrary total mass (possibly empty).
    pub fn nonnegative(atoms: Vec<Atom<T>>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass > T::zero() && a.mass.is_finite()) {
                return Err(Error::NonPositiveMass(a.mass.to_f64().unwrap_or(f64::NAN)));
            }
            if !a.point.is_finite() {
                return Err(Error::InvalidFlux("non-finite atom position".into()));
            }
        }
        check_dims(atoms.iter().map(|a| a.point.dim()))?;
        Ok(DiscreteMeasure { atoms: merge_atoms(atoms, T::atom_snap()) })
    }

    /// `delta_x`.
    pub fn dirac(point: Point<T>) -> Self {
        DiscreteMeasure { atoms: vec![Atom::new(point, T::one())] }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point<T>> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.point.dim())
    }

    /// `self - other` as a signed measure.
    pub fn minus(&self, other: &Self) -> SignedDiscreteMeasure<T> {
        let atoms = self
            .atoms
            .iter()
            .cloned()
            .chain(other.atoms.iter().map(|a| Atom::new(a.point.clone(), -a.mass)))
            .collect();
        SignedDiscreteMeasure::new(atoms)
    }
}

/// A signed atomic measure; used for divergences `mu_+ - mu_-`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedDiscreteMeasure<T> {
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> SignedDiscreteMeasure<T> {
    /// Merges coincident atoms and drops the ones that cancel.
    pub fn new(atoms: Vec<Atom<T>>) -> Self {
        let atoms = merge_atoms(atoms, T::atom_snap())
            .into_iter()
            .filter(|a| a.mass.abs() > T::mass_tol())
            .collect();
        SignedDiscreteMeasure { atoms }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Signed mass at `p` (zero if `p` is not an atom).
    pub fn mass_at(&self, p: &Point<T>) -> T {
        let snap = T::geometry_snap();
        self.atoms
            .iter()
            .filter(|a| a.point.dist(p) <= snap)
            .map(|a| a.mass)
            .sum()
    }

    pub fn positive_part(&self) -> DiscreteMeasure<T> {
        let atoms = self.atoms.iter().filter(|a| a.mass > T::zero()).cloned().collect();
        DiscreteMeasure { atoms }
    }

    pub fn negative_part(&self) -> DiscreteMeasure<T> {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.mass < T::zero())
            .map(|a| Atom::new(a.point.clone(), -a.mass))
            .collect();
        DiscreteMeasure { atoms }
    }

    /// Largest per-atom difference between the two signed measures.
    pub fn max_deviation(&self, other: &Self) -> T {
        let delta = self.atoms.iter().cloned().chain(
            other.atoms.iter().map(|a| Atom::new(a.point.clone(), -a.mass)),
        );
        merge_atoms(delta.collect(), T::geometry_snap())
            .iter()
            .map(|a| a.mass.abs())
            .fold(T::zero(), T::max)
    }
}

/// A coupling `pi_ij >= 0` with marginals `source` and `target`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct TransportPlan<T> {
    source: DiscreteMeasure<T>,
    target: DiscreteMeasure<T>,
    weights: Vec<Vec<T>>,
}

impl<T: Scalar> TransportPlan<T> {
    /// Checks shape, nonnegativity and both marginals to within `1e-10`
    /// (scaled for lower precisions).
    pub fn new(source: DiscreteMeasure<T>, target: DiscreteMeasure<T>, weights: Vec<Vec<T>>) -> Result<Self> {
        if weights.len() != source.len() {
            return Err(Error::DimensionMismatch { expected: source.len(), found: weights.len() });
        }
        if let Some(row) = weights.iter().find(|r| r.len() != target.len()) {
            return Err(Error::DimensionMismatch { expected: target.len(), found: row.len() });
        }
        let plan = TransportPlan { source, target, weights };
        let tol = marginal_tol::<T>();
        let violation = plan.marginal_violation();
        if violation > tol || plan.weights.iter().flatten().any(|&w| w < -tol) {
            return Err(Error::MarginalViolation(violation.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(plan)
    }

    pub fn source(&self) -> &DiscreteMeasure<T> {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure<T> {
        &self.target
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i][j]
    }

    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_violation(&self) -> T {
        let rows = self
            .weights
            .iter()
            .zip(self.source.atoms())
            .map(|(row, a)| (row.iter().copied().sum::<T>() - a.mass).abs());
        let cols = self.target.atoms().iter().enumerate().map(|(j, b)| {
            (self.weights.iter().map(|row| row[j]).sum::<T>() - b.mass).abs()
        });
        rows.chain(cols).fold(T::zero(), T::max)
    }

    /// `sum_ij pi_ij c_ij`; an infinite entry only counts if it carries mass.
    pub fn cost(&self, cost: &[Vec<ExtReal<T>>]) -> Result<ExtReal<T>> {
        plan_cost(&self.weights, cost)
    }
}

pub(crate) fn marginal_tol<T: Scalar>() -> T {
    T::normalization_tol() * T::lit(0.1)
}

/// `sum_ij pi_ij c_ij` for a raw weight matrix.
pub fn plan_cost<T: Scalar>(weights: &[Vec<T>], cost: &[Vec<ExtReal<T>>]) -> Result<ExtReal<T>> {
    if weights.len() != cost.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), found: cost.len() });
    }
    let mut total = ExtReal::zero();
    for (w_row, c_row) in weights.iter().zip(cost) {
        if w_row.len() != c_row.len() {
            return Err(Error::DimensionMismatch { expected: w_row.len(), found: c_row.len() });
        }
        for (&w, &c) in w_row.iter().zip(c_row) {
            total += c.scale(w.max(T::zero()));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Finite, PlusInfinity};

    fn atom(x: f64, y: f64, m: f64) -> Atom<f64> {
        Atom::new(Point::xy(x, y), m)
    }

    #[test]
    fn single_atom() {
        let m = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 1.0)], false).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn duplicates_merge() {
        let m = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.5), atom(0.0, 0.0, 0.5)], false).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].mass, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let err = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.4), atom(1.0, 0.0, 0.4)], false);
        assert!(matches!(err, Err(Error::UnnormalizedMass(_))));
        let ok = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.4), atom(1.0, 0.0, 0.4)], true).unwrap();
        assert!((ok.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(DiscreteMeasure::<f64>::probability(vec![], false), Err(Error::EmptyMeasure));
        assert!(matches!(
            DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.0), atom(1.0, 0.0, 1.0)], false),
            Err(Error::NonPositiveMass(_))
        ));
        let mixed = vec![atom(0.0, 0.0, 0.5), Atom::new(Point::new(vec![1.0]), 0.5)];
        assert!(matches!(DiscreteMeasure::probability(mixed, false), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn signed_difference_cancels() {
        let mu = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.5), atom(1.0, 0.0, 0.5)], false).unwrap();
        let nu = DiscreteMeasure::probability(vec![atom(1.0, 0.0, 0.5), atom(2.0, 0.0, 0.5)], false).unwrap();
        let d = mu.minus(&nu);
        assert_eq!(d.atoms().len(), 2);
        assert_eq!(d.mass_at(&Point::xy(0.0, 0.0)), 0.5);
        assert_eq!(d.mass_at(&Point::xy(1.0, 0.0)), 0.0);
        assert_eq!(d.positive_part().total_mass(), 0.5);
    }

    #[test]
    fn plan_cost_examples() {
        let mu = DiscreteMeasure::probability(vec![atom(0.0, 0.0, 0.5), atom(1.0, 0.0, 0.5)], false).unwrap();
        let plan = TransportPlan::new(mu.clone(), mu.clone(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let c = vec![vec![Finite(0.0), Finite(1.0)], vec![Finite(1.0), Finite(0.0)]];
        assert_eq!(plan.cost(&c).unwrap(), Finite(0.0));
        let c = vec![vec![PlusInfinity, Finite(1.0)], vec![PlusInfinity, Finite(0.0)]];
        assert_eq!(plan.cost(&c).unwrap(), PlusInfinity);
        assert!(matches!(plan.cost(&c[..1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn diamond_plan_costs_sqrt_two() {
        let (mu, nu) = crate::fixtures::diamond_measures::<f64>();
        let m = 0.25;
        let plan = crate::fixtures::diamond_plan(m);
        let s = 2f64.sqrt();
        let c = vec![vec![Finite(s); 2]; 2];
        let plan = TransportPlan::new(mu, nu, plan).unwrap();
        assert!((plan.cost(&c).unwrap().finite().unwrap() - s).abs() < 1e-15);
    }

    #[test]
    fn plan_rejects_wrong_marginals() {
        let mu = DiscreteMeasure::dirac(Point::xy(0.0, 0.0));
        assert!(matches!(
            TransportPlan::new(mu.clone(), mu, vec![vec![0.5]]),
            Err(Error::MarginalViolation(_))
        ));
    }

    #[test]
    fn measure_json() {
        let m: DiscreteMeasure<f64> =
            serde_json::from_str(r#"{"atoms":[{"p":[0,0],"m":0.5},{"p":[1,0],"m":0.5}]}"#).unwrap();
        assert_eq!(m.len(), 2);
        assert!(serde_json::from_str::<DiscreteMeasure<f64>>(r#"{"atoms":[{"p":[0,0],"m":0.5}]}"#).is_err());
    }
}
