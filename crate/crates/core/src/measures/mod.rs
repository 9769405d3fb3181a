//! Measures and signed functions on SL2(Z/qZ).
//!
//! Values are any [`Scalar`]; identities are checked with `==` for exact
//! scalars. Convolution is `(mu * nu)(x) = sum_y mu(y) nu(y^-1 x)`.

mod decompose;
mod growth;
mod nonconc;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

pub use decompose::{
    average_mod, class_average, decompose, decomposition_coeffs, f_component, f_level, in_h_space,
    ClassFunction, DecompositionCoeffs, Decomposition, HSpaceCheck, ReconstructionCheck,
};
pub use growth::{
    bounded_generation_probe, helfgott_check, power_sizes, product_set, triple_product, BoundedGeneration,
    HelfgottRow, TripleProduct,
};
pub use nonconc::{nonconcentration, trace_count, LevelStat, NonConcentrationReport, Sampler, EXHAUSTIVE_LEVEL};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sl2::GroupElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeasureKind {
    Probability,
    Signed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMeasure<V> {
    q: u64,
    values: BTreeMap<GroupElement, V>,
    kind: MeasureKind,
}

impl<V: Scalar> GroupMeasure<V> {
    /// Builds a measure from `(element, value)` pairs, summing repeats and
    /// dropping zeros. Probability measures must be non-negative with mass 1.
    pub fn from_values(q: u64, pairs: impl IntoIterator<Item = (GroupElement, V)>, kind: MeasureKind) -> Result<Self> {
        let mut values: BTreeMap<GroupElement, V> = BTreeMap::new();
        for (g, v) in pairs {
            if g.modulus() != q {
                return Err(Error::ModulusMismatch { left: g.modulus(), right: q });
            }
            let slot = values.entry(g).or_insert_with(V::zero);
            *slot = slot.clone() + v;
        }
        values.retain(|_, v| !v.is_zero());
        let m = Self { q, values, kind };
        if kind == MeasureKind::Probability {
            m.check_probability()?;
        }
        Ok(m)
    }

    fn check_probability(&self) -> Result<()> {
        if self.values.values().any(|v| *v < V::zero()) {
            return Err(Error::InvalidMeasure("negative value in a probability measure".into()));
        }
        let mass = self.mass();
        let ok = if V::EXACT { mass == V::one() } else { (mass.to_f64() - 1.0).abs() <= 1e-9 };
        if !ok {
            return Err(Error::InvalidMeasure(format!("total mass {} is not 1", mass.render())));
        }
        Ok(())
    }

    pub fn point_mass(g: GroupElement) -> Self {
        Self { q: g.modulus(), values: BTreeMap::from([(g, V::one())]), kind: MeasureKind::Probability }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn get(&self, g: &GroupElement) -> V {
        self.values.get(g).cloned().unwrap_or_else(V::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &V)> {
        self.values.iter()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn mass(&self) -> V {
        self.values.values().fold(V::zero(), |acc, v| acc + v.clone())
    }

    pub fn l2_norm_sq(&self) -> V {
        self.values.values().fold(V::zero(), |acc, v| acc + v.clone() * v.clone())
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().to_f64().sqrt()
    }
}

/// Uniform probability on the distinct elements of `set`.
pub fn uniform_on<V: Scalar>(set: &[GroupElement]) -> Result<GroupMeasure<V>> {
    let first = set.first().ok_or(Error::EmptySet)?;
    let mut elems = set.to_vec();
    elems.sort_unstable();
    elems.dedup();
    let w = V::ratio(1, elems.len() as u64);
    GroupMeasure::from_values(first.modulus(), elems.into_iter().map(|g| (g, w.clone())), MeasureKind::Probability)
}

pub fn convolve<V: Scalar>(mu: &GroupMeasure<V>, nu: &GroupMeasure<V>) -> Result<GroupMeasure<V>> {
    if mu.q != nu.q {
        return Err(Error::ModulusMismatch { left: mu.q, right: nu.q });
    }
    let mut acc: HashMap<GroupElement, V> = HashMap::with_capacity(mu.values.len() * nu.values.len());
    for (y, a) in &mu.values {
        for (z, b) in &nu.values {
            let slot = acc.entry(y.mul_unchecked(z)).or_insert_with(V::zero);
            *slot = slot.clone() + a.clone() * b.clone();
        }
    }
    let kind = if mu.kind == MeasureKind::Probability && nu.kind == MeasureKind::Probability {
        MeasureKind::Probability
    } else {
        MeasureKind::Signed
    };
    let mut values: BTreeMap<GroupElement, V> = acc.into_iter().collect();
    values.retain(|_, v| !v.is_zero());
    Ok(GroupMeasure { q: mu.q, values, kind })
}

/// `||mu * mu||_2 / ||mu||_2` for a probability measure.
pub fn flattening_ratio<V: Scalar>(mu: &GroupMeasure<V>) -> Result<f64> {
    if mu.kind != MeasureKind::Probability {
        return Err(Error::InvalidMeasure("flattening ratio needs a probability measure".into()));
    }
    if mu.values.is_empty() {
        return Err(Error::InvalidMeasure("zero measure".into()));
    }
    let sq = convolve(mu, mu)?;
    Ok((sq.l2_norm_sq().to_f64() / mu.l2_norm_sq().to_f64()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::{enumerate_group, generator_set, group_order, random_element, DEFAULT_GROUP_CAP};
    use crate::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_prob(q: u64, size: usize, seed: u64) -> GroupMeasure<Exact> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(GroupElement, u64)> =
            (0..size).map(|_| (random_element(q, &mut rng).unwrap(), rng.gen_range(1..10))).collect();
        let total: u64 = pts.iter().map(|p| p.1).sum();
        GroupMeasure::from_values(q, pts.into_iter().map(|(g, w)| (g, Exact::ratio(w, total))), MeasureKind::Probability)
            .unwrap()
    }

    #[test]
    fn uniform_and_point_mass() {
        let e = GroupElement::identity(7).unwrap();
        let d: GroupMeasure<Exact> = uniform_on(&[e]).unwrap();
        assert_eq!(d, GroupMeasure::point_mass(e));
        assert_eq!(d.l2_norm(), 1.0);
        let s = generator_set(3, 7).unwrap();
        let u: GroupMeasure<Exact> = uniform_on(&s).unwrap();
        assert_eq!(u.support_len(), 3);
        assert_eq!(u.get(&s[0]), Exact::new(1, 3));
        assert_eq!(u.l2_norm_sq(), Exact::new(1, 3));
        assert!(matches!(uniform_on::<Exact>(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn convolution_laws() {
        let q = 5;
        let e: GroupMeasure<Exact> = GroupMeasure::point_mass(GroupElement::identity(q).unwrap());
        let mu = random_prob(q, 6, 1);
        let nu = random_prob(q, 5, 2);
        let rho = random_prob(q, 4, 3);
        assert_eq!(convolve(&e, &mu).unwrap(), mu);
        let left = convolve(&convolve(&mu, &nu).unwrap(), &rho).unwrap();
        let right = convolve(&mu, &convolve(&nu, &rho).unwrap()).unwrap();
        assert_eq!(left, right);
        assert_eq!(convolve(&mu, &nu).unwrap().mass(), Exact::from_integer(1));
        assert!(convolve(&mu, &nu).unwrap().l2_norm_sq() <= mu.l2_norm_sq());
    }

    #[test]
    fn haar_is_absorbing() {
        let g = enumerate_group(3, DEFAULT_GROUP_CAP).unwrap();
        let haar: GroupMeasure<Exact> = uniform_on(&g).unwrap();
        assert_eq!(haar.l2_norm_sq(), Exact::new(1, group_order(3) as i128));
        let mu = random_prob(3, 5, 9);
        assert_eq!(convolve(&haar, &mu).unwrap(), haar);
        assert_eq!(convolve(&mu, &haar).unwrap(), haar);
        assert!((flattening_ratio(&haar).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_does_not_flatten() {
        let d: GroupMeasure<f64> = GroupMeasure::point_mass(GroupElement::identity(11).unwrap());
        assert_eq!(flattening_ratio(&d).unwrap(), 1.0);
    }

    #[test]
    fn float_and_exact_agree() {
        let s = generator_set(4, 13).unwrap();
        let a: GroupMeasure<Exact> = uniform_on(&s).unwrap();
        let b: GroupMeasure<f64> = uniform_on(&s).unwrap();
        let ra = flattening_ratio(&a).unwrap();
        let rb = flattening_ratio(&b).unwrap();
        assert!((ra - rb).abs() < 1e-12);
    }

    #[test]
    fn probability_validation() {
        let e = GroupElement::identity(5).unwrap();
        let bad = GroupMeasure::from_values(5, [(e, Exact::new(1, 2))], MeasureKind::Probability);
        assert!(matches!(bad, Err(Error::InvalidMeasure(_))));
        let signed = GroupMeasure::from_values(5, [(e, Exact::new(-1, 2))], MeasureKind::Signed).unwrap();
        assert_eq!(signed.mass(), Exact::new(-1, 2));
    }
}
