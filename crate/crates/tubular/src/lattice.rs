//! Exact arithmetic on `Z^2` and its finite-index sublattices.
//!
//! Nonzero vectors stand for closed curves on a torus (or for edge-group
//! inclusions into a `Z^2` vertex group); the geometric intersection number
//! of two such curves is the absolute value of the 2x2 determinant, which is
//! the only intersection theory this crate needs. Sublattices are kept in
//! Hermite normal form so that membership, coordinates and the index are all
//! decided by two exact divisions.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::serde_util::{bigint_to_number, number_to_bigint};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("zero inclusion vector")]
    ZeroVector,
    #[error("degenerate sublattice: generators do not span a finite-index sublattice")]
    DegenerateSublattice,
    #[error("not a lattice member: {0} is outside the sublattice")]
    NotAMember(LatticeVector),
}

/// An element of `Z^2`, written additively. Zero is permitted (words use it);
/// operations modelling curves reject it explicitly.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector {
    pub x: BigInt,
    pub y: BigInt,
}

impl LatticeVector {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        LatticeVector { x: x.into(), y: y.into() }
    }

    pub fn zero() -> Self {
        LatticeVector::new(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn neg(&self) -> Self {
        LatticeVector { x: -&self.x, y: -&self.y }
    }

    pub fn add(&self, other: &Self) -> Self {
        LatticeVector { x: &self.x + &other.x, y: &self.y + &other.y }
    }

    pub fn scale(&self, n: &BigInt) -> Self {
        LatticeVector { x: n * &self.x, y: n * &self.y }
    }

    /// Signed determinant `x1*y2 - y1*x2`.
    pub fn det(&self, other: &Self) -> BigInt {
        &self.x * &other.y - &self.y * &other.x
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

// Vectors serialize as two-element integer arrays.
impl Serialize for LatticeVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&bigint_to_number::<S::Error>(&self.x)?)?;
        t.serialize_element(&bigint_to_number::<S::Error>(&self.y)?)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct VecVisitor;
        impl<'de> Visitor<'de> for VecVisitor {
            type Value = LatticeVector;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a two-element integer array")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let x: serde_json::Number =
                    seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let y: serde_json::Number =
                    seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<serde_json::Number>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(LatticeVector {
                    x: number_to_bigint(&x)?,
                    y: number_to_bigint(&y)?,
                })
            }
        }
        d.deserialize_tuple(2, VecVisitor)
    }
}

/// Splits a nonzero vector into a canonical primitive direction and a positive
/// multiplicity: `v = multiplicity * primitive` with coprime coordinates.
///
/// The primitive representative is sign-normalized (first nonzero coordinate
/// positive), so parallel vectors share exactly one representative and the
/// representative can be used as a map key for parallelism classes.
pub fn primitive_decompose(v: &LatticeVector) -> Result<(LatticeVector, BigUint), LatticeError> {
    if v.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    let g = v.x.gcd(&v.y); // non-negative, positive here
    let mut p = LatticeVector { x: &v.x / &g, y: &v.y / &g };
    let flip = if p.x.is_zero() { p.y.is_negative() } else { p.x.is_negative() };
    if flip {
        p = p.neg();
    }
    Ok((p, g.magnitude().clone()))
}

/// Canonical primitive representative of the parallelism class of `v`.
pub fn canonical_class(v: &LatticeVector) -> Result<LatticeVector, LatticeError> {
    primitive_decompose(v).map(|(p, _)| p)
}

/// Geometric intersection number of the closed curves on the torus named by
/// `c` and `z`: the absolute determinant `|c.x*z.y - c.y*z.x|`. Symmetric,
/// and zero exactly when the vectors are parallel.
pub fn intersection_number(c: &LatticeVector, z: &LatticeVector) -> Result<BigUint, LatticeError> {
    if c.is_zero() || z.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    Ok(c.det(z).magnitude().clone())
}

pub fn is_parallel(c: &LatticeVector, z: &LatticeVector) -> Result<bool, LatticeError> {
    Ok(intersection_number(c, z)?.is_zero())
}

/// A finite-index sublattice of `Z^2` in Hermite normal form.
///
/// The basis matrix is lower-left triangular with rows `(d1, 0)` and
/// `(e, d2)` where `d1, d2 > 0` and `0 <= e < d1`; the index is `d1 * d2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SublatticeBasis {
    first: LatticeVector,
    second: LatticeVector,
    #[serde(with = "crate::serde_util::count_string")]
    index: BigUint,
}

impl SublatticeBasis {
    pub fn first(&self) -> &LatticeVector {
        &self.first
    }

    pub fn second(&self) -> &LatticeVector {
        &self.second
    }

    pub fn index(&self) -> &BigUint {
        &self.index
    }

    fn d1(&self) -> &BigInt {
        &self.first.x
    }

    fn off(&self) -> &BigInt {
        &self.second.x
    }

    fn d2(&self) -> &BigInt {
        &self.second.y
    }

    /// Coordinates of `v` in this basis, if `v` is a member.
    pub fn coordinates(&self, v: &LatticeVector) -> Result<(BigInt, BigInt), LatticeError> {
        let (beta, rem) = v.y.div_mod_floor(self.d2());
        if !rem.is_zero() {
            return Err(LatticeError::NotAMember(v.clone()));
        }
        let residual = &v.x - &beta * self.off();
        let (alpha, rem) = residual.div_mod_floor(self.d1());
        if !rem.is_zero() {
            return Err(LatticeError::NotAMember(v.clone()));
        }
        Ok((alpha, beta))
    }

    pub fn contains(&self, v: &LatticeVector) -> bool {
        self.coordinates(v).is_ok()
    }
}

impl fmt::Display for SublatticeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{{{}, {}}} (index {})", self.first, self.second, self.index)
    }
}

/// Hermite normal form basis of the integer span of `generators`.
///
/// Errors with `DegenerateSublattice` when the span has rank below 2.
pub fn sublattice_basis(generators: &[LatticeVector]) -> Result<SublatticeBasis, LatticeError> {
    // Combine generators until one vector carries the gcd of all y-coordinates.
    let mut w = LatticeVector::zero();
    for g in generators {
        if w.y.is_zero() {
            w = g.clone();
            continue;
        }
        if g.y.is_zero() {
            continue;
        }
        let ext = w.y.extended_gcd(&g.y);
        w = w.scale(&ext.x).add(&g.scale(&ext.y));
        debug_assert_eq!(w.y, ext.gcd);
    }
    if w.y.is_zero() {
        // All generators lie on the x-axis (or there are none): rank < 2.
        return Err(LatticeError::DegenerateSublattice);
    }
    if w.y.is_negative() {
        w = w.neg();
    }
    let d2 = w.y.clone();

    // Clearing the y-coordinate of every generator leaves the x-axis part.
    let mut d1 = BigInt::zero();
    for g in generators {
        let q = &g.y / &d2; // exact: d2 divides every generator's y
        let rx = &g.x - q * &w.x;
        d1 = d1.gcd(&rx);
    }
    if d1.is_zero() {
        return Err(LatticeError::DegenerateSublattice);
    }
    let off = w.x.mod_floor(&d1);
    let index = (&d1 * &d2).magnitude().clone();
    Ok(SublatticeBasis {
        first: LatticeVector { x: d1, y: BigInt::zero() },
        second: LatticeVector { x: off, y: d2 },
        index,
    })
}

/// True when the coordinates of `v` in the basis of `lattice` are coprime,
/// i.e. `v` is a primitive element of the sublattice. Errors when `v` is not
/// a member at all.
pub fn is_primitive_in(v: &LatticeVector, lattice: &SublatticeBasis) -> Result<bool, LatticeError> {
    let (alpha, beta) = lattice.coordinates(v)?;
    Ok(alpha.gcd(&beta).is_one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(x: i64, y: i64) -> LatticeVector {
        LatticeVector::new(x, y)
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn decompose_extracts_gcd() {
        assert_eq!(primitive_decompose(&lv(2, 4)).unwrap(), (lv(1, 2), big(2)));
    }

    #[test]
    fn decompose_axis_case() {
        assert_eq!(primitive_decompose(&lv(0, 7)).unwrap(), (lv(0, 1), big(7)));
    }

    #[test]
    fn decompose_sign_normalizes() {
        assert_eq!(primitive_decompose(&lv(-3, 5)).unwrap(), (lv(3, -5), big(1)));
    }

    #[test]
    fn decompose_rejects_zero() {
        assert_eq!(primitive_decompose(&lv(0, 0)), Err(LatticeError::ZeroVector));
    }

    #[test]
    fn intersection_of_basis_pair_is_one() {
        assert_eq!(intersection_number(&lv(1, 0), &lv(0, 1)).unwrap(), big(1));
    }

    #[test]
    fn intersection_counts_transversal_crossings() {
        // Oracle: the lines t*(1,0) and s*(2,2) in the unit torus cross twice,
        // which is |det| of the pair.
        assert_eq!(intersection_number(&lv(1, 0), &lv(2, 2)).unwrap(), big(2));
    }

    #[test]
    fn parallel_vectors_have_intersection_zero() {
        assert_eq!(intersection_number(&lv(3, 6), &lv(1, 2)).unwrap(), big(0));
        assert!(is_parallel(&lv(1, 2), &lv(2, 4)).unwrap());
        assert!(!is_parallel(&lv(1, 0), &lv(0, 1)).unwrap());
        assert!(is_parallel(&lv(2, 2), &lv(1, 1)).unwrap());
    }

    #[test]
    fn intersection_rejects_zero_vector() {
        assert_eq!(intersection_number(&lv(0, 0), &lv(1, 1)), Err(LatticeError::ZeroVector));
        assert!(is_parallel(&lv(1, 1), &lv(0, 0)).is_err());
    }

    #[test]
    fn hnf_of_skew_generators() {
        let basis = sublattice_basis(&[lv(4, 0), lv(-2, 1)]).unwrap();
        assert_eq!(basis.first(), &lv(4, 0));
        assert_eq!(basis.second(), &lv(2, 1));
        assert_eq!(basis.index(), &big(4));
    }

    #[test]
    fn hnf_membership_matches_congruence_oracle() {
        // The span of (4,0) and (-2,1) is exactly {(i,j) : i + 2j = 0 mod 4}.
        let basis = sublattice_basis(&[lv(4, 0), lv(-2, 1)]).unwrap();
        for i in -20..=20i64 {
            for j in -20..=20i64 {
                let expected = (i + 2 * j).rem_euclid(4) == 0;
                assert_eq!(basis.contains(&lv(i, j)), expected, "point ({i}, {j})");
            }
        }
    }

    #[test]
    fn hnf_of_standard_basis_is_identity() {
        let basis = sublattice_basis(&[lv(1, 0), lv(0, 1)]).unwrap();
        assert_eq!(basis.first(), &lv(1, 0));
        assert_eq!(basis.second(), &lv(0, 1));
        assert_eq!(basis.index(), &big(1));
    }

    #[test]
    fn hnf_fixes_already_reduced_basis() {
        let basis = sublattice_basis(&[lv(2, 0), lv(0, 1)]).unwrap();
        assert_eq!(basis.first(), &lv(2, 0));
        assert_eq!(basis.second(), &lv(0, 1));
        assert_eq!(basis.index(), &big(2));
    }

    #[test]
    fn hnf_rejects_degenerate_spans() {
        assert_eq!(
            sublattice_basis(&[lv(2, 4), lv(1, 2)]),
            Err(LatticeError::DegenerateSublattice)
        );
        assert_eq!(sublattice_basis(&[lv(3, 0)]), Err(LatticeError::DegenerateSublattice));
        assert_eq!(sublattice_basis(&[]), Err(LatticeError::DegenerateSublattice));
    }

    #[test]
    fn primitivity_in_sublattice_by_hand_solved_coordinates() {
        let basis = sublattice_basis(&[lv(4, 0), lv(-2, 1)]).unwrap();
        // (4,0) = 1*(4,0) + 0*(2,1)
        assert_eq!(basis.coordinates(&lv(4, 0)).unwrap(), (BigInt::from(1), BigInt::from(0)));
        assert!(is_primitive_in(&lv(4, 0), &basis).unwrap());
        // (2,1) = 0*(4,0) + 1*(2,1)
        assert_eq!(basis.coordinates(&lv(2, 1)).unwrap(), (BigInt::from(0), BigInt::from(1)));
        assert!(is_primitive_in(&lv(2, 1), &basis).unwrap());
        // (8,0) = 2*(4,0): a doubled vector is never primitive.
        assert!(!is_primitive_in(&lv(8, 0), &basis).unwrap());
    }

    #[test]
    fn non_member_is_an_error() {
        let basis = sublattice_basis(&[lv(4, 0), lv(-2, 1)]).unwrap();
        assert!(matches!(
            is_primitive_in(&lv(1, 0), &basis),
            Err(LatticeError::NotAMember(_))
        ));
    }

    #[test]
    fn primitive_in_full_lattice_is_coprimality() {
        let z2 = sublattice_basis(&[lv(1, 0), lv(0, 1)]).unwrap();
        for x in -6..=6i64 {
            for y in -6..=6i64 {
                if x == 0 && y == 0 {
                    continue;
                }
                let coprime = num_integer::gcd(x, y).abs() == 1;
                assert_eq!(is_primitive_in(&lv(x, y), &z2).unwrap(), coprime);
            }
        }
    }

    #[test]
    fn vectors_serialize_as_integer_pairs() {
        let v = lv(-3, 5);
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, "[-3,5]");
        let back: LatticeVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn vectors_roundtrip_beyond_machine_width() {
        let big_x: BigInt = "123456789012345678901234567890".parse().unwrap();
        let v = LatticeVector { x: big_x.clone(), y: BigInt::from(-1) };
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, "[123456789012345678901234567890,-1]");
        let back: LatticeVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back.x, big_x);
    }

    #[test]
    fn float_coordinates_are_rejected() {
        assert!(serde_json::from_str::<LatticeVector>("[1.5, 2]").is_err());
        assert!(serde_json::from_str::<LatticeVector>("[1]").is_err());
        assert!(serde_json::from_str::<LatticeVector>("[1, 2, 3]").is_err());
    }
}
