//! The two-parameter family `G_{p,q}`: a single-vertex tubular group with two
//! loops, presented as
//! `< a, b, s, t | [a,b], s^-1 a^q s = a^p b, t^-1 a^q t = a^p b^-1 >`
//! for nonzero integers `p`, `q`, together with the rank-2 one-relator group
//! `R_{p,q} = < x, y, t | x^2 = y^2, t^-1 x^{2q} t = x^{2p-1} y >` containing
//! it with index 2.
//!
//! The group is residually finite exactly when `q` divides `2p`. In the
//! non-RF range the commutator `[s^-1 a^h s, a^p b^-1]` with `h = gcd(2p, q)`
//! is a nontrivial element that dies in every finite quotient; in the RF
//! range a cyclic quotient exhibits a finite-index subgroup whose edge
//! inclusions are all primitive, which is the known sufficient condition.


use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{EdgeRecord, ScreenVerdict, TubularGraph};
use crate::lattice::{self, LatticeVector, SublatticeBasis};
use crate::words::{
    self, Endomorphism, EndoReport, GroupWord, HnnPresentation, Letter, Sign, WordError,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GpqError {
    #[error("zero parameter: p and q must be nonzero")]
    ZeroParameter,
    #[error("group is residually finite; no witness")]
    ResiduallyFinite,
    #[error("q does not divide 2p; the cyclic quotient certificate does not apply")]
    NotResiduallyFinite,
    #[error("parameters outside the non-Hopfian construction (requires p = 1 and odd q >= 3)")]
    OutsideHypothesis,
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GpqSpec {
    pub p: i64,
    pub q: i64,
}

impl GpqSpec {
    pub fn new(p: i64, q: i64) -> Result<Self, GpqError> {
        if p == 0 || q == 0 {
            return Err(GpqError::ZeroParameter);
        }
        Ok(GpqSpec { p, q })
    }
}

impl fmt::Display for GpqSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G_{{{},{}}}", self.p, self.q)
    }
}

/// The tubular graph of `G_{p,q}` (one vertex, two loops) together with its
/// HNN presentation over stable letters `s`, `t`.
pub fn make_gpq(spec: &GpqSpec) -> (TubularGraph, HnnPresentation) {
    let graph = TubularGraph::new(
        vec!["v0".into()],
        vec![
            EdgeRecord {
                id: "s".into(),
                minus: "v0".into(),
                plus: "v0".into(),
                z_minus: LatticeVector::new(spec.q, 0),
                z_plus: LatticeVector::new(spec.p, 1),
            },
            EdgeRecord {
                id: "t".into(),
                minus: "v0".into(),
                plus: "v0".into(),
                z_minus: LatticeVector::new(spec.q, 0),
                z_plus: LatticeVector::new(spec.p, -1),
            },
        ],
    )
    .expect("fixed shape is valid");
    let presentation = HnnPresentation::from_graph(&graph).expect("loops only");
    (graph, presentation)
}

fn conjugated_power(name: &str, v: LatticeVector) -> GroupWord {
    GroupWord::from_letters([
        Letter::stable(name, Sign::Minus),
        Letter::Vertex(v),
        Letter::stable(name, Sign::Plus),
    ])
}

/// The three defining relations as words equal to the identity.
pub fn relations(spec: &GpqSpec) -> Vec<GroupWord> {
    vec![
        GroupWord::commutator(&GroupWord::vertex(1, 0), &GroupWord::vertex(0, 1)),
        conjugated_power("s", LatticeVector::new(spec.q, 0))
            .concat(&GroupWord::vertex(spec.p, 1).inverse()),
        conjugated_power("t", LatticeVector::new(spec.q, 0))
            .concat(&GroupWord::vertex(spec.p, -1).inverse()),
    ]
}

/// Residual finiteness holds exactly when `q` divides `2p`.
pub fn is_residually_finite(spec: &GpqSpec) -> bool {
    (BigInt::from(2) * spec.p).mod_floor(&BigInt::from(spec.q)).is_zero()
}

fn highest_common_factor_2p_q(spec: &GpqSpec) -> BigInt {
    (BigInt::from(2) * spec.p).gcd(&BigInt::from(spec.q))
}

/// The obstruction element `[s^-1 a^h s, a^p b^-1]` with `h = gcd(2p, q)`:
/// nontrivial (no pinches, since `h < |q|` exactly when `q` does not divide
/// `2p`) yet killed by every finite quotient.
pub fn rf_obstruction_witness(spec: &GpqSpec) -> Result<GroupWord, GpqError> {
    if is_residually_finite(spec) {
        return Err(GpqError::ResiduallyFinite);
    }
    let h = highest_common_factor_2p_q(spec);
    let witness = GroupWord::commutator(
        &conjugated_power("s", LatticeVector::new(h, BigInt::zero())),
        &GroupWord::vertex(spec.p, -1),
    );
    let (_, presentation) = make_gpq(spec);
    assert!(
        !words::is_trivial(&witness, &presentation)?,
        "obstruction witness must be pinch-free"
    );
    Ok(witness)
}

#[derive(Clone, Debug, Serialize)]
pub struct NonHopfWitness {
    pub endo: Endomorphism,
    pub endo_report: EndoReport,
    pub kernel_word: GroupWord,
    pub kernel_nontrivial: bool,
    pub kernel_image: GroupWord,
    pub kernel_image_trivial: bool,
    /// Surjectivity of the endomorphism is a cited fact, not machine-checked:
    /// the image contains s, t, a^q, b^q, hence a^p b and a^p b^-1, and for
    /// odd q these generate a and b as well.
    pub surjectivity: &'static str,
}

/// The non-Hopfian witness for `p = 1` and odd `q >= 3`: the endomorphism
/// `a -> a^q, b -> b^q` fixing `s, t` preserves the relations and is onto,
/// while the nontrivial kernel word `[s^-1 a s, a b^-1]` maps to the
/// identity.
pub fn non_hopf_witness(spec: &GpqSpec) -> Result<NonHopfWitness, GpqError> {
    if spec.p != 1 || spec.q < 3 || spec.q % 2 == 0 {
        return Err(GpqError::OutsideHypothesis);
    }
    let (_, presentation) = make_gpq(spec);
    let endo = Endomorphism {
        a: GroupWord::vertex(spec.q, 0),
        b: GroupWord::vertex(0, spec.q),
        ..Endomorphism::identity(&presentation)
    };
    let endo_report = words::check_endo_well_defined(&endo, &presentation, &relations(spec))?;
    let kernel_word = GroupWord::commutator(
        &conjugated_power("s", LatticeVector::new(1, 0)),
        &GroupWord::vertex(1, -1),
    );
    let kernel_nontrivial = !words::is_trivial(&kernel_word, &presentation)?;
    let kernel_image = words::apply_endo(&endo, &kernel_word)?;
    let kernel_image_trivial = words::is_trivial(&kernel_image, &presentation)?;
    Ok(NonHopfWitness {
        endo,
        endo_report,
        kernel_word,
        kernel_nontrivial,
        kernel_image,
        kernel_image_trivial,
        surjectivity: "cited-not-verified",
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionPrimitivity {
    pub vector: LatticeVector,
    /// Coordinates in the kernel-lattice basis.
    pub coordinates: LatticeVector,
    pub primitive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CqQuotientReport {
    pub modulus: u64,
    /// Image of `b`; `a` maps to 1 and `s`, `t` to 0.
    pub beta: i64,
    pub relation_residues: [u64; 3],
    pub relations_ok: bool,
    pub kernel_basis: SublatticeBasis,
    pub inclusions: Vec<InclusionPrimitivity>,
    pub all_primitive: bool,
}

/// The cyclic-quotient certificate for the residually finite range: the map
/// to `C_|q|` sending `a -> 1`, `b -> beta`, `s, t -> 0` (with `beta = 0`
/// when `q | p`, else `beta = p` in the even case `q = 2m`, `m | p`) kills
/// all relations, and the edge inclusions `a^q`, `a^p b`, `a^p b^-1` are
/// primitive in the kernel lattice `K = {(i, j) : i + beta*j = 0 mod q}`.
pub fn cq_quotient(spec: &GpqSpec) -> Result<CqQuotientReport, GpqError> {
    if !is_residually_finite(spec) {
        return Err(GpqError::NotResiduallyFinite);
    }
    let p = BigInt::from(spec.p);
    let q = BigInt::from(spec.q);
    let modulus = q.magnitude().to_u64().expect("i64 magnitude");
    let beta = if p.mod_floor(&q).is_zero() { 0 } else { spec.p };
    let beta_big = BigInt::from(beta);

    let residue = |value: BigInt| -> u64 {
        value.mod_floor(&BigInt::from(modulus)).to_u64().expect("reduced")
    };
    // [a,b] maps to 0 in an abelian target; the two loop relations map to
    // q*phi(a) - (p*phi(a) + phi(b)) and q*phi(a) - (p*phi(a) - phi(b)).
    let relation_residues = [
        residue(BigInt::zero()),
        residue(&q - &p - &beta_big),
        residue(&q - &p + &beta_big),
    ];
    let relations_ok = relation_residues.iter().all(|&r| r == 0);

    let kernel_basis = lattice::sublattice_basis(&[
        LatticeVector::new(q.clone(), BigInt::zero()),
        LatticeVector::new(-beta_big, BigInt::from(1)),
    ])?;

    let mut inclusions = Vec::new();
    for vector in [
        LatticeVector::new(spec.q, 0),
        LatticeVector::new(spec.p, 1),
        LatticeVector::new(spec.p, -1),
    ] {
        let (alpha, gamma) = kernel_basis.coordinates(&vector)?;
        let primitive = lattice::is_primitive_in(&vector, &kernel_basis)?;
        inclusions.push(InclusionPrimitivity {
            vector,
            coordinates: LatticeVector { x: alpha, y: gamma },
            primitive,
        });
    }
    let all_primitive = inclusions.iter().all(|i| i.primitive);
    Ok(CqQuotientReport {
        modulus,
        beta,
        relation_residues,
        relations_ok,
        kernel_basis,
        inclusions,
        all_primitive,
    })
}

// ---------------------------------------------------------------------------
// Finite quotients by exhaustive search over symmetric groups.

/// A permutation of `{0, .., n-1}` stored as its image vector. Words act by
/// reading left to right: `(g.then(h))(x) = h(g(x))`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Perm {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            assert!(i < images.len() && !seen[i], "not a permutation");
            seen[i] = true;
        }
        Perm(images)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&x| other.0[x]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            images[x] = i;
        }
        Perm(images)
    }

    pub fn order(&self) -> usize {
        let mut power = self.clone();
        let mut n = 1;
        while !power.is_identity() {
            power = power.then(self);
            n += 1;
        }
        n
    }

    pub fn pow(&self, e: &BigInt) -> Perm {
        let order = BigInt::from(self.order());
        let reduced = e.mod_floor(&order).to_usize().expect("small order");
        let mut out = Perm::identity(self.degree());
        for _ in 0..reduced {
            out = out.then(self);
        }
        out
    }

    /// One-based image list, the conventional way to print permutations of
    /// `{1..n}`.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&x| x + 1).collect()
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.one_based())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteQuotient {
    pub degree: usize,
    pub a: Perm,
    pub b: Perm,
    pub s: Perm,
    pub t: Perm,
}

impl FiniteQuotient {
    fn image_of_stable(&self, name: &str) -> Option<&Perm> {
        match name {
            "s" => Some(&self.s),
            "t" => Some(&self.t),
            _ => None,
        }
    }

    /// Image of a word under the quotient map.
    pub fn eval(&self, word: &GroupWord) -> Perm {
        let mut out = Perm::identity(self.degree);
        for letter in word.letters() {
            let image = match letter {
                Letter::Vertex(v) => self.a.pow(&v.x).then(&self.b.pow(&v.y)),
                Letter::Stable { name, sign } => {
                    let base = self.image_of_stable(name).expect("s or t");
                    match sign {
                        Sign::Plus => base.clone(),
                        Sign::Minus => base.inverse(),
                    }
                }
            };
            out = out.then(&image);
        }
        out
    }

    /// Re-verifies the defining relations by direct permutation arithmetic,
    /// independently of the word engine.
    pub fn satisfies_relations(&self, spec: &GpqSpec) -> bool {
        let commute = self.a.then(&self.b) == self.b.then(&self.a);
        let aq = self.a.pow(&BigInt::from(spec.q));
        let ap = self.a.pow(&BigInt::from(spec.p));
        let s_side = self.s.inverse().then(&aq).then(&self.s);
        let t_side = self.t.inverse().then(&aq).then(&self.t);
        commute && s_side == ap.then(&self.b) && t_side == ap.then(&self.b.inverse())
    }
}

/// Enumerates every homomorphism `G_{p,q} -> S_n` in lexicographic order of
/// `(a, b, s, t)` images, calling `visit` for each; `visit` returns `false`
/// to stop early. The image of `b` is scanned over the centralizer of `a`'s
/// image, and `s`, `t` over the permutations conjugating `a^q` to the two
/// required targets.
pub fn for_each_quotient(
    spec: &GpqSpec,
    degree: usize,
    visit: &mut dyn FnMut(FiniteQuotient) -> bool,
) -> bool {
    let all: Vec<Perm> = (0..degree)
        .permutations(degree)
        .map(Perm::from_images)
        .collect();
    let all = if degree == 0 { vec![Perm::identity(0)] } else { all };
    for a in &all {
        let aq = a.pow(&BigInt::from(spec.q));
        let ap = a.pow(&BigInt::from(spec.p));
        for b in &all {
            if a.then(b) != b.then(a) {
                continue;
            }
            let s_target = ap.then(b);
            let t_target = ap.then(&b.inverse());
            let s_candidates: Vec<&Perm> = all
                .iter()
                .filter(|s| s.inverse().then(&aq).then(s) == s_target)
                .collect();
            if s_candidates.is_empty() {
                continue;
            }
            let t_candidates: Vec<&Perm> = all
                .iter()
                .filter(|t| t.inverse().then(&aq).then(t) == t_target)
                .collect();
            for s in &s_candidates {
                for t in &t_candidates {
                    let quotient = FiniteQuotient {
                        degree,
                        a: a.clone(),
                        b: b.clone(),
                        s: (*s).clone(),
                        t: (*t).clone(),
                    };
                    if !visit(quotient) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientRecord {
    #[serde(flatten)]
    pub quotient: FiniteQuotient,
    /// Present when an obstruction witness exists: whether the quotient maps
    /// it to the identity (it always does).
    pub witness_image_identity: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientSearchReport {
    pub p: i64,
    pub q: i64,
    pub max_degree: usize,
    pub witness: Option<GroupWord>,
    pub quotients: Vec<QuotientRecord>,
    pub all_witness_images_trivial: Option<bool>,
}

/// Exhaustive homomorphism search into symmetric groups of degree 1 to
/// `max_degree`, evaluating the obstruction witness in every quotient found
/// when the group is not residually finite.
pub fn finite_quotient_search(spec: &GpqSpec, max_degree: usize) -> QuotientSearchReport {
    let witness = rf_obstruction_witness(spec).ok();
    let mut quotients = Vec::new();
    for degree in 1..=max_degree {
        for_each_quotient(spec, degree, &mut |quotient| {
            let witness_image_identity =
                witness.as_ref().map(|w| quotient.eval(w).is_identity());
            quotients.push(QuotientRecord { quotient, witness_image_identity });
            true
        });
    }
    let all_witness_images_trivial = witness.as_ref().map(|_| {
        quotients.iter().all(|r| r.witness_image_identity == Some(true))
    });
    QuotientSearchReport {
        p: spec.p,
        q: spec.q,
        max_degree,
        witness,
        quotients,
        all_witness_images_trivial,
    }
}

// ---------------------------------------------------------------------------
// Classification.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    True,
    False,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct RpqPresentation {
    pub generators: [&'static str; 3],
    pub relators: [String; 2],
}

/// Data-only record of the one-relator supergroup's presentation.
pub fn make_rpq(spec: &GpqSpec) -> RpqPresentation {
    RpqPresentation {
        generators: ["x", "y", "t"],
        relators: [
            "x^2 y^-2".to_owned(),
            format!("t^-1 x^{} t y^-1 x^{}", 2 * spec.q, -(2 * spec.p - 1)),
        ],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RpqReport {
    pub presentation: RpqPresentation,
    pub residually_finite: bool,
    pub hopfian: Tri,
    pub cat0: Tri,
    pub transfer: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub p: i64,
    pub q: i64,
    pub rf: bool,
    pub hopfian: Tri,
    pub cat0: Tri,
    pub screen: ScreenVerdict,
    pub witness: Option<GroupWord>,
    pub notes: Vec<String>,
    pub rpq: RpqReport,
}

/// Classification of `G_{p,q}` (and its index-2 supergroup) by the known
/// results: residual finiteness iff `q | 2p`; Hopficity from residual
/// finiteness or refuted by the non-Hopfian construction; CAT(0) status in
/// the positive-parameter range, where `R_{p,q}` is CAT(0) exactly for
/// `q > p`.
pub fn classify(spec: &GpqSpec) -> ClassifyReport {
    let rf = is_residually_finite(spec);
    let mut notes = Vec::new();
    notes.push(format!(
        "residual finiteness criterion: q | 2p is {}",
        if rf { "satisfied" } else { "violated" }
    ));

    let non_hopf_applies = spec.p == 1 && spec.q >= 3 && spec.q % 2 == 1;
    let hopfian = if rf {
        notes.push("finitely generated and residually finite, hence Hopfian".to_owned());
        Tri::True
    } else if non_hopf_applies {
        notes.push(
            "non-Hopfian: a -> a^q, b -> b^q is a surjective endomorphism with nontrivial kernel"
                .to_owned(),
        );
        Tri::False
    } else {
        Tri::Unknown
    };

    let positive = spec.p >= 1 && spec.q >= 1;
    let cat0 = if !positive {
        Tri::Unknown
    } else if spec.q > spec.p {
        notes.push("CAT(0): q > p >= 1".to_owned());
        Tri::True
    } else if spec.p > spec.q {
        notes.push(
            "snowflake regime p > q >= 1: Dehn function exceeds quadratic, so not CAT(0)"
                .to_owned(),
        );
        Tri::False
    } else if spec.p == 1 {
        notes.push("G_{1,1} is Gersten's free-by-cyclic group, which is not CAT(0)".to_owned());
        Tri::False
    } else {
        // R_{p,p} is not CAT(0); whether that passes to the index-2 subgroup
        // is not decided here.
        Tri::Unknown
    };

    let (graph, presentation) = make_gpq(spec);
    let screen = graph.cubulation_screen();
    let witness = match rf_obstruction_witness(spec) {
        Ok(w) => Some(w),
        Err(_) => None,
    };
    if let Some(w) = &witness {
        debug_assert!(!words::is_trivial(w, &presentation).unwrap());
    }

    let rpq_cat0 = if positive {
        if spec.q > spec.p {
            Tri::True
        } else {
            Tri::False
        }
    } else {
        Tri::Unknown
    };
    let rpq = RpqReport {
        presentation: make_rpq(spec),
        residually_finite: rf,
        hopfian: if rf { Tri::True } else { Tri::Unknown },
        cat0: rpq_cat0,
        transfer: vec![
            "residual finiteness transfers both ways across the index-2 inclusion".to_owned(),
            "CAT(0) for R_{p,q} (p,q >= 1) holds exactly when q > p and passes down to the index-2 subgroup".to_owned(),
            "non-residual-finiteness of the subgroup lifts to R_{p,q}".to_owned(),
        ],
    };

    ClassifyReport { p: spec.p, q: spec.q, rf, hopfian, cat0, screen, witness, notes, rpq }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: i64, q: i64) -> GpqSpec {
        GpqSpec::new(p, q).unwrap()
    }

    fn lv(x: i64, y: i64) -> LatticeVector {
        LatticeVector::new(x, y)
    }

    #[test]
    fn gpq_graph_has_the_two_loops() {
        let (g, p) = make_gpq(&spec(1, 3));
        assert_eq!(g.vertices().len(), 1);
        let s = g.edge(&"s".into()).unwrap();
        assert_eq!((s.z_minus.clone(), s.z_plus.clone()), (lv(3, 0), lv(1, 1)));
        let t = g.edge(&"t".into()).unwrap();
        assert_eq!((t.z_minus.clone(), t.z_plus.clone()), (lv(3, 0), lv(1, -1)));
        assert_eq!(p.rules().len(), 2);

        let (g, _) = make_gpq(&spec(2, 2));
        let s = g.edge(&"s".into()).unwrap();
        assert_eq!((s.z_minus.clone(), s.z_plus.clone()), (lv(2, 0), lv(2, 1)));
        let t = g.edge(&"t".into()).unwrap();
        assert_eq!((t.z_minus.clone(), t.z_plus.clone()), (lv(2, 0), lv(2, -1)));
    }

    #[test]
    fn zero_parameters_are_rejected() {
        assert_eq!(GpqSpec::new(0, 3).unwrap_err(), GpqError::ZeroParameter);
        assert_eq!(GpqSpec::new(1, 0).unwrap_err(), GpqError::ZeroParameter);
    }

    #[test]
    fn rf_criterion_examples() {
        assert!(is_residually_finite(&spec(1, 2)));
        assert!(!is_residually_finite(&spec(1, 3)));
        assert!(is_residually_finite(&spec(3, 6)));
    }

    #[test]
    fn gpq_vertex_has_three_parallelism_classes() {
        for (p, q) in [(1, 3), (2, 2), (-1, 5), (4, -2), (-3, -3)] {
            let (g, _) = make_gpq(&spec(p, q));
            let classes = g.parallelism_classes(&"v0".into()).unwrap();
            assert_eq!(classes.len(), 3, "G_{{{p},{q}}}");
            assert_eq!(g.cubulation_screen(), ScreenVerdict::NotCocompactlyCubulated);
        }
    }

    #[test]
    fn obstruction_witness_for_1_3_matches_the_hopf_witness() {
        let w = rf_obstruction_witness(&spec(1, 3)).unwrap();
        let expected = GroupWord::commutator(
            &conjugated_power("s", lv(1, 0)),
            &GroupWord::vertex(1, -1),
        );
        assert_eq!(w, expected);
    }

    #[test]
    fn obstruction_witness_uses_the_gcd_power() {
        // gcd(2*2, 6) = 2, and (2,0) is not a multiple of (6,0).
        let w = rf_obstruction_witness(&spec(2, 6)).unwrap();
        let expected = GroupWord::commutator(
            &conjugated_power("s", lv(2, 0)),
            &GroupWord::vertex(2, -1),
        );
        assert_eq!(w, expected);
        let (_, p) = make_gpq(&spec(2, 6));
        assert!(!words::is_trivial(&w, &p).unwrap());
    }

    #[test]
    fn rf_case_has_no_witness() {
        assert_eq!(rf_obstruction_witness(&spec(1, 2)).unwrap_err(), GpqError::ResiduallyFinite);
    }

    #[test]
    fn non_hopf_witness_for_small_odd_q() {
        for q in [3, 5] {
            let w = non_hopf_witness(&spec(1, q)).unwrap();
            assert!(w.endo_report.ok, "q = {q}");
            assert!(w.kernel_nontrivial, "q = {q}");
            assert!(w.kernel_image_trivial, "q = {q}");
        }
    }

    #[test]
    fn non_hopf_hypothesis_is_enforced() {
        assert_eq!(non_hopf_witness(&spec(1, 2)).unwrap_err(), GpqError::OutsideHypothesis);
        assert_eq!(non_hopf_witness(&spec(2, 3)).unwrap_err(), GpqError::OutsideHypothesis);
    }

    #[test]
    fn cq_quotient_for_2_2() {
        let report = cq_quotient(&spec(2, 2)).unwrap();
        assert_eq!(report.beta, 0);
        assert!(report.relations_ok);
        assert_eq!(report.kernel_basis.first(), &lv(2, 0));
        assert_eq!(report.kernel_basis.second(), &lv(0, 1));
        let coords: Vec<_> = report.inclusions.iter().map(|i| i.coordinates.clone()).collect();
        assert_eq!(coords, vec![lv(1, 0), lv(1, 1), lv(1, -1)]);
        assert!(report.all_primitive);
    }

    #[test]
    fn cq_quotient_for_2_4_uses_beta_p() {
        let report = cq_quotient(&spec(2, 4)).unwrap();
        assert_eq!(report.beta, 2);
        assert!(report.relations_ok);
        assert_eq!(report.kernel_basis.first(), &lv(4, 0));
        assert_eq!(report.kernel_basis.second(), &lv(2, 1));
        let coords: Vec<_> = report.inclusions.iter().map(|i| i.coordinates.clone()).collect();
        assert_eq!(coords, vec![lv(1, 0), lv(0, 1), lv(1, -1)]);
        assert!(report.all_primitive);
    }

    #[test]
    fn cq_quotient_requires_the_divisibility() {
        assert_eq!(cq_quotient(&spec(1, 3)).unwrap_err(), GpqError::NotResiduallyFinite);
    }

    #[test]
    fn cq_quotient_with_negative_parameters() {
        let report = cq_quotient(&spec(-2, -4)).unwrap();
        assert_eq!(report.modulus, 4);
        assert!(report.relations_ok);
        assert!(report.all_primitive);
    }

    #[test]
    fn degree_one_search_finds_exactly_the_trivial_quotient() {
        let report = finite_quotient_search(&spec(1, 3), 1);
        assert_eq!(report.quotients.len(), 1);
        assert!(report.quotients[0].quotient.a.is_identity());
        assert_eq!(report.quotients[0].witness_image_identity, Some(true));
    }

    #[test]
    fn search_for_rf_parameters_lists_quotients_without_witness() {
        let report = finite_quotient_search(&spec(1, 2), 3);
        assert!(report.witness.is_none());
        assert!(report.quotients.len() > 1);
        assert!(report.all_witness_images_trivial.is_none());
        for record in &report.quotients {
            assert!(record.quotient.satisfies_relations(&spec(1, 2)));
            assert_eq!(record.witness_image_identity, None);
        }
    }

    #[test]
    fn quotients_satisfy_relations_and_kill_the_witness() {
        let report = finite_quotient_search(&spec(1, 3), 3);
        assert!(!report.quotients.is_empty());
        for record in &report.quotients {
            assert!(record.quotient.satisfies_relations(&spec(1, 3)));
            assert_eq!(record.witness_image_identity, Some(true));
        }
        assert_eq!(report.all_witness_images_trivial, Some(true));
    }

    #[test]
    fn classify_1_3() {
        let report = classify(&spec(1, 3));
        assert!(!report.rf);
        assert_eq!(report.hopfian, Tri::False);
        assert_eq!(report.cat0, Tri::True);
        assert!(report.witness.is_some());
        assert_eq!(report.screen, ScreenVerdict::NotCocompactlyCubulated);
    }

    #[test]
    fn classify_1_1_is_gerstens_group() {
        let report = classify(&spec(1, 1));
        assert!(report.rf);
        assert_eq!(report.hopfian, Tri::True);
        assert_eq!(report.cat0, Tri::False);
        assert!(report.notes.iter().any(|n| n.contains("Gersten")));
    }

    #[test]
    fn classify_3_2_is_snowflake() {
        let report = classify(&spec(3, 2));
        assert!(report.rf);
        assert_eq!(report.hopfian, Tri::True);
        assert_eq!(report.cat0, Tri::False);
    }

    #[test]
    fn rpq_presentation_records_the_two_relators() {
        let rpq = make_rpq(&spec(1, 3));
        assert_eq!(rpq.relators[0], "x^2 y^-2");
        assert_eq!(rpq.relators[1], "t^-1 x^6 t y^-1 x^-1");
    }

    #[test]
    fn perm_basics() {
        let p = Perm::from_images(vec![1, 2, 0]);
        assert_eq!(p.order(), 3);
        assert!(p.then(&p.inverse()).is_identity());
        assert_eq!(p.pow(&BigInt::from(-1)), p.inverse());
        assert_eq!(p.pow(&BigInt::from(4)), p);
        assert_eq!(p.one_based(), vec![2, 3, 1]);
    }
}
