//! Exact word problem for single-vertex tubular groups, i.e. multiple HNN
//! extensions of `Z^2` with infinite cyclic associated subgroups.
//!
//! Words alternate vertex-group elements (exponent vectors over the fixed
//! generators `a`, `b`) and signed stable letters. A pinch is a subword
//! `s^-1 v s` with `v` in the cyclic subgroup generated by the minus-side
//! inclusion (or `s v s^-1` on the plus side); replacing every pinch
//! terminates because each replacement removes two stable letters, and a
//! pinch-free word containing a stable letter is never trivial. Cyclic
//! membership is decided exactly: `v = n*z` for an integer `n` iff `v` is
//! parallel to `z` and the coordinates divide with a common quotient.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::TubularGraph;
use crate::lattice::LatticeVector;

/// Letter and group exponents are materialized when words are powered, so
/// parser exponents on stable letters and groups are bounded.
const MAX_MATERIALIZED_EXPONENT: i64 = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown generator \"{0}\"")]
    UnknownGenerator(String),
    #[error("stable letter \"{0}\" shadows a reserved name")]
    ReservedName(String),
    #[error("duplicate stable letter \"{0}\"")]
    DuplicateStableLetter(String),
    #[error("zero inclusion vector for stable letter \"{0}\"")]
    ZeroInclusion(String),
    #[error("presentation requires a single-vertex graph with loop edges only")]
    NotSingleVertex,
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("exponent {0} is too large to materialize")]
    ExponentTooLarge(BigInt),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Letter {
    /// An element of the `Z^2` vertex group, as an exponent vector over
    /// `a, b`. Zero never survives normalization.
    Vertex(LatticeVector),
    Stable { name: String, sign: Sign },
}

impl Letter {
    pub fn stable(name: &str, sign: Sign) -> Letter {
        Letter::Stable { name: name.to_owned(), sign }
    }

    fn inverse(&self) -> Letter {
        match self {
            Letter::Vertex(v) => Letter::Vertex(v.neg()),
            Letter::Stable { name, sign } => Letter::Stable { name: name.clone(), sign: sign.flip() },
        }
    }
}

/// A word in normalized form: no two adjacent vertex elements and no zero
/// vertex element; the identity is the empty word.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn identity() -> GroupWord {
        GroupWord { letters: Vec::new() }
    }

    /// Normalization: adjacent vertex elements are summed and zero elements
    /// removed. Idempotent.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> GroupWord {
        let mut out: Vec<Letter> = Vec::new();
        for letter in letters {
            match (&letter, out.last_mut()) {
                (Letter::Vertex(v), Some(Letter::Vertex(last))) => {
                    *last = last.add(v);
                }
                _ => out.push(letter),
            }
        }
        out.retain(|l| !matches!(l, Letter::Vertex(v) if v.is_zero()));
        GroupWord { letters: out }
    }

    pub fn vertex(x: impl Into<BigInt>, y: impl Into<BigInt>) -> GroupWord {
        GroupWord::from_letters([Letter::Vertex(LatticeVector::new(x, y))])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity_word(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord::from_letters(self.letters.iter().rev().map(Letter::inverse))
    }

    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        GroupWord::from_letters(self.letters.iter().chain(other.letters.iter()).cloned())
    }

    pub fn pow(&self, n: i64) -> GroupWord {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = GroupWord::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// `[u, v] = u v u^-1 v^-1`.
    pub fn commutator(u: &GroupWord, v: &GroupWord) -> GroupWord {
        u.concat(v).concat(&u.inverse()).concat(&v.inverse())
    }

    fn single_vertex_element(&self) -> Option<LatticeVector> {
        match self.letters.as_slice() {
            [] => Some(LatticeVector::zero()),
            [Letter::Vertex(v)] => Some(v.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        let mut pieces = Vec::new();
        for letter in &self.letters {
            match letter {
                Letter::Vertex(v) => {
                    for (name, exp) in [("a", &v.x), ("b", &v.y)] {
                        if exp.is_zero() {
                            continue;
                        }
                        if exp == &BigInt::from(1) {
                            pieces.push(name.to_string());
                        } else {
                            pieces.push(format!("{name}^{exp}"));
                        }
                    }
                }
                Letter::Stable { name, sign: Sign::Plus } => pieces.push(name.clone()),
                Letter::Stable { name, sign: Sign::Minus } => pieces.push(format!("{name}^-1")),
            }
        }
        f.write_str(&pieces.join(" "))
    }
}

impl Serialize for GroupWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The defining data of one stable letter, with the convention
/// `s^-1 (n * z_minus) s = n * z_plus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableRule {
    pub name: String,
    pub z_minus: LatticeVector,
    pub z_plus: LatticeVector,
}

/// A multiple HNN extension of `Z^2 = <a, b>` over cyclic subgroups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HnnPresentation {
    rules: Vec<StableRule>,
    by_name: BTreeMap<String, usize>,
}

impl HnnPresentation {
    pub fn new(rules: Vec<StableRule>) -> Result<Self, WordError> {
        let mut by_name = BTreeMap::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.name == "a" || rule.name == "b" || rule.name == "1" {
                return Err(WordError::ReservedName(rule.name.clone()));
            }
            if rule.z_minus.is_zero() || rule.z_plus.is_zero() {
                return Err(WordError::ZeroInclusion(rule.name.clone()));
            }
            if by_name.insert(rule.name.clone(), i).is_some() {
                return Err(WordError::DuplicateStableLetter(rule.name.clone()));
            }
        }
        Ok(HnnPresentation { rules, by_name })
    }

    /// Reads a presentation off a single-vertex tubular graph: one stable
    /// letter per loop edge, named by the edge id.
    pub fn from_graph(graph: &TubularGraph) -> Result<Self, WordError> {
        if graph.vertices().len() != 1 {
            return Err(WordError::NotSingleVertex);
        }
        let rules = graph
            .edges()
            .iter()
            .map(|e| StableRule {
                name: e.id.0.clone(),
                z_minus: e.z_minus.clone(),
                z_plus: e.z_plus.clone(),
            })
            .collect();
        HnnPresentation::new(rules)
    }

    pub fn rules(&self) -> &[StableRule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Result<&StableRule, WordError> {
        self.by_name
            .get(name)
            .map(|&i| &self.rules[i])
            .ok_or_else(|| WordError::UnknownGenerator(name.to_owned()))
    }
}

/// Exact integer quotient: `Some(n)` iff `v = n * z`.
fn cyclic_quotient(v: &LatticeVector, z: &LatticeVector) -> Option<BigInt> {
    debug_assert!(!z.is_zero());
    let (num, den, other_num, other_den) = if !z.x.is_zero() {
        (&v.x, &z.x, &v.y, &z.y)
    } else {
        (&v.y, &z.y, &v.x, &z.x)
    };
    if (num % den).is_zero() {
        let n = num / den;
        if *other_num == &n * other_den {
            return Some(n);
        }
    }
    None
}

/// Replaces pinches until none remain. A subword `s^-1 v s` with
/// `v = n * z_minus(s)` becomes `n * z_plus(s)` and symmetrically for
/// `s v s^-1`; each step removes two stable letters, so this terminates.
pub fn britton_reduce(w: &GroupWord, p: &HnnPresentation) -> Result<GroupWord, WordError> {
    let mut current = w.clone();
    'scan: loop {
        let letters = current.letters();
        for i in 0..letters.len() {
            let Letter::Stable { name, sign } = &letters[i] else { continue };
            let (middle, partner) = match letters.get(i + 1) {
                Some(Letter::Vertex(v)) => (v.clone(), i + 2),
                _ => (LatticeVector::zero(), i + 1),
            };
            let Some(Letter::Stable { name: name2, sign: sign2 }) = letters.get(partner) else {
                continue;
            };
            if name != name2 || *sign2 != sign.flip() {
                continue;
            }
            let rule = p.rule(name)?;
            let (source, target) = match sign {
                Sign::Minus => (&rule.z_minus, &rule.z_plus),
                Sign::Plus => (&rule.z_plus, &rule.z_minus),
            };
            if let Some(n) = cyclic_quotient(&middle, source) {
                let mut next = letters[..i].to_vec();
                next.push(Letter::Vertex(target.scale(&n)));
                next.extend_from_slice(&letters[partner + 1..]);
                current = GroupWord::from_letters(next);
                continue 'scan;
            }
        }
        // Validate stable letters even when no pinch ever forms around them.
        for letter in letters {
            if let Letter::Stable { name, .. } = letter {
                p.rule(name)?;
            }
        }
        return Ok(current);
    }
}

/// True when the word has a pinch (used to re-check reducer output).
pub fn has_pinch(w: &GroupWord, p: &HnnPresentation) -> Result<bool, WordError> {
    let letters = w.letters();
    for i in 0..letters.len() {
        let Letter::Stable { name, sign } = &letters[i] else { continue };
        let (middle, partner) = match letters.get(i + 1) {
            Some(Letter::Vertex(v)) => (v.clone(), i + 2),
            _ => (LatticeVector::zero(), i + 1),
        };
        let Some(Letter::Stable { name: name2, sign: sign2 }) = letters.get(partner) else {
            continue;
        };
        if name != name2 || *sign2 != sign.flip() {
            continue;
        }
        let rule = p.rule(name)?;
        let source = match sign {
            Sign::Minus => &rule.z_minus,
            Sign::Plus => &rule.z_plus,
        };
        if cyclic_quotient(&middle, source).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Decides triviality: after Britton reduction a word with stable letters is
/// nontrivial, and a bare vertex element is trivial iff it is zero.
pub fn is_trivial(w: &GroupWord, p: &HnnPresentation) -> Result<bool, WordError> {
    let reduced = britton_reduce(w, p)?;
    Ok(match reduced.single_vertex_element() {
        Some(v) => v.is_zero(),
        None => false,
    })
}

/// An endomorphism given by images of the vertex generators and of every
/// stable letter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Endomorphism {
    pub a: GroupWord,
    pub b: GroupWord,
    pub stables: BTreeMap<String, GroupWord>,
}

impl Endomorphism {
    pub fn identity(p: &HnnPresentation) -> Endomorphism {
        Endomorphism {
            a: GroupWord::vertex(1, 0),
            b: GroupWord::vertex(0, 1),
            stables: p
                .rules()
                .iter()
                .map(|r| (r.name.clone(), GroupWord::from_letters([Letter::stable(&r.name, Sign::Plus)])))
                .collect(),
        }
    }
}

fn word_pow_big(w: &GroupWord, n: &BigInt) -> Result<GroupWord, WordError> {
    if let Some(v) = w.single_vertex_element() {
        return Ok(GroupWord::from_letters([Letter::Vertex(v.scale(n))]));
    }
    let small = n
        .to_i64()
        .filter(|k| k.abs() <= MAX_MATERIALIZED_EXPONENT)
        .ok_or_else(|| WordError::ExponentTooLarge(n.clone()))?;
    Ok(w.pow(small))
}

/// Letterwise substitution followed by normalization. A vertex element
/// `(i, j)` maps through `endo(a)^i * endo(b)^j`; when both images are plain
/// vertex elements this is a single scaled sum.
pub fn apply_endo(endo: &Endomorphism, w: &GroupWord) -> Result<GroupWord, WordError> {
    let mut image = GroupWord::identity();
    for letter in w.letters() {
        let piece = match letter {
            Letter::Vertex(v) => {
                word_pow_big(&endo.a, &v.x)?.concat(&word_pow_big(&endo.b, &v.y)?)
            }
            Letter::Stable { name, sign } => {
                let target = endo
                    .stables
                    .get(name)
                    .ok_or_else(|| WordError::UnknownGenerator(name.clone()))?;
                match sign {
                    Sign::Plus => target.clone(),
                    Sign::Minus => target.inverse(),
                }
            }
        };
        image = image.concat(&piece);
    }
    Ok(image)
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationCheck {
    pub relation: GroupWord,
    pub image: GroupWord,
    pub image_trivial: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EndoReport {
    pub ok: bool,
    pub relations: Vec<RelationCheck>,
}

/// A map of generators defines an endomorphism iff the image of every
/// defining relation reduces to the identity.
pub fn check_endo_well_defined(
    endo: &Endomorphism,
    p: &HnnPresentation,
    relations: &[GroupWord],
) -> Result<EndoReport, WordError> {
    let mut checks = Vec::new();
    for relation in relations {
        let image = apply_endo(endo, relation)?;
        let image_trivial = is_trivial(&image, p)?;
        checks.push(RelationCheck { relation: relation.clone(), image, image_trivial });
    }
    Ok(EndoReport { ok: checks.iter().all(|c| c.image_trivial), relations: checks })
}

// ---------------------------------------------------------------------------
// Text syntax: `s^-1 a^3 s b^-1`, with `a`, `b` the vertex generators, other
// names the presentation's stable letters, `[u, v]` the commutator and
// parentheses for grouping; `1` is the identity.

#[derive(Debug, PartialEq)]
enum Token {
    Ident(String),
    Int(BigInt),
    Caret,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, WordError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '^' => {
                tokens.push((i, Token::Caret));
                i += 1;
            }
            '[' => {
                tokens.push((i, Token::LBracket));
                i += 1;
            }
            ']' => {
                tokens.push((i, Token::RBracket));
                i += 1;
            }
            '(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            ')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            ',' => {
                tokens.push((i, Token::Comma));
                i += 1;
            }
            '-' | '0'..='9' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &text[start..i];
                let value: BigInt = text.parse().map_err(|_| WordError::Parse {
                    position: start,
                    message: format!("invalid integer `{text}`"),
                })?;
                tokens.push((start, Token::Int(value)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                i += 1;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(text[start..i].to_owned())));
            }
            other => {
                return Err(WordError::Parse {
                    position: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    presentation: &'a HnnPresentation,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| match t {
            Token::Ident(s) => Token::Ident(s.clone()),
            Token::Int(n) => Token::Int(n.clone()),
            Token::Caret => Token::Caret,
            Token::LBracket => Token::LBracket,
            Token::RBracket => Token::RBracket,
            Token::LParen => Token::LParen,
            Token::RParen => Token::RParen,
            Token::Comma => Token::Comma,
        });
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), WordError> {
        let position = self.position();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            got => Err(WordError::Parse {
                position,
                message: format!("expected {want:?}, found {got:?}"),
            }),
        }
    }

    fn exponent(&mut self) -> Result<BigInt, WordError> {
        if self.peek() != Some(&Token::Caret) {
            return Ok(BigInt::from(1));
        }
        self.bump();
        let position = self.position();
        match self.bump() {
            Some(Token::Int(n)) => Ok(n),
            got => Err(WordError::Parse {
                position,
                message: format!("expected an integer exponent, found {got:?}"),
            }),
        }
    }

    fn small_exponent(&mut self) -> Result<i64, WordError> {
        let n = self.exponent()?;
        n.to_i64()
            .filter(|k| k.abs() <= MAX_MATERIALIZED_EXPONENT)
            .ok_or(WordError::ExponentTooLarge(n))
    }

    fn word(&mut self, stop_at: &[Token]) -> Result<GroupWord, WordError> {
        let mut out = GroupWord::identity();
        loop {
            match self.peek() {
                None => return Ok(out),
                Some(t) if stop_at.contains(t) => return Ok(out),
                Some(Token::Ident(_)) => {
                    let Some(Token::Ident(name)) = self.bump() else { unreachable!() };
                    let piece = match name.as_str() {
                        "a" => GroupWord::from_letters([Letter::Vertex(LatticeVector::new(
                            self.exponent()?,
                            0,
                        ))]),
                        "b" => GroupWord::from_letters([Letter::Vertex(LatticeVector::new(
                            0,
                            self.exponent()?,
                        ))]),
                        _ => {
                            self.presentation.rule(&name)?;
                            let exp = self.small_exponent()?;
                            let sign = if exp < 0 { Sign::Minus } else { Sign::Plus };
                            GroupWord::from_letters(
                                std::iter::repeat(Letter::stable(&name, sign))
                                    .take(exp.unsigned_abs() as usize),
                            )
                        }
                    };
                    out = out.concat(&piece);
                }
                Some(Token::Int(_)) => {
                    let position = self.position();
                    let Some(Token::Int(n)) = self.bump() else { unreachable!() };
                    if n == BigInt::from(1) {
                        // `1` is the identity.
                        continue;
                    }
                    return Err(WordError::Parse {
                        position,
                        message: format!("unexpected integer `{n}`"),
                    });
                }
                Some(Token::LBracket) => {
                    self.bump();
                    let u = self.word(&[Token::Comma])?;
                    self.expect(Token::Comma)?;
                    let v = self.word(&[Token::RBracket])?;
                    self.expect(Token::RBracket)?;
                    let exp = self.small_exponent()?;
                    out = out.concat(&GroupWord::commutator(&u, &v).pow(exp));
                }
                Some(Token::LParen) => {
                    self.bump();
                    let inner = self.word(&[Token::RParen])?;
                    self.expect(Token::RParen)?;
                    let exp = self.small_exponent()?;
                    out = out.concat(&inner.pow(exp));
                }
                Some(other) => {
                    return Err(WordError::Parse {
                        position: self.position(),
                        message: format!("unexpected token {other:?}"),
                    })
                }
            }
        }
    }
}

/// Parses the compact text syntax against a presentation (stable-letter
/// names must be declared there).
pub fn parse_word(text: &str, p: &HnnPresentation) -> Result<GroupWord, WordError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, presentation: p, end: text.len() };
    let word = parser.word(&[])?;
    if parser.pos != parser.tokens.len() {
        return Err(WordError::Parse {
            position: parser.position(),
            message: "trailing input".to_owned(),
        });
    }
    Ok(word)
}
