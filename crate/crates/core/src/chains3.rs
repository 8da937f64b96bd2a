//! The 3-local problem as a bunch of chains: letters, words, string and
//! band objects, their matrices, and decomposition of 3-local matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::blockmat::{BlockError, BlockMatrix};
use crate::shape::{Generator, Side, StripeLabel, TransformSchema, Variant};
use crate::transform::{self, canonical_form, Budget, SearchError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("bad letter `{0}`")]
    BadLetter(String),
    #[error("bad word: {0}")]
    BadWord(String),
    #[error("bad band: {0}")]
    BadBand(String),
    #[error("matrix is not 3-local")]
    NotLocal3,
    #[error("no string or band matches a summand")]
    Unrecognized,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Block(#[from] BlockError),
}

/// A letter of the chains. Derived order is the printing order used for
/// canonical representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    E0,
    E(u32),
    Et(u32),
    Ep0,
    Ep(u32),
    F0,
    F(u32),
    Ft(u32),
    Fp0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chain {
    E1,
    F1,
    E2,
    F2,
}

impl Letter {
    pub fn chain(self) -> Chain {
        use Letter::*;
        match self {
            E0 | E(_) => Chain::E1,
            F0 | F(_) => Chain::F1,
            Et(_) | Ep0 | Ep(_) => Chain::E2,
            Ft(_) | Fp0 => Chain::F2,
        }
    }

    pub fn is_e(self) -> bool {
        matches!(self.chain(), Chain::E1 | Chain::E2)
    }

    /// The number of other letters equivalent to this one.
    pub fn bracket(self) -> u8 {
        self.partner().is_some() as u8
    }

    pub fn partner(self) -> Option<Letter> {
        use Letter::*;
        match self {
            E(s) => Some(Et(s)),
            Et(s) => Some(E(s)),
            F(r) => Some(Ft(r)),
            Ft(r) => Some(F(r)),
            _ => None,
        }
    }

    /// x − y: opposite sides of the same pair of chains.
    pub fn dash(self, other: Letter) -> bool {
        matches!(
            (self.chain(), other.chain()),
            (Chain::E1, Chain::F1) | (Chain::F1, Chain::E1) | (Chain::E2, Chain::F2) | (Chain::F2, Chain::E2)
        )
    }

    pub fn tilde(self, other: Letter) -> bool {
        self.partner() == Some(other)
    }

    /// Stripe realizing the letter in the 3-local problem.
    pub fn label(self) -> StripeLabel {
        use Letter::*;
        match self {
            E0 => StripeLabel::sphere_row(0),
            Ep0 => StripeLabel::sphere_row(1),
            E(s) => StripeLabel::row(Generator::MooreN(s), 0),
            Et(s) => StripeLabel::row(Generator::MooreN(s), 1),
            Ep(t) => StripeLabel::row(Generator::MooreN1(t), 1),
            F0 => StripeLabel::sphere_col(3),
            Fp0 => StripeLabel::sphere_col(4),
            F(r) => StripeLabel::col(Generator::MooreN3(r), 3),
            Ft(r) => StripeLabel::col(Generator::MooreN3(r), 4),
        }
    }

    /// Inverse of [`Letter::label`] on 3-local stripes; None for the dead
    /// second slot of `M^{n+1}`.
    pub fn of_label(label: &StripeLabel) -> Option<Letter> {
        use Generator::*;
        Some(match (label.side, label.gen, label.slot) {
            (Side::Row, Sphere(0), _) => Letter::E0,
            (Side::Row, Sphere(1), _) => Letter::Ep0,
            (Side::Col, Sphere(3), _) => Letter::F0,
            (Side::Col, Sphere(4), _) => Letter::Fp0,
            (Side::Row, MooreN(s), 0) => Letter::E(s),
            (Side::Row, MooreN(s), 1) => Letter::Et(s),
            (Side::Row, MooreN1(t), 1) => Letter::Ep(t),
            (Side::Col, MooreN3(r), 3) => Letter::F(r),
            (Side::Col, MooreN3(r), 4) => Letter::Ft(r),
            _ => return None,
        })
    }

    fn exponent(self) -> u32 {
        use Letter::*;
        match self {
            E(s) | Et(s) | Ep(s) | F(s) | Ft(s) => s,
            _ => 0,
        }
    }

    /// All letters with torsion exponents up to `max_exp`, in order.
    pub fn all(max_exp: u32) -> Vec<Letter> {
        use Letter::*;
        let mut v = vec![E0];
        v.extend((1..=max_exp).map(E));
        v.extend((1..=max_exp).map(Et));
        v.push(Ep0);
        v.extend((1..=max_exp).map(Ep));
        v.push(F0);
        v.extend((1..=max_exp).map(F));
        v.extend((1..=max_exp).map(Ft));
        v.push(Fp0);
        v
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Letter::*;
        match *self {
            E0 => write!(f, "e0"),
            E(s) => write!(f, "e{s}"),
            Et(s) => write!(f, "et{s}"),
            Ep0 => write!(f, "e'0"),
            Ep(t) => write!(f, "e'{t}"),
            F0 => write!(f, "f0"),
            F(r) => write!(f, "f{r}"),
            Ft(r) => write!(f, "ft{r}"),
            Fp0 => write!(f, "f'0"),
        }
    }
}

impl FromStr for Letter {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChainError::BadLetter(s.to_string());
        let (head, num) = s.split_at(s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?);
        let k: u32 = num.parse().map_err(|_| bad())?;
        let l = match (head, k) {
            ("e", 0) => Letter::E0,
            ("e", k) => Letter::E(k),
            ("et", k) if k > 0 => Letter::Et(k),
            ("e'", 0) => Letter::Ep0,
            ("e'", k) => Letter::Ep(k),
            ("f", 0) => Letter::F0,
            ("f", k) => Letter::F(k),
            ("ft", k) if k > 0 => Letter::Ft(k),
            ("f'", 0) => Letter::Fp0,
            _ => return Err(bad()),
        };
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Tilde,
    Dash,
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rel::Tilde => "~",
            Rel::Dash => "-",
        })
    }
}

/// `x₁ r₁ x₂ … x_l`, not necessarily valid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub letters: Vec<Letter>,
    pub rels: Vec<Rel>,
}

impl Word {
    pub fn new(letters: Vec<Letter>, rels: Vec<Rel>) -> Self {
        Word { letters, rels }
    }

    pub fn single(x: Letter) -> Self {
        Word { letters: vec![x], rels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        let mut letters = self.letters.clone();
        letters.reverse();
        let mut rels = self.rels.clone();
        rels.reverse();
        Word { letters, rels }
    }

    /// The lesser of the word and its inverse.
    pub fn canonical(&self) -> Word {
        let inv = self.inverse();
        if inv < *self {
            inv
        } else {
            self.clone()
        }
    }

    fn check_links(&self) -> Result<(), ChainError> {
        let bad = |m: String| Err(ChainError::BadWord(m));
        if self.letters.is_empty() || self.rels.len() + 1 != self.letters.len() {
            return bad("letter and relation counts disagree".to_string());
        }
        for i in 0..self.rels.len() {
            if i + 1 < self.rels.len() && self.rels[i] == self.rels[i + 1] {
                return bad(format!("relations {} and {} are equal", i + 1, i + 2));
            }
            let (x, y) = (self.letters[i], self.letters[i + 1]);
            let ok = match self.rels[i] {
                Rel::Tilde => x.tilde(y),
                Rel::Dash => x.dash(y),
            };
            if !ok {
                return bad(format!("{x} {} {y} is not a relation", self.rels[i]));
            }
        }
        Ok(())
    }

    /// Checks every rule of a word; single letters must have `[x] = 0`.
    pub fn validate(&self) -> Result<(), ChainError> {
        self.check_links()?;
        let l = self.letters.len();
        let first = self.rels.first().copied();
        let last = self.rels.last().copied();
        if l == 1 && self.letters[0].bracket() == 1 {
            return Err(ChainError::BadWord(format!("lone letter {} must come with its partner", self.letters[0])));
        }
        if first == Some(Rel::Dash) && self.letters[0].bracket() != 0 {
            return Err(ChainError::BadWord("first letter has a partner but starts with -".to_string()));
        }
        if last == Some(Rel::Dash) && self.letters[l - 1].bracket() != 0 {
            return Err(ChainError::BadWord("last letter has a partner but ends with -".to_string()));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn max_exponent(&self) -> u32 {
        self.letters.iter().map(|x| x.exponent()).max().unwrap_or(0)
    }

    /// Letters of the set 𝕃 (e0, e'0, f0, f'0) occurring in the word.
    pub fn anchors(&self) -> Vec<(usize, Letter)> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, x)| matches!(x, Letter::E0 | Letter::Ep0 | Letter::F0 | Letter::Fp0))
            .map(|(i, &x)| (i, x))
            .collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", self.rels[i - 1])?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c == '-' || c == '~' || c.is_whitespace() {
            if !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl FromStr for Word {
    type Err = ChainError;

    /// Parses without validating.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks = tokens(s);
        let mut letters = Vec::new();
        let mut rels = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            if i % 2 == 0 {
                letters.push(t.parse()?);
            } else {
                rels.push(match t.as_str() {
                    "-" => Rel::Dash,
                    "~" => Rel::Tilde,
                    _ => return Err(ChainError::BadWord(format!("expected - or ~, got `{t}`"))),
                });
            }
        }
        if letters.is_empty() || letters.len() != rels.len() + 1 {
            return Err(ChainError::BadWord(format!("incomplete word `{s}`")));
        }
        Ok(Word { letters, rels })
    }
}

/// A string object: a valid word up to inversion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StringObject {
    word: Word,
}

impl StringObject {
    pub fn new(word: Word) -> Result<Self, ChainError> {
        word.validate()?;
        Ok(StringObject { word: word.canonical() })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }
}

impl fmt::Display for StringObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.fmt(f)
    }
}

pub fn string_iso(a: &StringObject, b: &StringObject) -> bool {
    a.word == b.word || a.word == b.word.inverse()
}

// ---------------------------------------------------------------------------
// polynomials over the field with three elements, coefficients low to high

fn trim(mut p: Vec<u8>) -> Vec<u8> {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

fn poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % 3;
        }
    }
    trim(out)
}

fn poly_rem(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    let lead_inv = if b[db] == 1 { 1 } else { 2 };
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let shift = r.len() - 1 - db;
        let c = (r[r.len() - 1] * lead_inv) % 3;
        for (i, &y) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + 3 * 3 - c * y) % 3;
        }
        r = trim(r);
        if r.len() - 1 < db {
            break;
        }
    }
    r
}

fn monic_polys(deg: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let n = 3usize.pow(deg as u32);
    for code in 0..n {
        let mut p = Vec::with_capacity(deg + 1);
        let mut c = code;
        for _ in 0..deg {
            p.push((c % 3) as u8);
            c /= 3;
        }
        p.push(1);
        out.push(p);
    }
    out
}

/// Monic and irreducible over the field with three elements.
pub fn is_irreducible(p: &[u8]) -> bool {
    let p = trim(p.to_vec());
    if p.len() < 2 || *p.last().unwrap() != 1 || p.iter().any(|&c| c > 2) {
        return false;
    }
    let d = p.len() - 1;
    for k in 1..=d / 2 {
        for q in monic_polys(k) {
            if poly_rem(&p, &q) == [0] {
                return false;
            }
        }
    }
    true
}

/// Monic irreducible polynomials of degree `deg` other than `t`.
pub fn irreducibles(deg: usize) -> Vec<Vec<u8>> {
    monic_polys(deg).into_iter().filter(|p| is_irreducible(p) && *p != [0, 1]).collect()
}

fn poly_pow(p: &[u8], z: u32) -> Vec<u8> {
    let mut out = vec![1u8];
    for _ in 0..z {
        out = poly_mul(&out, p);
    }
    out
}

/// Frobenius (companion) matrix of a monic polynomial, row-major.
pub fn companion(p: &[u8]) -> Vec<Vec<u8>> {
    let d = p.len() - 1;
    let mut m = vec![vec![0u8; d]; d];
    for i in 1..d {
        m[i][i - 1] = 1;
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[d - 1] = (3 - p[i] % 3) % 3;
    }
    m
}

fn fmt_poly(p: &[u8]) -> String {
    p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// `B(w, z, π)`: a cyclic word `x₁ ~ x₂ − … ~ x_{4m}` closed by `x_{4m} − x₁`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandObject {
    pub word: Word,
    pub z: u32,
    /// monic, low to high
    pub pi: Vec<u8>,
}

impl BandObject {
    pub fn new(word: Word, z: u32, pi: Vec<u8>) -> Result<Self, ChainError> {
        let b = BandObject { word, z, pi: trim(pi) };
        b.validate()?;
        Ok(b)
    }

    pub fn degree(&self) -> usize {
        self.pi.len() - 1
    }

    /// Block size `z·v`.
    pub fn block(&self) -> usize {
        self.z as usize * self.degree()
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        let bad = |m: &str| Err(ChainError::BadBand(m.to_string()));
        let w = &self.word;
        w.check_links().map_err(|e| ChainError::BadBand(e.to_string()))?;
        let l = w.len();
        if l == 0 || !l.is_multiple_of(4) || w.rels[0] != Rel::Tilde {
            return bad("cycle must have length 4m and start with ~");
        }
        if !w.letters[l - 1].dash(w.letters[0]) {
            return bad("last and first letters must close with -");
        }
        if !is_periodic_free(w) {
            return bad("cycle is periodic");
        }
        if self.z == 0 {
            return bad("z must be positive");
        }
        if !is_irreducible(&self.pi) || self.pi == [0, 1] {
            return bad("pi must be monic irreducible and not t");
        }
        Ok(())
    }

    /// Rotations by whole bundles and the inverse cycle, smallest first.
    fn word_variants(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for w in [self.word.clone(), cyclic_inverse(&self.word)] {
            for k in (0..w.len()).step_by(2) {
                out.push(rotate(&w, k));
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

fn cyclic_rels(w: &Word) -> Vec<Rel> {
    let mut r = w.rels.clone();
    r.push(Rel::Dash);
    r
}

/// `w^{[k]}`.
pub fn rotate(w: &Word, k: usize) -> Word {
    let l = w.len();
    let rels = cyclic_rels(w);
    let letters = (0..l).map(|i| w.letters[(i + k) % l]).collect();
    let rels = (0..l - 1).map(|i| rels[(i + k) % l]).collect();
    Word { letters, rels }
}

fn cyclic_inverse(w: &Word) -> Word {
    // x₁ ~ x₂ − … ~ x_l becomes x_l ~ x_{l−1} − … ~ x₁
    w.inverse()
}

fn is_periodic_free(w: &Word) -> bool {
    (1..w.len()).all(|k| rotate(w, k) != *w)
}

impl fmt::Display for BandObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "band({}; z={}; pi={})", self.word, self.z, fmt_poly(&self.pi))
    }
}

impl FromStr for BandObject {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChainError::BadBand(s.to_string());
        let inner = s.trim().strip_prefix("band(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(';').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let word: Word = parts[0].parse()?;
        let z: u32 = parts[1].strip_prefix("z=").ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let pi = parts[2]
            .strip_prefix("pi=")
            .ok_or_else(bad)?
            .split(',')
            .map(|c| c.trim().parse::<u8>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        BandObject::new(word, z, pi)
    }
}

/// A 3-local indecomposable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Object3 {
    String(StringObject),
    Band(BandObject),
}

impl fmt::Display for Object3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object3::String(s) => s.fmt(f),
            Object3::Band(b) => b.fmt(f),
        }
    }
}

impl FromStr for Object3 {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim_start().starts_with("band(") {
            Ok(Object3::Band(s.parse()?))
        } else {
            Ok(Object3::String(StringObject::new(s.parse()?)?))
        }
    }
}

impl Object3 {
    pub fn realize(&self) -> Result<BlockMatrix, ChainError> {
        match self {
            Object3::String(s) => realize_string(s.word()),
            Object3::Band(b) => realize_band(b),
        }
    }
}

// ---------------------------------------------------------------------------
// realization

/// Places bundles of `size` lines for each letter; letters joined by ~ share
/// the bundle index. Returns the empty matrix and each letter's first line.
fn layout(w: &Word, size: usize) -> Result<(BlockMatrix, Vec<usize>), ChainError> {
    let mut count: BTreeMap<StripeLabel, usize> = BTreeMap::new();
    let mut bundle = vec![0usize; w.len()];
    for i in 0..w.len() {
        let lab = w.letters[i].label();
        let key = primary(&lab);
        let joined = i > 0 && w.rels[i - 1] == Rel::Tilde;
        if joined {
            bundle[i] = bundle[i - 1];
        } else {
            let c = count.entry(key).or_insert(0);
            bundle[i] = *c;
            *c += 1;
        }
    }
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for (&key, &c) in &count {
        let side = if key.side == Side::Row { &mut rows } else { &mut cols };
        side.push((key, c * size));
    }
    let m = BlockMatrix::zeros(Variant::Local3, &rows, &cols)?;
    let first = (0..w.len())
        .map(|i| m.lines_of(&w.letters[i].label()).start + bundle[i] * size)
        .collect();
    Ok((m, first))
}

fn primary(l: &StripeLabel) -> StripeLabel {
    match l.partner() {
        Some(p) if p.slot < l.slot => p,
        _ => *l,
    }
}

/// The 0/1 matrix of a string: a 1 for each − pair.
pub fn realize_string(w: &Word) -> Result<BlockMatrix, ChainError> {
    Ok(realize_string_lines(w)?.0)
}

/// [`realize_string`] plus the line of every letter.
pub fn realize_string_lines(w: &Word) -> Result<(BlockMatrix, Vec<usize>), ChainError> {
    w.validate()?;
    let (mut m, lines) = layout(w, 1)?;
    for i in 0..w.rels.len() {
        if w.rels[i] == Rel::Dash {
            let (a, b) = (i, i + 1);
            let (r, c) = if w.letters[a].is_e() { (lines[a], lines[b]) } else { (lines[b], lines[a]) };
            m.set(r, c, 1);
        }
    }
    Ok((m, lines))
}

/// Identity blocks on the − pairs and the companion matrix of `π^z` on the
/// closing pair; all blocks `zv × zv`.
pub fn realize_band(b: &BandObject) -> Result<BlockMatrix, ChainError> {
    b.validate()?;
    let w = &b.word;
    let d = b.block();
    let (mut m, lines) = layout(w, d)?;
    let l = w.len();
    let frob = companion(&poly_pow(&b.pi, b.z));
    let mut put = |x: usize, y: usize, block: Option<&Vec<Vec<u8>>>| {
        let (e, f) = if w.letters[x].is_e() { (x, y) } else { (y, x) };
        for i in 0..d {
            for j in 0..d {
                let v = match block {
                    Some(bl) => {
                        if w.letters[x].is_e() {
                            bl[i][j]
                        } else {
                            bl[j][i]
                        }
                    }
                    None => (i == j) as u8,
                };
                if v != 0 {
                    m.set(lines[e] + i, lines[f] + j, v as i64);
                }
            }
        }
    };
    for i in 0..l - 1 {
        if w.rels[i] == Rel::Dash {
            put(i, i + 1, None);
        }
    }
    put(l - 1, 0, Some(&frob));
    Ok(m)
}

/// Decides band isomorphism: cheap invariants, then the orbit oracle.
pub fn band_iso(a: &BandObject, b: &BandObject, budget: &Budget) -> Result<bool, ChainError> {
    if a.z != b.z || a.degree() != b.degree() || a.word.len() != b.word.len() {
        return Ok(false);
    }
    let ma = realize_band(a)?;
    let mb = realize_band(b)?;
    if ma.shape() != mb.shape() {
        return Ok(false);
    }
    Ok(transform::equivalent(&ma, &mb, &TransformSchema::new(Variant::Local3), budget)?)
}

// ---------------------------------------------------------------------------
// enumeration

/// Every valid word with at most `max_len` letters and exponents at most
/// `max_exp`, one per inversion pair, sorted.
pub fn enumerate_words(max_len: usize, max_exp: u32) -> Vec<StringObject> {
    let alphabet = Letter::all(max_exp);
    let mut out = Vec::new();
    let mut letters = Vec::new();
    let mut rels = Vec::new();
    for &x in &alphabet {
        letters.push(x);
        extend_words(&alphabet, max_len, &mut letters, &mut rels, &mut out);
        letters.pop();
    }
    out.sort();
    out.dedup();
    out
}

fn extend_words(alphabet: &[Letter], max_len: usize, letters: &mut Vec<Letter>, rels: &mut Vec<Rel>, out: &mut Vec<StringObject>) {
    let w = Word { letters: letters.clone(), rels: rels.clone() };
    if w.is_valid() && w.canonical() == w {
        out.push(StringObject { word: w });
    }
    if letters.len() >= max_len {
        return;
    }
    let last = *letters.last().unwrap();
    // a leading − needs a letter without partner
    if letters.len() == 1 && last.bracket() == 1 {
        if let Some(p) = last.partner() {
            letters.push(p);
            rels.push(Rel::Tilde);
            extend_words(alphabet, max_len, letters, rels, out);
            letters.pop();
            rels.pop();
        }
        return;
    }
    let next = match rels.last() {
        Some(Rel::Tilde) => Rel::Dash,
        Some(Rel::Dash) => Rel::Tilde,
        None => Rel::Dash,
    };
    match next {
        Rel::Tilde => {
            if let Some(p) = last.partner() {
                letters.push(p);
                rels.push(Rel::Tilde);
                extend_words(alphabet, max_len, letters, rels, out);
                letters.pop();
                rels.pop();
            }
        }
        Rel::Dash => {
            for &y in alphabet {
                if last.dash(y) {
                    letters.push(y);
                    rels.push(Rel::Dash);
                    extend_words(alphabet, max_len, letters, rels, out);
                    letters.pop();
                    rels.pop();
                }
            }
        }
    }
}

/// Valid words using exactly the given letter multiset.
fn words_with_letters(counts: &BTreeMap<Letter, usize>) -> Vec<Word> {
    let total: usize = counts.values().sum();
    let alphabet: Vec<Letter> = counts.keys().copied().collect();
    let mut out = Vec::new();
    let mut left = counts.clone();
    let mut letters = Vec::new();
    let mut rels = Vec::new();
    for &x in &alphabet {
        *left.get_mut(&x).unwrap() -= 1;
        letters.push(x);
        exact_words(&alphabet, total, &mut left, &mut letters, &mut rels, &mut out);
        letters.pop();
        *left.get_mut(&x).unwrap() += 1;
    }
    out.sort();
    out.dedup();
    out
}

fn exact_words(
    alphabet: &[Letter],
    total: usize,
    left: &mut BTreeMap<Letter, usize>,
    letters: &mut Vec<Letter>,
    rels: &mut Vec<Rel>,
    out: &mut Vec<Word>,
) {
    if letters.len() == total {
        let w = Word { letters: letters.clone(), rels: rels.clone() };
        if w.is_valid() {
            out.push(w.canonical());
        }
        return;
    }
    let last = *letters.last().unwrap();
    for &y in alphabet {
        if left[&y] == 0 {
            continue;
        }
        for r in [Rel::Tilde, Rel::Dash] {
            if rels.last() == Some(&r) {
                continue;
            }
            let ok = match r {
                Rel::Tilde => last.tilde(y),
                Rel::Dash => last.dash(y),
            };
            if !ok {
                continue;
            }
            *left.get_mut(&y).unwrap() -= 1;
            letters.push(y);
            rels.push(r);
            exact_words(alphabet, total, left, letters, rels, out);
            letters.pop();
            rels.pop();
            *left.get_mut(&y).unwrap() += 1;
        }
    }
}

/// Cycles (as band words) using exactly the given letter multiset, one per
/// rotation/inversion class.
fn cycles_with_letters(counts: &BTreeMap<Letter, usize>) -> Vec<Word> {
    let total: usize = counts.values().sum();
    if total == 0 || !total.is_multiple_of(4) {
        return Vec::new();
    }
    let alphabet: Vec<Letter> = counts.keys().copied().collect();
    let mut raw = Vec::new();
    let mut left = counts.clone();
    let mut letters = Vec::new();
    let mut rels = Vec::new();
    for &x in &alphabet {
        if x.bracket() == 0 {
            continue;
        }
        *left.get_mut(&x).unwrap() -= 1;
        letters.push(x);
        exact_words(&alphabet, total, &mut left, &mut letters, &mut rels, &mut raw);
        letters.pop();
        *left.get_mut(&x).unwrap() += 1;
    }
    // exact_words canonicalizes by inversion; recover both orientations
    let mut out = Vec::new();
    for w in raw {
        for v in [w.clone(), w.inverse()] {
            if v.rels.first() == Some(&Rel::Tilde) && v.letters[v.len() - 1].dash(v.letters[0]) && is_periodic_free(&v) {
                let b = BandObject { word: v, z: 1, pi: vec![2, 1] };
                out.push(b.word_variants()[0].clone());
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// decomposition

/// Letter multiset of a 3-local matrix divided by `d`, if every count is a
/// multiple of `d`.
fn letter_counts(m: &BlockMatrix, d: usize) -> Option<BTreeMap<Letter, usize>> {
    let mut counts = BTreeMap::new();
    for side in [Side::Row, Side::Col] {
        for s in m.stripes(side) {
            if s.dim == 0 {
                continue;
            }
            if let Some(x) = Letter::of_label(&s.label) {
                if s.dim % d != 0 {
                    return None;
                }
                counts.insert(x, s.dim / d);
            }
        }
    }
    Some(counts)
}

/// Reads a string or a one-dimensional band off a matrix with at most one
/// nonzero entry per line.
fn read_sparse(m: &BlockMatrix) -> Option<Object3> {
    let n = m.nrows();
    let node = |side: Side, i: usize| if side == Side::Row { i } else { n + i };
    let total = n + m.ncols();
    let mut letter = vec![None; total];
    let mut dash: Vec<Option<(usize, i64)>> = vec![None; total];
    let mut tilde: Vec<Option<usize>> = vec![None; total];
    for side in [Side::Row, Side::Col] {
        for i in 0..m.len(side) {
            let lab = m.label(side, i);
            letter[node(side, i)] = Letter::of_label(&lab);
            if let Some(x) = Letter::of_label(&lab) {
                if x.partner().is_some() {
                    let p = lab.partner().unwrap();
                    let k = i - m.lines_of(&lab).start;
                    tilde[node(side, i)] = Some(node(side, m.lines_of(&p).start + k));
                }
            }
        }
    }
    for (i, j, v) in m.nonzero() {
        let (a, b) = (node(Side::Row, i), node(Side::Col, j));
        if dash[a].is_some() || dash[b].is_some() {
            return None;
        }
        dash[a] = Some((b, v));
        dash[b] = Some((a, v));
    }
    let live: Vec<usize> = (0..total).filter(|&x| letter[x].is_some()).collect();
    if live.is_empty() {
        return None;
    }
    let degree = |x: usize| dash[x].is_some() as usize + tilde[x].is_some() as usize;
    let start = live.iter().copied().find(|&x| degree(x) <= 1);
    let cyclic = start.is_none();
    let start = start.unwrap_or(live[0]);
    let mut letters = vec![letter[start].unwrap()];
    let mut rels = Vec::new();
    let mut lambda = 1i64;
    let mut cur = start;
    // a cycle is read starting along ~
    let mut use_tilde = cyclic || tilde[start].is_some();
    loop {
        let step = if use_tilde {
            tilde[cur].map(|t| (t, Rel::Tilde, 1))
        } else {
            dash[cur].map(|(t, v)| (t, Rel::Dash, v))
        };
        let Some((t, r, v)) = step else { break };
        lambda = lambda * v % 3;
        if t == start || letters.len() >= live.len() {
            break;
        }
        letters.push(letter[t]?);
        rels.push(r);
        cur = t;
        use_tilde = !use_tilde;
    }
    if letters.len() != live.len() {
        return None;
    }
    let w = Word { letters, rels };
    if cyclic {
        let pi = vec![((3 - lambda) % 3) as u8, 1];
        let b = BandObject { word: w, z: 1, pi };
        if b.validate().is_err() {
            return None;
        }
        let word = b.word_variants()[0].clone();
        Some(Object3::Band(BandObject { word, ..b }))
    } else {
        StringObject::new(w).ok().map(Object3::String)
    }
}

/// Candidates of the same shape as `m`, in a fixed order.
fn candidates(m: &BlockMatrix) -> Vec<Object3> {
    let mut out = Vec::new();
    if let Some(c) = letter_counts(m, 1) {
        for w in words_with_letters(&c) {
            out.push(Object3::String(StringObject { word: w }));
        }
    }
    let max_d = m.nrows().max(m.ncols());
    for d in 1..=max_d {
        let Some(c) = letter_counts(m, d) else { continue };
        let cycles = cycles_with_letters(&c);
        if cycles.is_empty() {
            continue;
        }
        for v in 1..=d {
            if d % v != 0 {
                continue;
            }
            let z = (d / v) as u32;
            for pi in irreducibles(v) {
                for w in &cycles {
                    out.push(Object3::Band(BandObject { word: w.clone(), z, pi: pi.clone() }));
                }
            }
        }
    }
    out
}

/// Recognizes one indecomposable 3-local summand.
pub fn identify(sparse: &BlockMatrix, canonical: &BlockMatrix, budget: &Budget) -> Result<Object3, ChainError> {
    if let Some(o) = read_sparse(sparse) {
        return Ok(o);
    }
    let schema = TransformSchema::new(Variant::Local3);
    for cand in candidates(canonical) {
        let r = cand.realize()?.trimmed();
        if r.shape() != canonical.shape() {
            continue;
        }
        if canonical_form(&r, &schema, budget)? == *canonical {
            return Ok(cand);
        }
    }
    Err(ChainError::Unrecognized)
}

/// Splits a 3-local matrix into strings and bands, sorted.
pub fn decompose3(a: &BlockMatrix, budget: &Budget) -> Result<Vec<Object3>, ChainError> {
    if a.variant() != Variant::Local3 {
        return Err(ChainError::NotLocal3);
    }
    let schema = TransformSchema::new(Variant::Local3);
    let mut out = Vec::new();
    for s in transform::decompose_detailed(a, &schema, budget, 0)? {
        out.push(identify(&s.sparse, &s.canonical, budget)?);
    }
    out.sort();
    Ok(out)
}

/// Direct sum of realizations.
pub fn realize_all(objs: &[Object3]) -> Result<BlockMatrix, ChainError> {
    let parts = objs.iter().map(|o| o.realize()).collect::<Result<Vec<_>, _>>()?;
    Ok(BlockMatrix::direct_sum_all(Variant::Local3, &parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn validity_examples() {
        assert!(w("e0 - f1 ~ ft1 - et3 ~ e3 - f4 ~ ft4 - e'0").is_valid());
        assert!(!w("e0 ~ f1").is_valid());
        assert!(!w("f0 - f1").is_valid());
        assert!(!w("e1").is_valid());
        assert!(w("e0").is_valid());
        assert!(!w("e1 - f0").is_valid());
        assert!(w("et1 ~ e1 - f0").is_valid());
    }

    #[test]
    fn parse_display_round_trip() {
        let s = "e0 - f1 ~ ft1 - et3 ~ e3 - f4 ~ ft4 - e'0";
        assert_eq!(w(s).to_string(), s);
        assert_eq!(w("e0-f0").to_string(), "e0 - f0");
        assert!("x1".parse::<Letter>().is_err());
        assert!("et0".parse::<Letter>().is_err());
        let b: BandObject = "band(f1 ~ ft1 - et1 ~ e1; z=2; pi=2,1)".parse().unwrap();
        assert_eq!(b.to_string(), "band(f1 ~ ft1 - et1 ~ e1; z=2; pi=2,1)");
    }

    #[test]
    fn type_one_example_matrix() {
        let m = realize_string(&w("e0 - f1 ~ ft1 - et3 ~ e3 - f4 ~ ft4 - e'0")).unwrap();
        // rows: S+0, S+1, M3^3[n]@0, M3^3[n]@1; cols: M3^1@3, M3^1@4, M3^4@3, M3^4@4
        assert_eq!(m.nrows(), 4);
        assert_eq!(m.ncols(), 4);
        let nz = m.nonzero();
        assert_eq!(nz, vec![(0, 0, 1), (1, 3, 1), (2, 2, 1), (3, 1, 1)]);
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&[1, 1]));
        assert!(is_irreducible(&[1, 0, 1]));
        assert!(!is_irreducible(&[2, 0, 1])); // t^2 - 1
        assert_eq!(irreducibles(1), vec![vec![1, 1], vec![2, 1]]);
        assert_eq!(irreducibles(2).len(), 3);
        assert_eq!(irreducibles(3).len(), 8);
    }

    #[test]
    fn companion_of_square() {
        let p = poly_pow(&[2, 1], 2); // (t-1)^2 = t^2 + t + 1
        assert_eq!(p, vec![1, 1, 1]);
        assert_eq!(companion(&p), vec![vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn band_matrices() {
        let b1: BandObject = "band(f1 ~ ft1 - et1 ~ e1; z=1; pi=2,1)".parse().unwrap();
        let m = realize_band(&b1).unwrap();
        assert_eq!(m.nonzero(), vec![(0, 0, 1), (1, 1, 1)]);
        let b2: BandObject = "band(f1 ~ ft1 - et1 ~ e1; z=1; pi=1,1)".parse().unwrap();
        assert_eq!(realize_band(&b2).unwrap().nonzero(), vec![(0, 0, 2), (1, 1, 1)]);
        assert!("band(f1 ~ ft1 - et1 ~ e1; z=1; pi=0,1)".parse::<BandObject>().is_err());
        assert!("band(f1 ~ ft1 - et1 ~ e1 - f1 ~ ft1 - et1 ~ e1; z=1; pi=1,1)".parse::<BandObject>().is_err());
    }

    #[test]
    fn small_enumeration() {
        let one = enumerate_words(1, 1);
        let names: Vec<String> = one.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, vec!["e0", "e'0", "e'1", "f0", "f'0"]);
        // pairs: the ~ pairs e1~et1, f1~ft1 plus dashes between [x]=0 letters
        // of matching chains: e0-f0, e'0-f'0, e'1-f'0
        let two = enumerate_words(2, 1);
        assert_eq!(two.len(), 5 + 2 + 3);
    }

    #[test]
    fn decompose_round_trips() {
        let budget = Budget::default();
        for s in ["e0 - f1 ~ ft1 - e'0", "e0", "e1 ~ et1", "f0 - e0", "et1 ~ e1 - f0"] {
            let o = Object3::String(StringObject::new(w(s)).unwrap());
            let m = o.realize().unwrap();
            assert_eq!(decompose3(&m, &budget).unwrap(), vec![o], "{s}");
        }
        let b: BandObject = "band(f1 ~ ft1 - et1 ~ e1; z=1; pi=1,1)".parse().unwrap();
        let got = decompose3(&realize_band(&b).unwrap(), &budget).unwrap();
        assert_eq!(got.len(), 1);
        match &got[0] {
            Object3::Band(g) => assert!(band_iso(g, &b, &budget).unwrap()),
            _ => panic!("expected a band"),
        }
    }
}
