//! The stripe labels of the problem, the cell-ring table and the tables of
//! admissible transformations for the integral problem and its two
//! localizations.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::rings::Modulus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("invalid stripe label {label} for {variant} {side}")]
    InvalidLabel { label: String, side: Side, variant: Variant },
    #[error("unknown label token `{0}`")]
    UnknownToken(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Row,
    Col,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Row => "row",
            Side::Col => "col",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Integral,
    Local2,
    Local3,
    /// Integral with the (S+3 row, S+3 column) cell carrying integers.
    IntegralExt,
}

impl Variant {
    pub fn is_integral(self) -> bool {
        matches!(self, Variant::Integral | Variant::IntegralExt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Integral => "integral",
            Variant::Local2 => "local2",
            Variant::Local3 => "local3",
            Variant::IntegralExt => "integral-ext",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Variant {
    type Err = ShapeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "integral" => Variant::Integral,
            "local2" => Variant::Local2,
            "local3" => Variant::Local3,
            "integral-ext" => Variant::IntegralExt,
            _ => return Err(ShapeError::UnknownVariant(s.to_string())),
        })
    }
}

/// The generator a stripe belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `S^{n+k}`; rows k = 0..=3, columns k = 3, 4.
    Sphere(u8),
    /// `C_η^{n+2}`, row slots 0 and 2.
    CetaN2,
    /// `C_{η²}^{n+3}`, row slots 0 and 3.
    Ceta2N3,
    /// `C_η^{n+3}`, row slots 1 and 3.
    CetaN3,
    /// `M_{3^s}^n`, row slots 0 and 1.
    MooreN(u32),
    /// `M_{3^t}^{n+1}`, row slots 1 and 2.
    MooreN1(u32),
    /// `M_{3^r}^{n+3}`, column slots 3 and 4.
    MooreN3(u32),
}

/// A row or column stripe: generator plus homology slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StripeLabel {
    pub side: Side,
    pub gen: Generator,
    pub slot: u8,
}

impl StripeLabel {
    pub const fn row(gen: Generator, slot: u8) -> Self {
        StripeLabel { side: Side::Row, gen, slot }
    }

    pub const fn col(gen: Generator, slot: u8) -> Self {
        StripeLabel { side: Side::Col, gen, slot }
    }

    pub const fn sphere_row(k: u8) -> Self {
        Self::row(Generator::Sphere(k), k)
    }

    pub const fn sphere_col(k: u8) -> Self {
        Self::col(Generator::Sphere(k), k)
    }

    /// Position in the printing order of the table.
    pub fn order_key(&self) -> (u8, u32, u8) {
        use Generator::*;
        let (g, e) = match self.gen {
            Sphere(_) => (0, 0),
            CetaN2 => (1, 0),
            Ceta2N3 => (2, 0),
            CetaN3 => (3, 0),
            MooreN(s) => (4, s),
            MooreN1(t) => (5, t),
            MooreN3(r) => (6, r),
        };
        (g, e, self.slot)
    }

    /// Valid for some variant: generator/slot pair of the table.
    pub fn is_table_label(&self) -> bool {
        use Generator::*;
        match (self.side, self.gen) {
            (Side::Row, Sphere(k)) => k <= 3 && self.slot == k,
            (Side::Col, Sphere(k)) => (k == 3 || k == 4) && self.slot == k,
            (Side::Row, CetaN2) => self.slot == 0 || self.slot == 2,
            (Side::Row, Ceta2N3) => self.slot == 0 || self.slot == 3,
            (Side::Row, CetaN3) => self.slot == 1 || self.slot == 3,
            (Side::Row, MooreN(s)) => s >= 1 && (self.slot == 0 || self.slot == 1),
            (Side::Row, MooreN1(t)) => t >= 1 && (self.slot == 1 || self.slot == 2),
            (Side::Col, MooreN3(r)) => r >= 1 && (self.slot == 3 || self.slot == 4),
            _ => false,
        }
    }

    pub fn is_moore(&self) -> bool {
        matches!(
            self.gen,
            Generator::MooreN(_) | Generator::MooreN1(_) | Generator::MooreN3(_)
        )
    }

    pub fn is_cone(&self) -> bool {
        matches!(
            self.gen,
            Generator::CetaN2 | Generator::Ceta2N3 | Generator::CetaN3
        )
    }

    pub fn is_valid_for(&self, variant: Variant) -> bool {
        if !self.is_table_label() {
            return false;
        }
        match variant {
            Variant::Integral | Variant::IntegralExt => true,
            Variant::Local2 => !self.is_moore(),
            Variant::Local3 => match self.gen {
                Generator::Sphere(k) => match self.side {
                    Side::Row => k <= 1,
                    Side::Col => true,
                },
                g => !matches!(g, Generator::CetaN2 | Generator::Ceta2N3 | Generator::CetaN3),
            },
        }
    }

    pub fn check(&self, variant: Variant) -> Result<(), ShapeError> {
        if self.is_valid_for(variant) {
            Ok(())
        } else {
            Err(ShapeError::InvalidLabel {
                label: self.to_string(),
                side: self.side,
                variant,
            })
        }
    }

    /// The other slot of the same generator, if it has two.
    pub fn partner(&self) -> Option<StripeLabel> {
        use Generator::*;
        let other = match (self.gen, self.slot) {
            (CetaN2, 0) => 2,
            (CetaN2, 2) => 0,
            (Ceta2N3, 0) => 3,
            (Ceta2N3, 3) => 0,
            (CetaN3, 1) => 3,
            (CetaN3, 3) => 1,
            (MooreN(_), 0) => 1,
            (MooreN(_), 1) => 0,
            (MooreN1(_), 1) => 2,
            (MooreN1(_), 2) => 1,
            (MooreN3(_), 3) => 4,
            (MooreN3(_), 4) => 3,
            _ => return None,
        };
        Some(StripeLabel { slot: other, ..*self })
    }

    /// True for the first slot of a two-slot generator, and for spheres.
    pub fn is_primary(&self) -> bool {
        match self.partner() {
            Some(p) => self.slot < p.slot,
            None => true,
        }
    }

    /// Parses a label token for the given side.
    pub fn parse(side: Side, token: &str) -> Result<StripeLabel, ShapeError> {
        let bad = || ShapeError::UnknownToken(token.to_string());
        let label = if let Some(k) = token.strip_prefix("S+") {
            let k: u8 = k.parse().map_err(|_| bad())?;
            StripeLabel { side, gen: Generator::Sphere(k), slot: k }
        } else {
            let (head, slot) = token.rsplit_once('@').ok_or_else(bad)?;
            let slot: u8 = slot.parse().map_err(|_| bad())?;
            let gen = match head {
                "Ceta[n+2]" => Generator::CetaN2,
                "Ceta2[n+3]" => Generator::Ceta2N3,
                "Ceta[n+3]" => Generator::CetaN3,
                _ => {
                    let rest = head.strip_prefix("M3^").ok_or_else(bad)?;
                    let (e, tail) = rest.split_once('[').ok_or_else(bad)?;
                    let e: u32 = e.parse().map_err(|_| bad())?;
                    match tail {
                        "n]" => Generator::MooreN(e),
                        "n+1]" => Generator::MooreN1(e),
                        "n+3]" => Generator::MooreN3(e),
                        _ => return Err(bad()),
                    }
                }
            };
            StripeLabel { side, gen, slot }
        };
        if !label.is_table_label() {
            return Err(bad());
        }
        Ok(label)
    }
}

impl PartialOrd for StripeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StripeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.side, self.order_key()).cmp(&(other.side, other.order_key()))
    }
}

impl fmt::Display for StripeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Generator::*;
        match self.gen {
            Sphere(k) => write!(f, "S+{k}"),
            CetaN2 => write!(f, "Ceta[n+2]@{}", self.slot),
            Ceta2N3 => write!(f, "Ceta2[n+3]@{}", self.slot),
            CetaN3 => write!(f, "Ceta[n+3]@{}", self.slot),
            MooreN(s) => write!(f, "M3^{s}[n]@{}", self.slot),
            MooreN1(t) => write!(f, "M3^{t}[n+1]@{}", self.slot),
            MooreN3(r) => write!(f, "M3^{r}[n+3]@{}", self.slot),
        }
    }
}

/// The ring of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellRing {
    Zero,
    Z(Modulus),
    Zint,
}

impl CellRing {
    pub fn modulus(self) -> Option<Modulus> {
        match self {
            CellRing::Z(m) => Some(m),
            _ => None,
        }
    }

    /// Size of the residue ring (0 for Zero, None for integers).
    pub fn size(self) -> Option<u32> {
        match self {
            CellRing::Zero => Some(0),
            CellRing::Z(m) => Some(m.value()),
            CellRing::Zint => None,
        }
    }

    pub fn reduce(self, x: i64) -> i64 {
        match self {
            CellRing::Zero => 0,
            CellRing::Z(m) => m.reduce(x) as i64,
            CellRing::Zint => x,
        }
    }

    pub fn contains(self, x: i64) -> bool {
        match self {
            CellRing::Zero => x == 0,
            CellRing::Z(m) => x >= 0 && x < m.value() as i64,
            CellRing::Zint => true,
        }
    }
}

impl fmt::Display for CellRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellRing::Zero => f.write_str("0"),
            CellRing::Z(m) => write!(f, "Z/{m}"),
            CellRing::Zint => f.write_str("Z"),
        }
    }
}

use CellRing::{Zero, Z};
use Modulus::*;

// Columns in the order S+3, S+4, M@3, M@4.
fn integral_row(row: &StripeLabel) -> [CellRing; 4] {
    use Generator::*;
    match (row.gen, row.slot) {
        (Sphere(0), _) => [Z(Z24), Zero, Z(Z3), Zero],
        (Sphere(1), _) => [Z(Z2), Z(Z24), Zero, Z(Z3)],
        (Sphere(2), _) => [Z(Z2), Z(Z2), Zero, Zero],
        (Sphere(3), _) => [Zero, Z(Z2), Zero, Zero],
        (CetaN2, 0) | (Ceta2N3, 0) => [Z(Z12), Zero, Z(Z3), Zero],
        (CetaN3, 1) => [Zero, Z(Z12), Zero, Z(Z3)],
        (MooreN(_), 0) => [Z(Z3), Zero, Z(Z3), Zero],
        (MooreN(_), 1) | (MooreN1(_), 1) => [Zero, Z(Z3), Zero, Z(Z3)],
        _ => [Zero; 4],
    }
}

fn col_index(col: &StripeLabel) -> usize {
    match (col.gen, col.slot) {
        (Generator::Sphere(3), _) => 0,
        (Generator::Sphere(_), _) => 1,
        (_, 3) => 2,
        _ => 3,
    }
}

fn local_ring(ring: CellRing, p: u8) -> CellRing {
    match (ring, p) {
        (Z(Z24), 2) => Z(Z8),
        (Z(Z12), 2) => Z(Z4),
        (Z(Z3), 2) => Zero,
        (Z(Z24), 3) | (Z(Z12), 3) => Z(Z3),
        (Z(Z2), 3) => Zero,
        (r, _) => r,
    }
}

/// The ring of the `(row, col)` cell for the given variant.
pub fn cell_ring(variant: Variant, row: &StripeLabel, col: &StripeLabel) -> Result<CellRing, ShapeError> {
    for (l, side) in [(row, Side::Row), (col, Side::Col)] {
        if l.side != side {
            return Err(ShapeError::InvalidLabel { label: l.to_string(), side, variant });
        }
        l.check(variant)?;
    }
    Ok(cell_ring_unchecked(variant, row, col))
}

pub(crate) fn cell_ring_unchecked(variant: Variant, row: &StripeLabel, col: &StripeLabel) -> CellRing {
    let base = integral_row(row)[col_index(col)];
    match variant {
        Variant::Integral => base,
        Variant::IntegralExt => {
            if row.gen == Generator::Sphere(3) && col.gen == Generator::Sphere(3) {
                CellRing::Zint
            } else {
                base
            }
        }
        Variant::Local2 => local_ring(base, 2),
        Variant::Local3 => local_ring(base, 3),
    }
}

/// The image of an addition with multiplier `mult` from a cell of ring
/// `src` holding `a` into a cell of ring `dst` (before reduction).
///
/// A Z/2 source acts on Z/24 as η³ = 12, on Z/8 as 4; a Z/3 source acts on
/// Z/24 via 16 and on Z/12 via 4 (the idempotent lifts).
pub fn transfer(src: CellRing, dst: CellRing, mult: i64, a: i64) -> i64 {
    match (src, dst) {
        (Zero, _) | (_, Zero) => 0,
        (Z(Z2), Z(Z24)) => 12 * mult * a,
        (Z(Z2), Z(Z8)) => 4 * mult * a,
        (CellRing::Zint, Z(Z24)) => 12 * mult * a.rem_euclid(2),
        (Z(Z3), Z(Z24)) => 16 * mult * a,
        (Z(Z3), Z(Z12)) => 4 * mult * a,
        _ => mult * a,
    }
}

/// Which unit group may scale rows and columns in the integral problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitPolicy {
    /// Every residue coprime to 6 (units of all cell rings at once).
    CoprimeToSix,
    /// Only ±1.
    SignOnly,
}

/// Admissible transformations of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformSchema {
    pub variant: Variant,
    pub units: UnitPolicy,
}

impl TransformSchema {
    pub fn new(variant: Variant) -> Self {
        TransformSchema { variant, units: UnitPolicy::CoprimeToSix }
    }

    pub fn with_units(variant: Variant, units: UnitPolicy) -> Self {
        TransformSchema { variant, units }
    }

    /// Scalars allowed to multiply a line of the given stripe.
    pub fn unit_scalars(&self, label: &StripeLabel) -> Vec<i64> {
        match self.variant {
            Variant::Local2 => alloc::vec![1, 3, 5, 7],
            Variant::Local3 => alloc::vec![1, 2],
            Variant::Integral | Variant::IntegralExt => {
                if self.variant == Variant::IntegralExt && label.gen == Generator::Sphere(3) {
                    return alloc::vec![1, -1];
                }
                match self.units {
                    UnitPolicy::SignOnly => alloc::vec![1, 23],
                    UnitPolicy::CoprimeToSix => alloc::vec![1, 5, 7, 11, 13, 17, 19, 23],
                }
            }
        }
    }

    /// Linked partner stripe (identical transformations, equal dims).
    pub fn linked(&self, label: &StripeLabel) -> Option<StripeLabel> {
        if self.variant == Variant::Local3 && label.is_cone() {
            return None;
        }
        label.partner()
    }

    /// Coefficient `a` with `a·src < dst` (adding `a·k` times a line of
    /// `src` to a line of `dst`), for distinct stripes.
    pub fn addition(&self, src: &StripeLabel, dst: &StripeLabel) -> Option<i64> {
        if src.side != dst.side || src == dst {
            return None;
        }
        match src.side {
            Side::Row => self.row_addition(src, dst),
            Side::Col => col_addition(src, dst),
        }
    }

    fn row_addition(&self, src: &StripeLabel, dst: &StripeLabel) -> Option<i64> {
        use Generator::*;
        let local3 = self.variant == Variant::Local3;
        // the chain through slot n
        let rank0 = |l: &StripeLabel| -> Option<(u8, u32)> {
            match (l.gen, l.slot) {
                (Sphere(0), _) | (CetaN2, 0) | (Ceta2N3, 0) => Some((0, 0)),
                (MooreN(s), 0) => Some((1, u32::MAX - s)),
                _ => None,
            }
        };
        // the chain through slot n+1
        let rank1 = |l: &StripeLabel| -> Option<(u8, u32)> {
            match (l.gen, l.slot) {
                (MooreN(s), 1) => Some((0, s)),
                (Sphere(1), _) => Some((1, 0)),
                (CetaN3, 1) => Some((2, 0)),
                (MooreN1(t), 1) => Some((3, u32::MAX - t)),
                _ => None,
            }
        };
        if let (Some(a), Some(b)) = (rank0(src), rank0(dst)) {
            if a.0 == 0 && b.0 == 0 {
                if local3 {
                    return None;
                }
                return sphere_cone(src, dst);
            }
            return (a < b).then_some(1);
        }
        if let (Some(a), Some(b)) = (rank1(src), rank1(dst)) {
            return (a < b).then_some(1);
        }
        if local3 {
            return None;
        }
        match (src.gen, src.slot, dst.gen, dst.slot) {
            (Sphere(a), _, Sphere(b), _) if a > b => Some(1),
            (Sphere(2), _, CetaN2, 0) => Some(6),
            (Sphere(3), _, CetaN3, 1) => Some(6),
            (Ceta2N3, 0, Sphere(1), _) => Some(2),
            _ => None,
        }
    }

    /// All ordered additions among the given labels as `(src, dst, coef)`.
    pub fn additions(&self, labels: &[StripeLabel]) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                if let Some(c) = self.addition(a, b) {
                    out.push((i, j, c));
                }
            }
        }
        out
    }
}

fn sphere_cone(src: &StripeLabel, dst: &StripeLabel) -> Option<i64> {
    use Generator::*;
    match (src.gen, dst.gen) {
        (Sphere(0), CetaN2) | (Sphere(0), Ceta2N3) | (Ceta2N3, CetaN2) => Some(1),
        (CetaN2, Sphere(0)) | (Ceta2N3, Sphere(0)) | (CetaN2, Ceta2N3) => Some(2),
        _ => None,
    }
}

fn col_addition(src: &StripeLabel, dst: &StripeLabel) -> Option<i64> {
    use Generator::*;
    // slot n+3: M^r < M^{r'} < S+3 (r < r'); slot n+4: S+4 < M^{r'} < M^r
    let rank3 = |l: &StripeLabel| match (l.gen, l.slot) {
        (MooreN3(r), 3) => Some((0, r)),
        (Sphere(3), _) => Some((1, 0)),
        _ => None,
    };
    let rank4 = |l: &StripeLabel| match (l.gen, l.slot) {
        (Sphere(4), _) => Some((0, 0)),
        (MooreN3(r), 4) => Some((1, u32::MAX - r)),
        _ => None,
    };
    if let (Some(a), Some(b)) = (rank3(src), rank3(dst)) {
        return (a < b).then_some(1);
    }
    if let (Some(a), Some(b)) = (rank4(src), rank4(dst)) {
        return (a < b).then_some(1);
    }
    match (src.gen, dst.gen) {
        (Sphere(3), Sphere(4)) => Some(1),
        _ => None,
    }
}

/// Every label valid for `variant` with torsion exponents up to `max_exp`,
/// in table order.
pub fn all_labels(variant: Variant, side: Side, max_exp: u32) -> Vec<StripeLabel> {
    use Generator::*;
    let mut gens: Vec<StripeLabel> = Vec::new();
    match side {
        Side::Row => {
            for k in 0..=3 {
                gens.push(StripeLabel::sphere_row(k));
            }
            for (g, a, b) in [(CetaN2, 0, 2), (Ceta2N3, 0, 3), (CetaN3, 1, 3)] {
                gens.push(StripeLabel::row(g, a));
                gens.push(StripeLabel::row(g, b));
            }
            for s in 1..=max_exp {
                gens.push(StripeLabel::row(MooreN(s), 0));
                gens.push(StripeLabel::row(MooreN(s), 1));
            }
            for t in 1..=max_exp {
                gens.push(StripeLabel::row(MooreN1(t), 1));
                gens.push(StripeLabel::row(MooreN1(t), 2));
            }
        }
        Side::Col => {
            gens.push(StripeLabel::sphere_col(3));
            gens.push(StripeLabel::sphere_col(4));
            for r in 1..=max_exp {
                gens.push(StripeLabel::col(MooreN3(r), 3));
                gens.push(StripeLabel::col(MooreN3(r), 4));
            }
        }
    }
    gens.retain(|l| l.is_valid_for(variant));
    gens.sort();
    gens
}

#[cfg(test)]
mod tests {
    use super::*;
    use Generator::*;

    fn r(g: Generator, s: u8) -> StripeLabel {
        StripeLabel::row(g, s)
    }
    fn c(g: Generator, s: u8) -> StripeLabel {
        StripeLabel::col(g, s)
    }

    #[test]
    fn table_examples() {
        let v = Variant::Integral;
        assert_eq!(cell_ring(v, &StripeLabel::sphere_row(0), &StripeLabel::sphere_col(3)).unwrap(), Z(Z24));
        assert_eq!(cell_ring(v, &StripeLabel::sphere_row(3), &StripeLabel::sphere_col(3)).unwrap(), Zero);
        assert_eq!(
            cell_ring(Variant::IntegralExt, &StripeLabel::sphere_row(3), &StripeLabel::sphere_col(3)).unwrap(),
            CellRing::Zint
        );
        assert_eq!(cell_ring(v, &r(MooreN(2), 0), &c(MooreN3(1), 3)).unwrap(), Z(Z3));
        for col in all_labels(v, Side::Col, 2) {
            assert_eq!(cell_ring(v, &r(CetaN2, 2), &col).unwrap(), Zero);
        }
        assert!(cell_ring(v, &r(CetaN2, 1), &StripeLabel::sphere_col(3)).is_err());
        assert!(cell_ring(Variant::Local2, &r(MooreN(1), 0), &StripeLabel::sphere_col(3)).is_err());
    }

    #[test]
    fn localization_maps_rings() {
        for row in all_labels(Variant::Integral, Side::Row, 3) {
            for col in all_labels(Variant::Integral, Side::Col, 3) {
                let base = cell_ring(Variant::Integral, &row, &col).unwrap();
                for (p, v) in [(2u8, Variant::Local2), (3, Variant::Local3)] {
                    if let Ok(loc) = cell_ring(v, &row, &col) {
                        let want = match (base, p) {
                            (Z(Z2), 2) => Z(Z2),
                            (Z(Z2), 3) => Zero,
                            (Z(Z24), 2) => Z(Z8),
                            (Z(Z12), 2) => Z(Z4),
                            (Z(Z24), 3) | (Z(Z12), 3) | (Z(Z3), 3) => Z(Z3),
                            (Z(Z3), 2) => Zero,
                            (b, _) => b,
                        };
                        assert_eq!(loc, want, "{row} {col}");
                    }
                }
            }
        }
    }

    #[test]
    fn token_round_trip() {
        for side in [Side::Row, Side::Col] {
            for l in all_labels(Variant::Integral, side, 4) {
                assert_eq!(StripeLabel::parse(side, &l.to_string()).unwrap(), l);
            }
        }
        assert!(StripeLabel::parse(Side::Row, "Ceta[n+2]@1").is_err());
        assert!(StripeLabel::parse(Side::Row, "M3^0[n]@0").is_err());
        assert!(StripeLabel::parse(Side::Col, "S+2").is_err());
        assert!(StripeLabel::parse(Side::Row, "X+1").is_err());
    }

    #[test]
    fn schema_examples() {
        let s = TransformSchema::new(Variant::Integral);
        assert_eq!(s.addition(&StripeLabel::sphere_row(2), &r(CetaN2, 0)), Some(6));
        assert_eq!(s.addition(&StripeLabel::sphere_row(3), &r(CetaN3, 1)), Some(6));
        assert_eq!(s.addition(&r(CetaN2, 0), &StripeLabel::sphere_row(0)), Some(2));
        assert_eq!(s.addition(&StripeLabel::sphere_row(0), &r(CetaN2, 0)), Some(1));
        assert_eq!(s.addition(&StripeLabel::sphere_row(0), &StripeLabel::sphere_row(1)), None);
        assert_eq!(s.addition(&StripeLabel::sphere_row(1), &StripeLabel::sphere_row(0)), Some(1));
        assert_eq!(s.addition(&r(MooreN(2), 0), &r(MooreN(1), 0)), Some(1));
        assert_eq!(s.addition(&r(MooreN(1), 0), &r(MooreN(2), 0)), None);
        assert_eq!(s.addition(&r(MooreN(1), 1), &r(MooreN(2), 1)), Some(1));
        assert_eq!(s.addition(&r(MooreN(2), 1), &r(MooreN1(1), 1)), Some(1));
        assert_eq!(s.addition(&r(MooreN1(2), 1), &r(MooreN1(1), 1)), Some(1));
        assert_eq!(s.addition(&StripeLabel::sphere_col(3), &StripeLabel::sphere_col(4)), Some(1));
        assert_eq!(s.addition(&c(MooreN3(1), 3), &c(MooreN3(2), 3)), Some(1));
        assert_eq!(s.addition(&c(MooreN3(2), 4), &c(MooreN3(1), 4)), Some(1));
        assert_eq!(s.addition(&StripeLabel::sphere_col(4), &c(MooreN3(1), 4)), Some(1));
        assert_eq!(s.linked(&r(MooreN(1), 0)), Some(r(MooreN(1), 1)));
        assert_eq!(s.linked(&c(MooreN3(3), 4)), Some(c(MooreN3(3), 3)));
        assert_eq!(TransformSchema::new(Variant::Local2).unit_scalars(&StripeLabel::sphere_row(0)), [1, 3, 5, 7]);
    }

    /// Restricted to Moore/e/f stripes, the local3 relation is the order of
    /// the four chains.
    #[test]
    fn local3_relation_is_chains() {
        let s = TransformSchema::new(Variant::Local3);
        let e1 = [r(MooreN(2), 0), r(MooreN(1), 0)];
        assert_eq!(s.addition(&StripeLabel::sphere_row(0), &e1[0]), Some(1));
        assert_eq!(s.addition(&e1[0], &e1[1]), Some(1));
        assert_eq!(s.addition(&e1[1], &e1[0]), None);
        let e2 = [r(MooreN(1), 1), r(MooreN(2), 1), StripeLabel::sphere_row(1), r(MooreN1(2), 1), r(MooreN1(1), 1)];
        for i in 0..e2.len() {
            for j in 0..e2.len() {
                assert_eq!(s.addition(&e2[i], &e2[j]).is_some(), i < j, "{} {}", e2[i], e2[j]);
            }
        }
        let f1 = [c(MooreN3(1), 3), c(MooreN3(2), 3), StripeLabel::sphere_col(3)];
        let f2 = [StripeLabel::sphere_col(4), c(MooreN3(2), 4), c(MooreN3(1), 4)];
        for chain in [f1, f2] {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(s.addition(&chain[i], &chain[j]).is_some(), i < j);
                }
            }
        }
        assert!(s.linked(&r(CetaN2, 0)).is_none());
    }

    /// Every transfer used by a schema addition is well defined on residues.
    #[test]
    fn transfers_are_well_defined() {
        for v in [Variant::Integral, Variant::Local2, Variant::Local3] {
            let s = TransformSchema::new(v);
            let rows = all_labels(v, Side::Row, 2);
            let cols = all_labels(v, Side::Col, 2);
            let check = |src: CellRing, dst: CellRing, coef: i64| {
                let (Some(ms), Some(md)) = (src.size(), dst.size()) else { return };
                if ms == 0 || md == 0 {
                    return;
                }
                for k in 1..24 {
                    for a in 0..ms as i64 {
                        let x = dst.reduce(transfer(src, dst, coef * k, a));
                        let y = dst.reduce(transfer(src, dst, coef * k, a + ms as i64));
                        assert_eq!(x, y, "{src} -> {dst} coef {coef}");
                        for b in 0..ms as i64 {
                            let sum = dst.reduce(transfer(src, dst, coef * k, a + b));
                            let parts = dst.reduce(
                                transfer(src, dst, coef * k, a) + transfer(src, dst, coef * k, b),
                            );
                            assert_eq!(sum, parts);
                        }
                    }
                }
            };
            for (i, j, coef) in s.additions(&rows) {
                for col in &cols {
                    check(
                        cell_ring(v, &rows[i], col).unwrap(),
                        cell_ring(v, &rows[j], col).unwrap(),
                        coef,
                    );
                }
            }
            for (i, j, coef) in s.additions(&cols) {
                for row in &rows {
                    check(
                        cell_ring(v, row, &cols[i]).unwrap(),
                        cell_ring(v, row, &cols[j]).unwrap(),
                        coef,
                    );
                }
            }
        }
    }

    #[test]
    fn eta_cubed_is_twelve() {
        assert_eq!(Z(Z24).reduce(6 + transfer(Z(Z2), Z(Z24), 1, 1)), 18);
        assert_eq!(Z(Z12).reduce(5 + transfer(Z(Z2), Z(Z12), 6, 1)), 11);
    }
}
