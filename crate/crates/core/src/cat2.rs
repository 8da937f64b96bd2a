//! The finite list of 2-local indecomposables and decomposition of 2-local
//! matrices into them.

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
pub enum CatalogError {
    #[error("unknown catalog item `{0}`")]
    UnknownItem(String),
    #[error("parameter {name}={value} not admissible for {item}")]
    BadParameter { item: String, name: &'static str, value: u32 },
    #[error("matrix is not 2-local")]
    NotLocal2,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Block(#[from] BlockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Row {
    S(u8),
    Cn2,
    C2n3,
    Cn3,
}

impl Row {
    fn label(self) -> StripeLabel {
        match self {
            Row::S(k) => StripeLabel::sphere_row(k),
            Row::Cn2 => StripeLabel::row(Generator::CetaN2, 0),
            Row::C2n3 => StripeLabel::row(Generator::Ceta2N3, 0),
            Row::Cn3 => StripeLabel::row(Generator::CetaN3, 1),
        }
    }

    fn is_sphere(self) -> bool {
        matches!(self, Row::S(_))
    }
}

/// Cell content: zero, η or η² (the value 1 of a Z/2 cell), v or ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum C {
    O,
    E,
    V,
    W,
}

struct Layout {
    name: &'static str,
    rows: &'static [(Row, [C; 2])],
    /// columns S+3 and S+4 present
    cols: [bool; 2],
}

use C::{E, O, V, W};
use Row::{Cn2, Cn3, C2n3, S};

const LAYOUTS: [Layout; 34] = [
    Layout { name: "C_v^{n+4}", rows: &[(S(0), [V, O])], cols: [true, false] },
    Layout { name: "C_w^{n+5}", rows: &[(S(1), [O, W])], cols: [false, true] },
    Layout { name: "C_eta^{n+2}", rows: &[(Cn2, [O, O])], cols: [false, false] },
    Layout { name: "C_eta^{n+3}", rows: &[(Cn3, [O, O])], cols: [false, false] },
    Layout { name: "C_eta2^{n+3}", rows: &[(C2n3, [O, O])], cols: [false, false] },
    Layout { name: "C_eta^{n+4}", rows: &[(S(2), [E, O])], cols: [true, false] },
    Layout { name: "C_eta^{n+5}", rows: &[(S(3), [O, E])], cols: [false, true] },
    Layout { name: "C_eta2^{n+4}", rows: &[(S(1), [E, O])], cols: [true, false] },
    Layout { name: "C_eta2^{n+5}", rows: &[(S(2), [O, E])], cols: [false, true] },
    Layout { name: "(eta.v.eta)_0^1", rows: &[(Cn2, [V, O]), (S(2), [E, O])], cols: [true, false] },
    Layout { name: "(eta.w.eta)_1^1", rows: &[(Cn3, [O, W]), (S(3), [O, E])], cols: [false, true] },
    Layout { name: "(eta2.v.eta2)_0^1", rows: &[(C2n3, [V, O]), (S(1), [E, O])], cols: [true, false] },
    Layout { name: "(eta2.v.eta)_0^1", rows: &[(C2n3, [V, O]), (S(2), [E, O])], cols: [true, false] },
    Layout { name: "(eta.v.eta2)_0^1", rows: &[(Cn2, [V, O]), (S(1), [E, O])], cols: [true, false] },
    Layout { name: "(eta.w.eta2)_1^1", rows: &[(Cn3, [O, W]), (S(2), [O, E])], cols: [false, true] },
    Layout { name: "(v.eta2)_0^0", rows: &[(S(0), [V, O]), (S(1), [E, O])], cols: [true, false] },
    Layout { name: "(w.eta2)_1^0", rows: &[(S(1), [O, W]), (S(2), [O, E])], cols: [false, true] },
    Layout { name: "(v.eta)_0^0", rows: &[(S(0), [V, O]), (S(2), [E, O])], cols: [true, false] },
    Layout { name: "(w.eta)_1^0", rows: &[(S(1), [O, W]), (S(3), [O, E])], cols: [false, true] },
    Layout { name: "(eta.v)_0^1", rows: &[(Cn2, [V, O])], cols: [true, false] },
    Layout { name: "(eta2.w.eta2)_1^1", rows: &[(S(1), [E, W]), (S(2), [O, E])], cols: [true, true] },
    Layout { name: "(eta2.v)_0^1", rows: &[(C2n3, [V, O])], cols: [true, false] },
    Layout { name: "(eta.w)_1^1", rows: &[(Cn3, [O, W])], cols: [false, true] },
    Layout { name: "(v.eta2.w)_0^0", rows: &[(S(0), [V, O]), (S(1), [E, W])], cols: [true, true] },
    Layout { name: "(eta2.w.eta)_1^1", rows: &[(S(1), [E, W]), (S(3), [O, E])], cols: [true, true] },
    Layout { name: "(v.eta2.w.eta)_0^0", rows: &[(S(0), [V, O]), (S(1), [E, W]), (S(3), [O, E])], cols: [true, true] },
    Layout { name: "(v.eta2.w.eta2)_0^0", rows: &[(S(0), [V, O]), (S(1), [E, W]), (S(2), [O, E])], cols: [true, true] },
    Layout { name: "(eta.v.eta2.w)_0^0", rows: &[(Cn2, [V, O]), (S(1), [E, W])], cols: [true, true] },
    Layout { name: "(eta2.v.eta2.w)_0^0", rows: &[(C2n3, [V, O]), (S(1), [E, W])], cols: [true, true] },
    Layout { name: "(eta2.w)_1^1", rows: &[(S(1), [E, W])], cols: [true, true] },
    Layout { name: "(eta.v.eta2.w.eta)_0^0", rows: &[(Cn2, [V, O]), (S(1), [E, W]), (S(3), [O, E])], cols: [true, true] },
    Layout { name: "(eta2.v.eta2.w.eta)_0^0", rows: &[(C2n3, [V, O]), (S(1), [E, W]), (S(3), [O, E])], cols: [true, true] },
    Layout { name: "(eta.v.eta2.w.eta2)_0^0", rows: &[(Cn2, [V, O]), (S(1), [E, W]), (S(2), [O, E])], cols: [true, true] },
    Layout { name: "(eta2.v.eta2.w.eta2)_0^0", rows: &[(C2n3, [V, O]), (S(1), [E, W]), (S(2), [O, E])], cols: [true, true] },
];

/// Number of listed items (spheres excluded).
pub const CATALOG_LEN: usize = LAYOUTS.len();

/// One item of the list with its parameters; `index` counts from 1 in
/// list order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CatalogItem2 {
    pub index: u8,
    pub v: Option<u32>,
    pub w: Option<u32>,
}

fn layout(index: u8) -> Option<&'static Layout> {
    LAYOUTS.get((index as usize).checked_sub(1)?)
}

fn param_row(s: &Layout, c: C) -> Option<Row> {
    s.rows.iter().find(|(_, cells)| cells.contains(&c)).map(|(r, _)| *r)
}

/// Listed values of v or ω for a parameter sitting on `row`.
fn param_values(row: Row) -> &'static [u32] {
    if row.is_sphere() {
        &[1, 2, 4]
    } else {
        &[1, 2]
    }
}

impl CatalogItem2 {
    pub fn new(index: u8, v: Option<u32>, w: Option<u32>) -> Result<Self, CatalogError> {
        let s = layout(index).ok_or_else(|| CatalogError::UnknownItem(format!("#{index}")))?;
        let item = CatalogItem2 { index, v, w };
        for (c, val, name) in [(V, v, "v"), (W, w, "w")] {
            match (param_row(s, c), val) {
                (Some(r), Some(x)) => {
                    if !param_values(r).contains(&x) {
                        return Err(CatalogError::BadParameter { item: s.name.to_string(), name, value: x });
                    }
                }
                (None, None) => {}
                (Some(_), None) | (None, Some(_)) => {
                    return Err(CatalogError::BadParameter { item: s.name.to_string(), name, value: val.unwrap_or(0) });
                }
            }
        }
        Ok(item)
    }

    pub fn name(&self) -> &'static str {
        layout(self.index).unwrap().name
    }

    /// The local2 matrix as listed: η and η² are 1, v and ω at their cells.
    pub fn matrix(&self) -> BlockMatrix {
        let s = layout(self.index).unwrap();
        let rows: Vec<(StripeLabel, usize)> = s.rows.iter().map(|(r, _)| (r.label(), 1)).collect();
        let mut cols = Vec::new();
        for (k, &present) in s.cols.iter().enumerate() {
            if present {
                cols.push((StripeLabel::sphere_col(3 + k as u8), 1));
            }
        }
        let mut m = BlockMatrix::zeros(Variant::Local2, &rows, &cols).expect("catalog shapes are valid");
        for (r, cells) in s.rows {
            let i = m.lines_of(&r.label()).start;
            for (k, c) in cells.iter().enumerate() {
                let x = match c {
                    O => continue,
                    E => 1,
                    V => self.v.unwrap() as i64,
                    W => self.w.unwrap() as i64,
                };
                let j = m.lines_of(&StripeLabel::sphere_col(3 + k as u8)).start;
                m.set(i, j, x);
            }
        }
        m
    }

    /// Stripes that carry a nonzero entry or a cone, for connection
    /// bookkeeping.
    pub fn row_labels(&self) -> Vec<StripeLabel> {
        layout(self.index).unwrap().rows.iter().map(|(r, _)| r.label()).collect()
    }

    pub fn col_labels(&self) -> Vec<StripeLabel> {
        let s = layout(self.index).unwrap();
        (0..2).filter(|&k| s.cols[k]).map(|k| StripeLabel::sphere_col(3 + k as u8)).collect()
    }

    /// Row stripe holding v (resp. ω), if any.
    pub fn v_row(&self) -> Option<StripeLabel> {
        param_row(layout(self.index).unwrap(), V).map(Row::label)
    }

    pub fn w_row(&self) -> Option<StripeLabel> {
        param_row(layout(self.index).unwrap(), W).map(Row::label)
    }

    /// True for the bare cones.
    pub fn is_bare_cone(&self) -> bool {
        (3..=5).contains(&self.index)
    }
}

impl fmt::Display for CatalogItem2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match (self.v, self.w) {
            (Some(v), Some(w)) => write!(f, "{{v={v},w={w}}}"),
            (Some(v), None) => write!(f, "{{v={v}}}"),
            (None, Some(w)) => write!(f, "{{w={w}}}"),
            (None, None) => Ok(()),
        }
    }
}

impl FromStr for CatalogItem2 {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || CatalogError::UnknownItem(s.to_string());
        let (name, params) = match s.rfind('{') {
            Some(k) if s.ends_with('}') && s[k..].contains('=') => (&s[..k], &s[k + 1..s.len() - 1]),
            _ => (s, ""),
        };
        let index = LAYOUTS.iter().position(|sp| sp.name == name).ok_or_else(bad)? as u8 + 1;
        let mut v = None;
        let mut w = None;
        for p in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, x) = p.split_once('=').ok_or_else(bad)?;
            let x: u32 = x.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "v" => v = Some(x),
                "w" => w = Some(x),
                _ => return Err(bad()),
            }
        }
        CatalogItem2::new(index, v, w)
    }
}

/// Every item at every listed parameter value, in list order.
pub fn enumerate_catalog() -> Vec<CatalogItem2> {
    let mut out = Vec::new();
    for (k, s) in LAYOUTS.iter().enumerate() {
        let index = k as u8 + 1;
        let vs: Vec<Option<u32>> = match param_row(s, V) {
            Some(r) => param_values(r).iter().map(|&x| Some(x)).collect(),
            None => vec![None],
        };
        let ws: Vec<Option<u32>> = match param_row(s, W) {
            Some(r) => param_values(r).iter().map(|&x| Some(x)).collect(),
            None => vec![None],
        };
        for &v in &vs {
            for &w in &ws {
                out.push(CatalogItem2 { index, v, w });
            }
        }
    }
    out
}

/// A summand of a 2-local matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Piece2 {
    /// A sphere: one line with no entries.
    Unit(StripeLabel),
    Item(CatalogItem2),
    /// An indecomposable matching no listed item.
    Unknown(BlockMatrix),
}

impl fmt::Display for Piece2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece2::Unit(l) => match l.gen {
                Generator::Sphere(k) => write!(f, "S^{{n+{k}}}"),
                _ => write!(f, "unit {l}"),
            },
            Piece2::Item(i) => i.fmt(f),
            Piece2::Unknown(m) => write!(f, "unknown[{}x{}]", m.nrows(), m.ncols()),
        }
    }
}

impl Piece2 {
    pub fn matrix(&self) -> BlockMatrix {
        match self {
            Piece2::Unit(l) => {
                let (r, c): (Vec<_>, Vec<_>) = if l.side == Side::Row { (vec![(*l, 1)], vec![]) } else { (vec![], vec![(*l, 1)]) };
                BlockMatrix::zeros(Variant::Local2, &r, &c).expect("unit shapes are valid")
            }
            Piece2::Item(i) => i.matrix(),
            Piece2::Unknown(m) => m.clone(),
        }
    }
}

/// Canonical forms of all listed items, for lookup.
pub struct Catalog2 {
    table: BTreeMap<Vec<i64>, Vec<(BlockMatrix, CatalogItem2)>>,
    budget: Budget,
}

impl Catalog2 {
    pub fn new(budget: &Budget) -> Result<Self, CatalogError> {
        let schema = TransformSchema::new(Variant::Local2);
        let mut table: BTreeMap<Vec<i64>, Vec<(BlockMatrix, CatalogItem2)>> = BTreeMap::new();
        for item in enumerate_catalog() {
            let c = canonical_form(&item.matrix(), &schema, budget)?;
            let bucket = table.entry(c.entries().to_vec()).or_default();
            if !bucket.iter().any(|(m, _)| *m == c) {
                bucket.push((c, item));
            }
        }
        Ok(Catalog2 { table, budget: *budget })
    }

    /// The first listed item whose canonical form is `canonical`.
    pub fn lookup(&self, canonical: &BlockMatrix) -> Option<CatalogItem2> {
        self.table
            .get(canonical.entries())?
            .iter()
            .find(|(m, _)| m == canonical)
            .map(|(_, i)| *i)
    }

    /// Splits a 2-local matrix into units and listed items, sorted.
    pub fn decompose2(&self, a: &BlockMatrix) -> Result<Vec<Piece2>, CatalogError> {
        if a.variant() != Variant::Local2 {
            return Err(CatalogError::NotLocal2);
        }
        let schema = TransformSchema::new(Variant::Local2);
        let mut out = Vec::new();
        for s in transform::decompose_detailed(a, &schema, &self.budget, 0)? {
            let m = &s.canonical;
            if m.nrows() + m.ncols() == 1 {
                let l = if m.nrows() == 1 { m.row_label(0) } else { m.col_label(0) };
                out.push(Piece2::Unit(l));
                continue;
            }
            match self.lookup(m) {
                Some(i) => out.push(Piece2::Item(i)),
                None => out.push(Piece2::Unknown(m.clone())),
            }
        }
        out.sort();
        Ok(out)
    }
}

/// One-shot [`Catalog2::decompose2`].
pub fn decompose2(a: &BlockMatrix, budget: &Budget) -> Result<Vec<Piece2>, CatalogError> {
    Catalog2::new(budget)?.decompose2(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_matrices() {
        let c: CatalogItem2 = "C_eta^{n+4}".parse().unwrap();
        let m = c.matrix();
        assert_eq!(m.row_label(0), StripeLabel::sphere_row(2));
        assert_eq!(m.nonzero(), vec![(0, 0, 1)]);
        let x: CatalogItem2 = "(v.eta2.w)_0^0{v=1,w=1}".parse().unwrap();
        assert_eq!(x.matrix().entries(), &[1, 0, 1, 1]);
        let y: CatalogItem2 = "(eta2.w)_1^1{w=2}".parse().unwrap();
        assert_eq!(y.matrix().entries(), &[1, 2]);
        assert_eq!(y.to_string(), "(eta2.w)_1^1{w=2}");
    }

    #[test]
    fn parameter_sets() {
        assert!("(eta.v)_0^1{v=4}".parse::<CatalogItem2>().is_err());
        assert!("(v.eta)_0^0{v=4}".parse::<CatalogItem2>().is_ok());
        assert!("(v.eta)_0^0".parse::<CatalogItem2>().is_err());
        assert!("C_eta^{n+2}{v=1}".parse::<CatalogItem2>().is_err());
        let all = enumerate_catalog();
        assert!(all.iter().all(|i| i.matrix().validate().is_ok()));
        assert_eq!(all.iter().filter(|i| i.index == 24).count(), 9);
    }

    #[test]
    fn odd_value_scales_to_one() {
        let m = BlockMatrix::from_entries(
            Variant::Local2,
            &[(StripeLabel::sphere_row(0), 1)],
            &[(StripeLabel::sphere_col(3), 1)],
            &[(0, 0, 3)],
        )
        .unwrap();
        let got = decompose2(&m, &Budget::default()).unwrap();
        assert_eq!(got, vec![Piece2::Item("C_v^{n+4}{v=1}".parse().unwrap())]);
    }
}
