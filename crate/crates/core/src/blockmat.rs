//! Striped block matrices: objects of the matrix problem and of its
//! localizations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::rings::{Modulus, RingError};
use crate::shape::{cell_ring_unchecked, CellRing, Generator, ShapeError, Side, StripeLabel, TransformSchema, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("stripe {0} declared twice")]
    DuplicateStripe(String),
    #[error("linked-stripe dim mismatch: {a} has {da}, {b} has {db}")]
    LinkedDim { a: String, da: usize, b: String, db: usize },
    #[error("entry out of ring: {value} at ({row}, {col}) in {ring}")]
    OutOfRing { row: usize, col: usize, value: i64, ring: CellRing },
    #[error("entry in zero cell at ({row}, {col})")]
    ZeroCell { row: usize, col: usize },
    #[error("index ({row}, {col}) out of range")]
    Index { row: usize, col: usize },
    #[error("variant mismatch: {0} vs {1}")]
    VariantMismatch(Variant, Variant),
    #[error("operation needs an integral matrix, got {0}")]
    NotIntegral(Variant),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// One stripe and its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stripe {
    pub label: StripeLabel,
    pub dim: usize,
}

/// A block matrix with stripes kept in table order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockMatrix {
    variant: Variant,
    rows: Vec<Stripe>,
    cols: Vec<Stripe>,
    entries: Vec<i64>,
    row_ring: Vec<usize>,
}

fn normalize_side(
    variant: Variant,
    side: Side,
    decl: &[(StripeLabel, usize)],
) -> Result<Vec<Stripe>, BlockError> {
    let schema = TransformSchema::new(variant);
    let mut out: Vec<Stripe> = Vec::new();
    for &(label, dim) in decl {
        if label.side != side {
            return Err(ShapeError::InvalidLabel { label: label.to_string(), side, variant }.into());
        }
        label.check(variant)?;
        if out.iter().any(|s| s.label == label) {
            return Err(BlockError::DuplicateStripe(label.to_string()));
        }
        out.push(Stripe { label, dim });
    }
    // linked partners are implied when absent
    let mut extra = Vec::new();
    for s in &out {
        if let Some(p) = schema.linked(&s.label) {
            match out.iter().find(|t| t.label == p) {
                Some(t) if t.dim != s.dim => {
                    return Err(BlockError::LinkedDim {
                        a: s.label.to_string(),
                        da: s.dim,
                        b: p.to_string(),
                        db: t.dim,
                    })
                }
                Some(_) => {}
                None => extra.push(Stripe { label: p, dim: s.dim }),
            }
        }
    }
    out.extend(extra);
    out.sort_by_key(|a| a.label);
    Ok(out)
}

fn offsets(stripes: &[Stripe]) -> Vec<usize> {
    let mut acc = 0;
    let mut out = Vec::with_capacity(stripes.len() + 1);
    for s in stripes {
        out.push(acc);
        acc += s.dim;
    }
    out.push(acc);
    out
}

impl BlockMatrix {
    /// The zero matrix of the given shape. Missing linked partners are added
    /// with the same dimension; present ones must agree.
    pub fn zeros(
        variant: Variant,
        rows: &[(StripeLabel, usize)],
        cols: &[(StripeLabel, usize)],
    ) -> Result<Self, BlockError> {
        let rows = normalize_side(variant, Side::Row, rows)?;
        let cols = normalize_side(variant, Side::Col, cols)?;
        Ok(Self::from_stripes(variant, rows, cols))
    }

    pub(crate) fn from_stripes(variant: Variant, rows: Vec<Stripe>, cols: Vec<Stripe>) -> Self {
        let nr: usize = rows.iter().map(|s| s.dim).sum();
        let nc: usize = cols.iter().map(|s| s.dim).sum();
        let mut row_ring = Vec::with_capacity(nr);
        for (k, s) in rows.iter().enumerate() {
            row_ring.extend(core::iter::repeat_n(k, s.dim));
        }
        BlockMatrix { variant, rows, cols, entries: vec![0; nr * nc], row_ring }
    }

    /// Builds a matrix from explicit entries; values must be canonical.
    pub fn from_entries(
        variant: Variant,
        rows: &[(StripeLabel, usize)],
        cols: &[(StripeLabel, usize)],
        entries: &[(usize, usize, i64)],
    ) -> Result<Self, BlockError> {
        let mut m = Self::zeros(variant, rows, cols)?;
        for &(i, j, v) in entries {
            m.set_checked(i, j, v)?;
        }
        Ok(m)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn row_stripes(&self) -> &[Stripe] {
        &self.rows
    }

    pub fn col_stripes(&self) -> &[Stripe] {
        &self.cols
    }

    pub fn stripes(&self, side: Side) -> &[Stripe] {
        match side {
            Side::Row => &self.rows,
            Side::Col => &self.cols,
        }
    }

    pub fn nrows(&self) -> usize {
        self.row_ring.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.iter().map(|s| s.dim).sum()
    }

    pub fn len(&self, side: Side) -> usize {
        match side {
            Side::Row => self.nrows(),
            Side::Col => self.ncols(),
        }
    }

    /// Label of every line of one side.
    pub fn line_labels(&self, side: Side) -> Vec<StripeLabel> {
        let mut out = Vec::new();
        for s in self.stripes(side) {
            out.extend(core::iter::repeat_n(s.label, s.dim));
        }
        out
    }

    /// Offset of the first line of each stripe, plus the total at the end.
    pub fn offsets(&self, side: Side) -> Vec<usize> {
        offsets(self.stripes(side))
    }

    /// Index of the stripe with `label`, if present.
    pub fn stripe_index(&self, label: &StripeLabel) -> Option<usize> {
        self.stripes(label.side).iter().position(|s| s.label == *label)
    }

    /// Global line indices of the stripe with `label` (empty if absent).
    pub fn lines_of(&self, label: &StripeLabel) -> core::ops::Range<usize> {
        match self.stripe_index(label) {
            Some(k) => {
                let off = self.offsets(label.side);
                off[k]..off[k + 1]
            }
            None => 0..0,
        }
    }

    pub fn ring(&self, i: usize, j: usize) -> CellRing {
        let row = &self.rows[self.row_ring[i]].label;
        let col = self.col_label(j);
        cell_ring_unchecked(self.variant, row, &col)
    }

    pub fn row_label(&self, i: usize) -> StripeLabel {
        self.rows[self.row_ring[i]].label
    }

    pub fn col_label(&self, j: usize) -> StripeLabel {
        let mut acc = 0;
        for s in &self.cols {
            if j < acc + s.dim {
                return s.label;
            }
            acc += s.dim;
        }
        panic!("column {j} out of range")
    }

    pub fn label(&self, side: Side, i: usize) -> StripeLabel {
        match side {
            Side::Row => self.row_label(i),
            Side::Col => self.col_label(i),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.ncols() + j]
    }

    /// Reduces `v` into the cell ring and stores it.
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        let r = self.ring(i, j).reduce(v);
        let nc = self.ncols();
        self.entries[i * nc + j] = r;
    }

    /// Stores a canonical value, rejecting anything outside the cell ring.
    pub fn set_checked(&mut self, i: usize, j: usize, v: i64) -> Result<(), BlockError> {
        if i >= self.nrows() || j >= self.ncols() {
            return Err(BlockError::Index { row: i, col: j });
        }
        let ring = self.ring(i, j);
        if ring == CellRing::Zero && v != 0 {
            return Err(BlockError::ZeroCell { row: i, col: j });
        }
        if !ring.contains(v) {
            return Err(BlockError::OutOfRing { row: i, col: j, value: v, ring });
        }
        let nc = self.ncols();
        self.entries[i * nc + j] = v;
        Ok(())
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|&&x| x != 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    /// Nonzero entries in row-major order.
    pub fn nonzero(&self) -> Vec<(usize, usize, i64)> {
        let nc = self.ncols();
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(k, &v)| (k / nc, k % nc, v))
            .collect()
    }

    /// Checks every invariant; constructed matrices always pass.
    pub fn validate(&self) -> Result<(), BlockError> {
        let schema = TransformSchema::new(self.variant);
        for side in [Side::Row, Side::Col] {
            for s in self.stripes(side) {
                s.label.check(self.variant)?;
                if let Some(p) = schema.linked(&s.label) {
                    let d = self.stripes(side).iter().find(|t| t.label == p).map(|t| t.dim);
                    if d != Some(s.dim) {
                        return Err(BlockError::LinkedDim {
                            a: s.label.to_string(),
                            da: s.dim,
                            b: p.to_string(),
                            db: d.unwrap_or(0),
                        });
                    }
                }
            }
        }
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let v = self.get(i, j);
                let ring = self.ring(i, j);
                if ring == CellRing::Zero && v != 0 {
                    return Err(BlockError::ZeroCell { row: i, col: j });
                }
                if !ring.contains(v) {
                    return Err(BlockError::OutOfRing { row: i, col: j, value: v, ring });
                }
            }
        }
        Ok(())
    }

    /// Stripe dimensions with dim-0 stripes dropped.
    pub fn shape(&self) -> (Vec<(StripeLabel, usize)>, Vec<(StripeLabel, usize)>) {
        let f = |v: &[Stripe]| v.iter().filter(|s| s.dim > 0).map(|s| (s.label, s.dim)).collect();
        (f(&self.rows), f(&self.cols))
    }

    pub fn same_shape(&self, other: &BlockMatrix) -> bool {
        self.variant == other.variant && self.shape() == other.shape()
    }

    /// Block-diagonal sum; rows of `self` precede those of `other` inside
    /// every stripe.
    pub fn direct_sum(&self, other: &BlockMatrix) -> Result<BlockMatrix, BlockError> {
        if self.variant != other.variant {
            return Err(BlockError::VariantMismatch(self.variant, other.variant));
        }
        let merge = |a: &[Stripe], b: &[Stripe]| {
            let mut out: Vec<Stripe> = a.to_vec();
            for s in b {
                match out.iter_mut().find(|t| t.label == s.label) {
                    Some(t) => t.dim += s.dim,
                    None => out.push(*s),
                }
            }
            out.sort_by_key(|x| x.label);
            out
        };
        let rows = merge(&self.rows, &other.rows);
        let cols = merge(&self.cols, &other.cols);
        let mut m = BlockMatrix::from_stripes(self.variant, rows, cols);
        let rmap_a = m.embed_map(Side::Row, self, 0);
        let rmap_b = m.embed_map(Side::Row, other, 1);
        let cmap_a = m.embed_map(Side::Col, self, 0);
        let cmap_b = m.embed_map(Side::Col, other, 1);
        for (i, j, v) in self.nonzero() {
            m.set(rmap_a[i], cmap_a[j], v);
        }
        for (i, j, v) in other.nonzero() {
            m.set(rmap_b[i], cmap_b[j], v);
        }
        Ok(m)
    }

    // position of a summand's lines inside a direct sum (`which` = 0 first, 1 second)
    fn embed_map(&self, side: Side, part: &BlockMatrix, which: usize) -> Vec<usize> {
        let off = self.offsets(side);
        let mut out = Vec::with_capacity(part.len(side));
        for s in part.stripes(side) {
            let k = self.stripe_index(&s.label).unwrap();
            let skip = if which == 0 {
                0
            } else {
                self.stripes(side)[k].dim - s.dim
            };
            out.extend((0..s.dim).map(|t| off[k] + skip + t));
        }
        out
    }

    /// Direct sum of many matrices; `variant` is used when the list is empty.
    pub fn direct_sum_all(variant: Variant, parts: &[BlockMatrix]) -> Result<BlockMatrix, BlockError> {
        let mut acc = BlockMatrix::from_stripes(variant, Vec::new(), Vec::new());
        for p in parts {
            acc = acc.direct_sum(p)?;
        }
        Ok(acc)
    }

    /// The submatrix on the given lines (ascending indices); stripes are
    /// kept with their new dimensions, so dim-0 stripes may appear.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> BlockMatrix {
        let count = |side: Side, idx: &[usize]| -> Vec<Stripe> {
            let off = self.offsets(side);
            self.stripes(side)
                .iter()
                .enumerate()
                .map(|(k, s)| Stripe {
                    label: s.label,
                    dim: idx.iter().filter(|&&i| i >= off[k] && i < off[k + 1]).count(),
                })
                .collect()
        };
        let mut m = BlockMatrix::from_stripes(self.variant, count(Side::Row, rows), count(Side::Col, cols));
        let mut rs = rows.to_vec();
        rs.sort_unstable();
        let mut cs = cols.to_vec();
        cs.sort_unstable();
        for (a, &i) in rs.iter().enumerate() {
            for (b, &j) in cs.iter().enumerate() {
                let v = self.get(i, j);
                if v != 0 {
                    m.set(a, b, v);
                }
            }
        }
        m
    }

    /// Drops dim-0 stripes.
    pub fn trimmed(&self) -> BlockMatrix {
        let mut m = self.clone();
        m.rows.retain(|s| s.dim > 0);
        m.cols.retain(|s| s.dim > 0);
        let mut row_ring = Vec::new();
        for (k, s) in m.rows.iter().enumerate() {
            row_ring.extend(core::iter::repeat_n(k, s.dim));
        }
        m.row_ring = row_ring;
        m
    }

    /// Adds missing stripes of `shape` as zero lines so that the matrix has
    /// at least those dimensions; existing lines keep their positions first.
    pub fn padded(&self, rows: &[(StripeLabel, usize)], cols: &[(StripeLabel, usize)]) -> Result<BlockMatrix, BlockError> {
        let have = self.shape();
        let deficit = |want: &[(StripeLabel, usize)], have: &[(StripeLabel, usize)]| -> Vec<(StripeLabel, usize)> {
            want.iter()
                .filter_map(|&(l, d)| {
                    let h = have.iter().find(|x| x.0 == l).map(|x| x.1).unwrap_or(0);
                    (d > h).then_some((l, d - h))
                })
                .collect()
        };
        let pad = BlockMatrix::zeros(self.variant, &deficit(rows, &have.0), &deficit(cols, &have.1))?;
        self.direct_sum(&pad)
    }

    /// Replaces the variant without touching entries; used by
    /// integral-ext once its integer block is gone.
    pub fn with_variant(&self, variant: Variant) -> Result<BlockMatrix, BlockError> {
        let mut m = self.clone();
        m.variant = variant;
        m.validate()?;
        Ok(m)
    }

    /// For each line of `self` (integral), its line in `localize(p)`.
    pub fn local_line_map(&self, p: u8, side: Side) -> Result<Vec<Option<usize>>, BlockError> {
        if !matches!(self.variant, Variant::Integral) {
            return Err(BlockError::NotIntegral(self.variant));
        }
        let (stripes, target) = local_stripes(self.stripes(side), p);
        let toff = offsets(&target);
        let mut used = vec![0usize; target.len()];
        let mut out = Vec::with_capacity(self.len(side));
        for s in &stripes {
            for _ in 0..s.dim {
                match local_target(&s.label, p) {
                    Some(t) => {
                        let k = target.iter().position(|x| x.label == t).unwrap();
                        out.push(Some(toff[k] + used[k]));
                        used[k] += 1;
                    }
                    None => out.push(None),
                }
            }
        }
        Ok(out)
    }

    /// Localization at 2 or 3.
    pub fn localize(&self, p: u8) -> Result<BlockMatrix, BlockError> {
        if self.variant != Variant::Integral {
            return Err(BlockError::NotIntegral(self.variant));
        }
        let variant = if p == 2 { Variant::Local2 } else { Variant::Local3 };
        let rows = local_stripes(&self.rows, p).1;
        let cols = local_stripes(&self.cols, p).1;
        let mut m = BlockMatrix::from_stripes(variant, rows, cols);
        let rmap = self.local_line_map(p, Side::Row)?;
        let cmap = self.local_line_map(p, Side::Col)?;
        for (i, j, v) in self.nonzero() {
            if let (Some(a), Some(b)) = (rmap[i], cmap[j]) {
                if m.ring(a, b) != CellRing::Zero {
                    m.set(a, b, v);
                }
            }
        }
        Ok(m)
    }

    /// Same shape, entries replaced (row-major, already reduced).
    pub(crate) fn with_raw_entries(&self, entries: Vec<i64>) -> BlockMatrix {
        debug_assert_eq!(entries.len(), self.entries.len());
        BlockMatrix { entries, ..self.clone() }
    }
}

/// The p-local image of a label (merging e₀/e′₀ at p = 3), or None if the
/// stripe is deleted.
pub fn local_target(label: &StripeLabel, p: u8) -> Option<StripeLabel> {
    use Generator::*;
    if p == 2 {
        return (!label.is_moore()).then_some(*label);
    }
    match (label.side, label.gen, label.slot) {
        (Side::Row, Sphere(0), _) | (Side::Row, CetaN2, 0) | (Side::Row, Ceta2N3, 0) => {
            Some(StripeLabel::sphere_row(0))
        }
        (Side::Row, Sphere(1), _) | (Side::Row, CetaN3, 1) => Some(StripeLabel::sphere_row(1)),
        (Side::Row, Sphere(_), _) => None,
        (Side::Row, CetaN2 | Ceta2N3 | CetaN3, _) => None,
        _ => Some(*label),
    }
}

fn local_stripes(stripes: &[Stripe], p: u8) -> (Vec<Stripe>, Vec<Stripe>) {
    let mut target: Vec<Stripe> = Vec::new();
    for s in stripes {
        if let Some(t) = local_target(&s.label, p) {
            match target.iter_mut().find(|x| x.label == t) {
                Some(x) => x.dim += s.dim,
                None => target.push(Stripe { label: t, dim: s.dim }),
            }
        }
    }
    target.sort_by_key(|a| a.label);
    (stripes.to_vec(), target)
}

impl fmt::Display for BlockMatrix {
    /// A compact grid: one line per row, `label | entries`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}x{}", self.variant, self.nrows(), self.ncols())?;
        let cols: Vec<String> = self.line_labels(Side::Col).iter().map(|l| l.to_string()).collect();
        writeln!(f, "  cols: {}", cols.join(" "))?;
        for i in 0..self.nrows() {
            write!(f, "  {:<14}|", self.row_label(i).to_string())?;
            for j in 0..self.ncols() {
                if self.ring(i, j) == CellRing::Zero {
                    write!(f, "  .")?;
                } else {
                    write!(f, " {:>2}", self.get(i, j))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The modulus of a residue cell, for callers that want `rings` values.
pub fn cell_modulus(ring: CellRing) -> Option<Modulus> {
    ring.modulus()
}

/// A diagnostic from [`BlockMatrix::parse_text`], 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(a)) => {
                out.push((a, &line[a..k]));
                start = None;
            }
            (false, None) => start = Some(k),
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push((a, &line[a..]));
    }
    out
}

impl BlockMatrix {
    /// Reads the line format: `variant`, then `row`/`col` declarations and
    /// `entry i j v` lines indexed over stripes in declaration order.
    pub fn parse_text(text: &str) -> Result<BlockMatrix, ParseError> {
        let err = |line: usize, col: usize, msg: String| ParseError { line, col: col + 1, msg };
        let mut variant: Option<Variant> = None;
        let mut decl: [Vec<(StripeLabel, usize, usize)>; 2] = [Vec::new(), Vec::new()];
        let mut entries: Vec<(usize, usize, usize, usize, usize, i64)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let n = n + 1;
            let body = raw.split('#').next().unwrap_or("");
            let t = tokens(body);
            let Some(&(c0, head)) = t.first() else { continue };
            let arity = |k: usize| -> Result<(), ParseError> {
                if t.len() != k + 1 {
                    let c = t.get(k + 1).map_or(body.len(), |x| x.0);
                    return Err(err(n, c, format!("`{head}` takes {k} arguments, found {}", t.len() - 1)));
                }
                Ok(())
            };
            let num = |k: usize| -> Result<i64, ParseError> {
                t[k].1.parse::<i64>().map_err(|_| err(n, t[k].0, format!("expected an integer, found `{}`", t[k].1)))
            };
            match head {
                "variant" => {
                    arity(1)?;
                    if variant.is_some() {
                        return Err(err(n, c0, "variant declared twice".to_string()));
                    }
                    variant = Some(t[1].1.parse().map_err(|_| err(n, t[1].0, format!("unknown variant `{}`", t[1].1)))?);
                }
                "row" | "col" => {
                    arity(2)?;
                    let v = variant.ok_or_else(|| err(n, c0, "declaration before `variant`".to_string()))?;
                    let side = if head == "row" { Side::Row } else { Side::Col };
                    let label = StripeLabel::parse(side, t[1].1)
                        .map_err(|_| err(n, t[1].0, format!("unknown label token `{}`", t[1].1)))?;
                    label.check(v).map_err(|e| err(n, t[1].0, e.to_string()))?;
                    let dim = num(2)?;
                    if dim < 0 {
                        return Err(err(n, t[2].0, "negative dimension".to_string()));
                    }
                    let d = &mut decl[side as usize];
                    if d.iter().any(|x| x.0 == label) {
                        return Err(err(n, t[1].0, format!("stripe {label} declared twice")));
                    }
                    d.push((label, dim as usize, n));
                }
                "entry" => {
                    arity(3)?;
                    if variant.is_none() {
                        return Err(err(n, c0, "entry before `variant`".to_string()));
                    }
                    let (i, j, v) = (num(1)?, num(2)?, num(3)?);
                    if i < 0 || j < 0 {
                        return Err(err(n, t[if i < 0 { 1 } else { 2 }].0, "negative index".to_string()));
                    }
                    entries.push((n, t[1].0, t[3].0, i as usize, j as usize, v));
                }
                _ => return Err(err(n, c0, format!("unknown directive `{head}`"))),
            }
        }
        let variant = variant.ok_or_else(|| err(1, 0, "missing `variant` line".to_string()))?;
        let rows: Vec<(StripeLabel, usize)> = decl[0].iter().map(|x| (x.0, x.1)).collect();
        let cols: Vec<(StripeLabel, usize)> = decl[1].iter().map(|x| (x.0, x.1)).collect();
        let mut m = BlockMatrix::zeros(variant, &rows, &cols).map_err(|e| {
            let line = decl.iter().flatten().map(|x| x.2).max().unwrap_or(1);
            err(line, 0, e.to_string())
        })?;
        // declaration index -> stored index
        let place = |d: &[(StripeLabel, usize, usize)], k: usize| -> Option<usize> {
            let mut acc = 0;
            for &(l, dim, _) in d {
                if k < acc + dim {
                    return Some(m.lines_of(&l).start + (k - acc));
                }
                acc += dim;
            }
            None
        };
        let mut fixed = Vec::with_capacity(entries.len());
        for &(n, c, cv, i, j, v) in &entries {
            let (Some(a), Some(b)) = (place(&decl[0], i), place(&decl[1], j)) else {
                return Err(err(n, c, format!("index ({i}, {j}) out of range")));
            };
            fixed.push((n, cv, a, b, v));
        }
        for (n, c, a, b, v) in fixed {
            m.set_checked(a, b, v).map_err(|e| err(n, c, e.to_string()))?;
        }
        Ok(m)
    }

    /// Canonical text: stripes in table order without dim-0 stripes,
    /// entries row-major.
    pub fn to_text(&self) -> String {
        let mut out = format!("variant {}\n", self.variant);
        let (rows, cols) = self.shape();
        for (l, d) in &rows {
            out.push_str(&format!("row {l} {d}\n"));
        }
        for (l, d) in &cols {
            out.push_str(&format!("col {l} {d}\n"));
        }
        for (i, j, v) in self.nonzero() {
            out.push_str(&format!("entry {i} {j} {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Generator::*;

    fn s(k: u8) -> StripeLabel {
        StripeLabel::sphere_row(k)
    }
    fn sc(k: u8) -> StripeLabel {
        StripeLabel::sphere_col(k)
    }

    #[test]
    fn smallest_instance() {
        let m = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 6)]).unwrap();
        assert_eq!(m.get(0, 0), 6);
        assert_eq!(m.ring(0, 0), CellRing::Z(Modulus::Z24));
        let e = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 24)]);
        assert!(matches!(e, Err(BlockError::OutOfRing { .. })));
        let z = BlockMatrix::from_entries(Variant::Integral, &[(s(3), 1)], &[(sc(3), 1)], &[(0, 0, 1)]);
        assert!(matches!(z, Err(BlockError::ZeroCell { .. })));
    }

    #[test]
    fn linked_partners() {
        let m = BlockMatrix::zeros(Variant::Local3, &[(StripeLabel::row(MooreN(1), 0), 2)], &[]).unwrap();
        assert_eq!(m.nrows(), 4);
        let bad = BlockMatrix::zeros(
            Variant::Local3,
            &[(StripeLabel::row(MooreN(1), 0), 2), (StripeLabel::row(MooreN(1), 1), 1)],
            &[],
        );
        assert!(matches!(bad, Err(BlockError::LinkedDim { .. })));
    }

    #[test]
    fn direct_sum_block_diagonal() {
        let a = BlockMatrix::from_entries(Variant::Local3, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 1)]).unwrap();
        let b = a.direct_sum(&a).unwrap();
        assert_eq!(b.entries(), &[1, 0, 0, 1]);
        let empty = BlockMatrix::zeros(Variant::Local3, &[], &[]).unwrap();
        assert_eq!(a.direct_sum(&empty).unwrap(), a);
    }

    #[test]
    fn localize_splits_entries() {
        let m = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 13)]).unwrap();
        assert_eq!(m.localize(2).unwrap().entries(), &[5]);
        assert_eq!(m.localize(3).unwrap().entries(), &[1]);
        let m = BlockMatrix::from_entries(Variant::Integral, &[(s(2), 1)], &[(sc(3), 1)], &[(0, 0, 1)]).unwrap();
        let l3 = m.localize(3).unwrap();
        assert_eq!((l3.nrows(), l3.ncols()), (0, 1));
    }

    #[test]
    fn localize3_merges_e0() {
        let m = BlockMatrix::from_entries(
            Variant::Integral,
            &[(s(0), 1), (StripeLabel::row(CetaN2, 0), 1), (s(1), 1), (StripeLabel::row(CetaN3, 1), 1)],
            &[(sc(3), 1), (sc(4), 1)],
            &[(0, 0, 4), (2, 0, 5), (1, 1, 7), (4, 1, 2)],
        )
        .unwrap();
        let l = m.localize(3).unwrap();
        assert_eq!(l.row_stripes(), &[Stripe { label: s(0), dim: 2 }, Stripe { label: s(1), dim: 2 }]);
        assert_eq!(l.entries(), &[1, 0, 2, 0, 0, 1, 0, 2]);
        let l2 = m.localize(2).unwrap();
        assert_eq!(l2.nrows(), 6);
    }

    #[test]
    fn submatrix_keeps_stripes() {
        let m = BlockMatrix::from_entries(
            Variant::Integral,
            &[(s(0), 2)],
            &[(sc(3), 2)],
            &[(0, 0, 1), (1, 1, 2)],
        )
        .unwrap();
        let sub = m.submatrix(&[1], &[1]);
        assert_eq!(sub.entries(), &[2]);
    }

    #[test]
    fn text_smallest_and_errors() {
        let m = BlockMatrix::parse_text("variant integral\nrow S+0 1\ncol S+3 1\nentry 0 0 6\n").unwrap();
        assert_eq!(m.get(0, 0), 6);
        let e = BlockMatrix::parse_text("variant integral\nrow S+0 1\ncol S+3 1\nentry 0 0 24\n").unwrap_err();
        assert_eq!((e.line, e.col), (4, 11));
        assert!(e.msg.contains("entry out of ring"), "{e}");
        let e = BlockMatrix::parse_text("variant integral\nrow S+9 1\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 5));
        let e = BlockMatrix::parse_text("variant integral\nrow S+3 1\ncol S+3 1\nentry 0 0 1 # zero cell\n").unwrap_err();
        assert!(e.msg.contains("zero cell"), "{e}");
        let e = BlockMatrix::parse_text("variant local3\nrow M3^1[n]@0 1\nrow M3^1[n]@1 2\n").unwrap_err();
        assert!(e.msg.contains("linked"), "{e}");
    }

    #[test]
    fn text_declaration_order_and_round_trip() {
        let text = "# cols first in file\nvariant integral\nrow S+1 1\nrow S+0 1\ncol S+4 1\ncol S+3 1\nentry 0 0 5\nentry 1 1 9\n";
        let m = BlockMatrix::parse_text(text).unwrap();
        // S+1 x S+4 holds 5; S+0 x S+3 holds 9
        assert_eq!(m.get(m.lines_of(&s(1)).start, m.lines_of(&sc(4)).start), 5);
        assert_eq!(m.get(0, 0), 9);
        let back = BlockMatrix::parse_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), m.to_text());
    }
}
