//! Integral classes from their two localizations: merging, the congruence
//! test, diagonalization of the integer block, and naming of indecomposable
//! congruence classes against List* and List**.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::blockmat::{BlockError, BlockMatrix};
use crate::cat2::{Catalog2, CatalogError, CatalogItem2, Piece2};
use crate::chains3::{decompose3, realize_string_lines, ChainError, Letter, Object3, StringObject};
use crate::rings::{crt_combine, split_three, Modulus, Residue};
use crate::shape::{CellRing, Generator, Side, StripeLabel, TransformSchema, Variant};
use crate::transform::{apply, Budget, SearchError, StepKind, TransformError, TransformStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CongruenceError {
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("cannot reconcile local parts: {0}")]
    Reconcile(String),
    #[error("integer block entry {0} has 2-torsion")]
    TwoTorsion(i64),
    #[error("expected {expected} matrix, got {got}")]
    Variant { expected: &'static str, got: Variant },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn search_budget(e: &SearchError) -> bool {
    matches!(e, SearchError::BudgetExceeded { .. } | SearchError::TooLarge { .. })
}

impl CongruenceError {
    /// True when the failure is an exhausted search budget.
    pub fn is_budget(&self) -> bool {
        match self {
            CongruenceError::Search(e) => search_budget(e),
            CongruenceError::Chain(ChainError::Search(e)) => search_budget(e),
            CongruenceError::Catalog(CatalogError::Search(e)) => search_budget(e),
            _ => false,
        }
    }
}

fn budget_error(states: usize) -> CongruenceError {
    CongruenceError::Search(SearchError::BudgetExceeded { states })
}

// ---------------------------------------------------------------------------
// the set 𝕃

/// Stripe classes through which 2- and 3-local pieces connect: e₀ (any of
/// Sⁿ, Cη^{n+2}, Cη²^{n+3} rows), e′₀ (S^{n+1}, Cη^{n+3}), and the S+3 and
/// S+4 columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    E0,
    E1,
    S3,
    S4,
}

impl Anchor {
    pub const ALL: [Anchor; 4] = [Anchor::E0, Anchor::E1, Anchor::S3, Anchor::S4];

    fn idx(self) -> usize {
        self as usize
    }

    /// Class of an integral or 2-local stripe.
    pub fn of_label(l: &StripeLabel) -> Option<Anchor> {
        use Generator::*;
        match (l.side, l.gen, l.slot) {
            (Side::Row, Sphere(0), _) | (Side::Row, CetaN2, 0) | (Side::Row, Ceta2N3, 0) => Some(Anchor::E0),
            (Side::Row, Sphere(1), _) | (Side::Row, CetaN3, 1) => Some(Anchor::E1),
            (Side::Col, Sphere(3), _) => Some(Anchor::S3),
            (Side::Col, Sphere(4), _) => Some(Anchor::S4),
            _ => None,
        }
    }

    pub fn of_letter(x: Letter) -> Option<Anchor> {
        match x {
            Letter::E0 => Some(Anchor::E0),
            Letter::Ep0 => Some(Anchor::E1),
            Letter::F0 => Some(Anchor::S3),
            Letter::Fp0 => Some(Anchor::S4),
            _ => None,
        }
    }

    /// The sphere stripe of this class.
    pub fn unit_label(self) -> StripeLabel {
        match self {
            Anchor::E0 => StripeLabel::sphere_row(0),
            Anchor::E1 => StripeLabel::sphere_row(1),
            Anchor::S3 => StripeLabel::sphere_col(3),
            Anchor::S4 => StripeLabel::sphere_col(4),
        }
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Anchor::E0 => "e0",
            Anchor::E1 => "e'0",
            Anchor::S3 => "S3",
            Anchor::S4 => "S4",
        })
    }
}

// ---------------------------------------------------------------------------
// families of 2-local items

/// Which `Z(·)` or `C` symbol a listed 2-local item stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `Z(e₀, v, ω)`
    Zvw,
    /// `Z(e₀, S¹, v)`
    ZS1v,
    /// `Z(e₀, v)`
    Zv,
    /// `Z(e′₀, ω)`
    Zpw,
    /// `Z(ω)`
    Zw,
    /// `Cη^{n+4}`
    Ce4,
    /// `Cη²^{n+4}`
    Ch4,
    /// `Cη^{n+5}`
    Ce5,
    /// `Cη²^{n+5}`
    Ch5,
    /// the three bare cones
    Cone,
}

pub fn family(item: &CatalogItem2) -> Family {
    match item.index {
        24 | 26..=29 | 31..=34 => Family::Zvw,
        12 | 14 | 16 => Family::ZS1v,
        1 | 10 | 13 | 18 | 20 | 22 => Family::Zv,
        2 | 11 | 15 | 17 | 19 | 23 => Family::Zpw,
        21 | 25 | 30 => Family::Zw,
        6 => Family::Ce4,
        8 => Family::Ch4,
        7 => Family::Ce5,
        9 => Family::Ch5,
        _ => Family::Cone,
    }
}

/// The printed representative of a Z/24 (`z24`) or Z/12 cell value with
/// 2-primary part `two` and a flag for a nonzero 3-primary part.
pub fn representative(z24: bool, two: u32, three: bool) -> i64 {
    let table: &[((u32, bool), i64)] = if z24 {
        &[((1, false), 9), ((2, false), 6), ((4, false), 12), ((1, true), 1), ((4, true), 4), ((2, true), 10), ((0, true), 8)]
    } else {
        &[((1, false), 3), ((2, false), 6), ((1, true), 1), ((2, true), 2), ((0, true), 4)]
    };
    if let Some(&(_, x)) = table.iter().find(|(k, _)| *k == (two, three)) {
        return x;
    }
    let (m2, m) = if z24 { (Modulus::Z8, 24) } else { (Modulus::Z4, 12) };
    crt_combine(Residue::new(two as i64, m2), Residue::new(three as i64, Modulus::Z3))
        .map(|r| r.value() as i64)
        .unwrap_or(0)
        % m
}

// ---------------------------------------------------------------------------
// assembling integral matrices from local pieces

fn combine(ring: CellRing, u: i64, v: i64) -> Result<i64, CongruenceError> {
    let bad = |m: String| Err(CongruenceError::Reconcile(m));
    match ring {
        CellRing::Zero => {
            if u != 0 || v.rem_euclid(3) != 0 {
                return bad("entry in a zero cell".to_string());
            }
            Ok(0)
        }
        CellRing::Z(Modulus::Z24) => Ok(crt_combine(Residue::new(u, Modulus::Z8), Residue::new(v, Modulus::Z3)).unwrap().value() as i64),
        CellRing::Z(Modulus::Z12) => Ok(crt_combine(Residue::new(u, Modulus::Z4), Residue::new(v, Modulus::Z3)).unwrap().value() as i64),
        CellRing::Z(Modulus::Z2) => {
            if v.rem_euclid(3) != 0 {
                return bad("3-local entry in a Z/2 cell".to_string());
            }
            Ok(u.rem_euclid(2))
        }
        CellRing::Z(Modulus::Z3) => {
            if u != 0 {
                return bad("2-local entry in a Z/3 cell".to_string());
            }
            Ok(v.rem_euclid(3))
        }
        r => bad(format!("unexpected cell ring {r}")),
    }
}

/// Lines collected in insertion order, laid out by stripe at build time.
#[derive(Debug, Default)]
struct Assembly {
    rows: Vec<StripeLabel>,
    cols: Vec<StripeLabel>,
    two: Vec<(usize, usize, i64)>,
    three: Vec<(usize, usize, i64)>,
    whole: Vec<(usize, usize, i64)>,
}

impl Assembly {
    fn line(&mut self, l: StripeLabel) -> usize {
        let v = if l.side == Side::Row { &mut self.rows } else { &mut self.cols };
        v.push(l);
        v.len() - 1
    }

    fn layout(labels: &[StripeLabel]) -> (Vec<(StripeLabel, usize)>, Vec<(StripeLabel, usize)>) {
        let mut count: BTreeMap<StripeLabel, usize> = BTreeMap::new();
        let mut rank = Vec::with_capacity(labels.len());
        for l in labels {
            let c = count.entry(*l).or_insert(0);
            rank.push((*l, *c));
            *c += 1;
        }
        (count.into_iter().collect(), rank)
    }

    fn build(&self, variant: Variant) -> Result<BlockMatrix, CongruenceError> {
        let (rshape, rrank) = Self::layout(&self.rows);
        let (cshape, crank) = Self::layout(&self.cols);
        let mut m = BlockMatrix::zeros(variant, &rshape, &cshape)?;
        let rpos: Vec<usize> = rrank.iter().map(|(l, k)| m.lines_of(l).start + k).collect();
        let cpos: Vec<usize> = crank.iter().map(|(l, k)| m.lines_of(l).start + k).collect();
        let mut acc: BTreeMap<(usize, usize), (i64, i64)> = BTreeMap::new();
        for &(i, j, x) in &self.two {
            acc.entry((rpos[i], cpos[j])).or_default().0 += x;
        }
        for &(i, j, x) in &self.three {
            acc.entry((rpos[i], cpos[j])).or_default().1 += x;
        }
        for &(i, j, x) in &self.whole {
            let (a, b) = (rpos[i], cpos[j]);
            let e = acc.entry((a, b)).or_default();
            match m.ring(a, b) {
                CellRing::Z(Modulus::Z24) | CellRing::Z(Modulus::Z12) => {
                    e.0 += x;
                    e.1 += x;
                }
                CellRing::Z(Modulus::Z3) => e.1 += x,
                _ => e.0 += x,
            }
        }
        for ((i, j), (u, v)) in acc {
            let val = match m.ring(i, j) {
                CellRing::Zint => u,
                r => combine(r, u, v)?,
            };
            m.set_checked(i, j, val)?;
        }
        Ok(m)
    }
}

fn fit(a: &BlockMatrix, target: &BlockMatrix) -> Result<BlockMatrix, CongruenceError> {
    if a.variant() != target.variant() {
        return Err(CongruenceError::Reconcile(format!("expected {}, got {}", target.variant(), a.variant())));
    }
    let (tr, tc) = target.trimmed().shape();
    let p = a.trimmed().padded(&tr, &tc)?;
    if p.trimmed().shape() != (tr, tc) {
        return Err(CongruenceError::Reconcile(format!("{} part does not fit the target shape", a.variant())));
    }
    Ok(p)
}

/// Combines a 2-local and a 3-local matrix into the integral matrix of the
/// given shape: `u[v]` on Z/24 and Z/12 cells, `u` on Z/2 cells, `v` on Z/3
/// cells.
pub fn merge(
    a2: &BlockMatrix,
    a3: &BlockMatrix,
    rows: &[(StripeLabel, usize)],
    cols: &[(StripeLabel, usize)],
) -> Result<BlockMatrix, CongruenceError> {
    let mut out = BlockMatrix::zeros(Variant::Integral, rows, cols)?;
    let p2 = fit(a2, &out.localize(2)?)?;
    let p3 = fit(a3, &out.localize(3)?)?;
    let r2 = out.local_line_map(2, Side::Row)?;
    let c2 = out.local_line_map(2, Side::Col)?;
    let r3 = out.local_line_map(3, Side::Row)?;
    let c3 = out.local_line_map(3, Side::Col)?;
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            let ring = out.ring(i, j);
            if ring == CellRing::Zero {
                continue;
            }
            let u = match (r2[i], c2[j]) {
                (Some(a), Some(b)) => p2.get(a, b),
                _ => 0,
            };
            let v = match (r3[i], c3[j]) {
                (Some(a), Some(b)) => p3.get(a, b),
                _ => 0,
            };
            out.set(i, j, combine(ring, u, v)?);
        }
    }
    Ok(out)
}

/// [`merge`] onto the shape of an existing integral matrix.
pub fn merge_like(a2: &BlockMatrix, a3: &BlockMatrix, like: &BlockMatrix) -> Result<BlockMatrix, CongruenceError> {
    let (r, c) = like.shape();
    merge(a2, a3, &r, &c)
}

// ---------------------------------------------------------------------------
// the integer block of integral-ext matrices

/// Result of [`diagonalize_integral_block`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagonalized {
    pub matrix: BlockMatrix,
    /// 3-power diagonal of the (S+3, S+3) block, nonincreasing, zeros last.
    pub diagonal: Vec<i64>,
    /// Odd coprime-to-3 factors split off the diagonal, one per entry.
    pub cofactors: Vec<i64>,
}

fn step(m: &mut BlockMatrix, side: Side, kind: StepKind, sch: &TransformSchema) -> Result<(), CongruenceError> {
    *m = apply(m, &TransformStep { side, kind }, sch)?;
    Ok(())
}

/// Smith form of the integer block by admissible steps, split of the odd
/// coprime-to-3 parts, sorting, and the eliminations each λ allows.
pub fn diagonalize_integral_block(a: &BlockMatrix) -> Result<Diagonalized, CongruenceError> {
    if a.variant() != Variant::IntegralExt {
        return Err(CongruenceError::Variant { expected: "integral-ext", got: a.variant() });
    }
    let sch = TransformSchema::new(Variant::IntegralExt);
    let rr = a.lines_of(&StripeLabel::sphere_row(3));
    let cr = a.lines_of(&StripeLabel::sphere_col(3));
    let (r0, c0, k, l) = (rr.start, cr.start, rr.len(), cr.len());
    let mut m = a.clone();
    let g = |m: &BlockMatrix, i: usize, j: usize| m.get(r0 + i, c0 + j);
    for t in 0..k.min(l) {
        loop {
            let mut best: Option<(usize, usize, i64)> = None;
            for i in t..k {
                for j in t..l {
                    let x = g(&m, i, j).abs();
                    if x != 0 && best.is_none_or(|b| x < b.2) {
                        best = Some((i, j, x));
                    }
                }
            }
            let Some((pi, pj, _)) = best else { break };
            if pi != t {
                step(&mut m, Side::Row, StepKind::Swap { a: r0 + t, b: r0 + pi }, &sch)?;
            }
            if pj != t {
                step(&mut m, Side::Col, StepKind::Swap { a: c0 + t, b: c0 + pj }, &sch)?;
            }
            let p = g(&m, t, t);
            let mut clean = true;
            for i in t + 1..k {
                let q = g(&m, i, t) / p;
                if q != 0 {
                    step(&mut m, Side::Row, StepKind::Add { src: r0 + t, dst: r0 + i, k: -q }, &sch)?;
                }
                clean &= g(&m, i, t) == 0;
            }
            for j in t + 1..l {
                let q = g(&m, t, j) / p;
                if q != 0 {
                    step(&mut m, Side::Col, StepKind::Add { src: c0 + t, dst: c0 + j, k: -q }, &sch)?;
                }
                clean &= g(&m, t, j) == 0;
            }
            if !clean {
                continue;
            }
            let odd = (t + 1..k).find(|&i| (t + 1..l).any(|j| g(&m, i, j) % p != 0));
            match odd {
                Some(i) => step(&mut m, Side::Row, StepKind::Add { src: r0 + i, dst: r0 + t, k: 1 }, &sch)?,
                None => break,
            }
        }
        if g(&m, t, t) < 0 {
            step(&mut m, Side::Row, StepKind::Scale { line: r0 + t, unit: -1 }, &sch)?;
        }
    }
    let n = k.min(l);
    let mut cofactors = Vec::new();
    for t in 0..n {
        let d = g(&m, t, t);
        if d == 0 {
            continue;
        }
        let (r, q) = split_three(d);
        if q % 2 == 0 {
            return Err(CongruenceError::TwoTorsion(d));
        }
        if q != 1 {
            cofactors.push(q);
        }
        m.set(r0 + t, c0 + t, 3i64.pow(r));
    }
    // nonincreasing, zeros last
    let key = |d: i64| if d == 0 { 0 } else { d };
    for t in 0..n {
        let mut best = t;
        for s in t + 1..n {
            if key(g(&m, s, s)) > key(g(&m, best, best)) {
                best = s;
            }
        }
        if best != t {
            step(&mut m, Side::Row, StepKind::Swap { a: r0 + t, b: r0 + best }, &sch)?;
            step(&mut m, Side::Col, StepKind::Swap { a: c0 + t, b: c0 + best }, &sch)?;
        }
    }
    let diagonal: Vec<i64> = (0..n).map(|t| g(&m, t, t)).collect();
    for (t, &d) in diagonal.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let (ri, cj) = (r0 + t, c0 + t);
        for j in 0..m.ncols() {
            if j != cj && (d == 1 || m.ring(ri, j) == CellRing::Z(Modulus::Z2)) {
                m.set(ri, j, 0);
            }
        }
        for i in 0..m.nrows() {
            if i == ri {
                continue;
            }
            let x = m.get(i, cj);
            let y = match m.ring(i, cj) {
                _ if d == 1 => 0,
                CellRing::Z(Modulus::Z2) => 0,
                CellRing::Z(Modulus::Z24) | CellRing::Z(Modulus::Z12) => {
                    let z24 = m.ring(i, cj) == CellRing::Z(Modulus::Z24);
                    let two = if z24 { Modulus::Z8 } else { Modulus::Z4 };
                    crt_combine(Residue::new(0, two), Residue::new(x, Modulus::Z3)).unwrap().value() as i64
                }
                _ => x,
            };
            m.set(i, cj, y);
        }
    }
    Ok(Diagonalized { matrix: m, diagonal, cofactors })
}

fn prime_powers(mut q: i64) -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    let mut p = 3;
    while p * p <= q {
        let mut e = 0;
        while q % p == 0 {
            q /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 2;
    }
    if q > 1 {
        out.push((q, 1));
    }
    out
}

// ---------------------------------------------------------------------------
// classes and connection graphs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKind {
    Elementary,
    Moore,
    Local3String,
    Local3Band,
    ListStar(u8),
    ListStarStar,
    Unclassified,
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassKind::Elementary => "elementary",
            ClassKind::Moore => "moore",
            ClassKind::Local3String => "local3-string",
            ClassKind::Local3Band => "local3-band",
            ClassKind::ListStar(_) => "liststar",
            ClassKind::ListStarStar => "liststarstar",
            ClassKind::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphNode {
    /// A 2-local piece; `v3`/`w3` mark a 3-local unit sitting on its v or
    /// ω cell. `family` is None for pieces missing from the list.
    Two { piece: Piece2, family: Option<Family>, v3: bool, w3: bool },
    /// `anchors` lists the classes by which the string meets 2-local
    /// nodes; anchors on unit spheres or bare cones are left out.
    Three { word: StringObject, anchors: Vec<Anchor> },
}

/// Nodes are the pieces of one component; each edge joins a 3-local node
/// to a 2-local node sharing a stripe of the given class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConnectionGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize, Anchor)>,
}

impl ConnectionGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v || e.1 == v).count()
    }

    fn adjacent(&self, v: usize) -> impl Iterator<Item = (usize, Anchor)> + '_ {
        self.edges.iter().filter_map(move |&(a, b, x)| {
            if a == v {
                Some((b, x))
            } else if b == v {
                Some((a, x))
            } else {
                None
            }
        })
    }
}

/// The closed configuration that never splits off: a `Z(e₀,v,ω)`
/// node joined by S4 to an `M(S4, e′₀)` and by e₀ to an `M(e₀, e′₀)`, the
/// two strings joined again away from that node.
pub fn has_closed_string(g: &ConnectionGraph) -> bool {
    let anchors = |v: usize| match &g.nodes[v] {
        GraphNode::Three { anchors, .. } => Some(anchors.clone()),
        _ => None,
    };
    for (z, node) in g.nodes.iter().enumerate() {
        if !matches!(node, GraphNode::Two { family: Some(Family::Zvw), .. }) {
            continue;
        }
        let six: Vec<usize> = g
            .adjacent(z)
            .filter(|&(v, x)| x == Anchor::S4 && anchors(v) == Some(vec![Anchor::E1, Anchor::S4]))
            .map(|p| p.0)
            .collect();
        let five: Vec<usize> = g
            .adjacent(z)
            .filter(|&(v, x)| x == Anchor::E0 && anchors(v) == Some(vec![Anchor::E0, Anchor::E1]))
            .map(|p| p.0)
            .collect();
        for &a in &six {
            for &b in &five {
                if a != b && reachable_avoiding(g, a, b, z) {
                    return true;
                }
            }
        }
    }
    false
}

fn reachable_avoiding(g: &ConnectionGraph, from: usize, to: usize, avoid: usize) -> bool {
    let mut seen = vec![false; g.nodes.len()];
    let mut stack = vec![from];
    seen[from] = true;
    seen[avoid] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for (w, _) in g.adjacent(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// A named indecomposable congruence class with its local constituents
/// and an integral matrix realizing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceClass {
    pub kind: ClassKind,
    pub name: String,
    pub params: String,
    pub parts2: Vec<Piece2>,
    pub parts3: Vec<Object3>,
    pub graph: ConnectionGraph,
    pub matrix: BlockMatrix,
}

impl CongruenceClass {
    fn key(&self) -> (ClassKind, &str, &str) {
        (self.kind, &self.name, &self.params)
    }
}

impl fmt::Display for CongruenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.name)?;
        if !self.params.is_empty() {
            write!(f, " {}", self.params)?;
        }
        Ok(())
    }
}

fn sphere_name(l: &StripeLabel) -> String {
    match (l.side, l.gen) {
        (Side::Row, Generator::Sphere(k)) => format!("S^{{n+{k}}}"),
        (Side::Col, Generator::Sphere(k)) => format!("S^{{n+{}}}", k + 1),
        _ => l.to_string(),
    }
}

fn host_name(l: &StripeLabel) -> String {
    use Generator::*;
    match l.gen {
        Sphere(k) => format!("S^{{n+{k}}}"),
        CetaN2 => "C_eta^{n+2}".to_string(),
        Ceta2N3 => "C_eta2^{n+3}".to_string(),
        CetaN3 => "C_eta^{n+3}".to_string(),
        _ => l.to_string(),
    }
}

// ---------------------------------------------------------------------------
// List* patterns

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sub {
    Any,
    No,
    Yes,
}

impl Sub {
    fn parse(s: &str) -> Sub {
        match s.trim() {
            "0" => Sub::No,
            "1" => Sub::Yes,
            "*" => Sub::Any,
            x => panic!("bad subscript {x}"),
        }
    }

    fn admits(self, b: bool) -> bool {
        match self {
            Sub::Any => true,
            Sub::No => !b,
            Sub::Yes => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PNode {
    Two { fams: Vec<Family>, v: Sub, w: Sub },
    M(Vec<Anchor>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PGraph {
    nodes: Vec<PNode>,
    edges: BTreeMap<(usize, usize), u8>,
}

// `-` one connection, `=` a double connection; `name:Type` declares a node
// that later segments (split by `;`) refer to by name; `{a|b}` expands.
const LIST_STAR: &[(u8, &[&str])] = &[
    (1, &["Zvw(*,*)"]),
    (2, &["Zvw(1,0) - {M(S1)|M(S1,e0)|M(S4)|M(S4,S3)}"]),
    (3, &["Zvw(1,0) = M(S1,S4)"]),
    (4, &[
        "M(S1) - Zvw(1,0) - M(S4)",
        "M(S1) - Zvw(1,0) - M(S4,S3)",
        "M(S1,e0) - Zvw(1,0) - M(S4)",
        "M(e0) - Zvw(1,0) - M(S3)",
        "M(e0) - Zvw(1,0) - M(S3,S4)",
        "M(S3,e0) - Zvw(1,0) - M(S3)",
    ]),
    (5, &["M(S1) - Zvw(1,0) - M(S4,S3) - C4", "Zvw(1,0) - M(S4,S3) - C4"]),
    (6, &["M(S1) - Zvw(1,0) - M(S4,S3) - Ch4 - M(S1)"]),
    (7, &["Zvw(0,1) - {M(S3)|M(e0,e1)|M(e0)|M(S3,S4)}"]),
    (8, &["Zvw(0,1) = M(S3,e0)"]),
    (9, &["M(e0) - Zvw(0,1) - M(S3)", "M(e0) - Zvw(0,1) - M(S3,S4)", "M(e0,S3) - Zvw(0,1) - M(S3)"]),
    (10, &[
        "M(S3) - Zvw(0,1) - M(e0,S1) - Ch4 - M(S3)",
        "M(S3) - Zvw(0,1) - M(e0,S1) - Ch4",
        "Zvw(0,1) - M(e0,S1) - Ch4",
    ]),
    (11, &["M(e0) - Zvw(0,1) - M(S3,S4) - C5", "Zvw(0,1) - M(S3,S4) - C5"]),
    (12, &["Zvw(0,0) - {M(S1)|M(S4)|M(e0)|M(S3)}"]),
    (13, &["Zvw(0,0) = {M(S3,S4)|M(S1,S4)|M(S3,e0)|M(S1,e0)}"]),
    (14, &[
        "M(S3) - Zvw(0,0) - M(S4)",
        "M(e0) - Zvw(0,0) - M(S3)",
        "M(e0) - Zvw(0,0) - M(S4)",
        "M(S1) - Zvw(0,0) - M(S3)",
        "M(S1) - Zvw(0,0) - M(S4)",
        "M(e0) - Zvw(0,0) - M(S1)",
    ]),
    (15, &[
        "M(e0,S1) = Zvw(0,0) - {M(S3)|M(S3,e0)|M(S4)|M(S4,e1)}",
        "M(e0,S3) = Zvw(0,0) - {M(S1)|M(S4)}",
        "M(S1,S4) = Zvw(0,0) - M(e0)",
        "M(S3,S4) = Zvw(0,0) - {M(S1)|M(S1,S4)}",
    ]),
    (16, &["M(e0,S1) = Zvw(0,0) = M(S3,S4)", "M(e0,S3) = Zvw(0,0) = M(S1,S4)"]),
    (17, &[
        "M(S1,e0) = z:Zvw(0,0); z - M(S3); z - {M(S4)|M(S4,e1)}",
        "M(S1,e0) = z:Zvw(0,0); z - M(S3,e0); z - M(S4)",
        "M(S4,S3) = z:Zvw(0,0); z - M(e0); z - {M(S1)|M(S1,S4)}",
        "M(S4,S3) = z:Zvw(0,0); z - M(e0,S3); z - M(S1)",
        "M(S1,S4) = z:Zvw(0,0); z - M(e0); z - M(S3)",
        "M(S3,e0) = z:Zvw(0,0); z - M(S1); z - M(S4)",
    ]),
    (18, &[
        "z:Zvw(0,0); z - M(e0); z - M(S1); z - M(S4)",
        "z:Zvw(0,0); z - M(e0); z - M(S1); z - M(S3)",
        "z:Zvw(0,0); z - M(e0); z - M(S4); z - M(S3)",
        "z:Zvw(0,0); z - M(S1); z - M(S4); z - M(S3)",
    ]),
    (19, &["z:Zvw(0,0); z - M(e0); z - M(S1); z - M(S3); z - M(S4)"]),
    (20, &[
        "M(e0,S1) = z:Zvw(0,0); z - M(S3); z - M(S4,S1) - Ch4 - M(S3)",
        "M(e0,S1) = z:Zvw(0,0); z - M(S3); z - M(S4,S1) - Ch4",
        "M(e0,S1) = z:Zvw(0,0); z - M(S4,S1) - Ch4",
    ]),
    (21, &["M(S3,S4) = z:Zvw(0,0); z - M(e0); z - M(S1,S4) - C5", "M(S3,S4) = z:Zvw(0,0); z - M(S1,S4) - C5"]),
    (22, &["M(S3,S4) = z:Zvw(0,0); z - M(S1); z - M(e0,S3) - Ch4 - M(S1)"]),
    (23, &["M(S3,S4) = z:Zvw(0,0); z - M(S1); z - M(e0,S3) - C4", "M(S3,S4) = z:Zvw(0,0); z - M(e0,S3) - C4"]),
    (24, &["ZS1v(*)"]),
    (25, &["ZS1v(1) - {M(S1)|M(S1,e0)|M(S1,S4)}"]),
    (26, &["ZS1v(1) - M(S1,S4) - C5"]),
    (27, &["ZS1v(0) - {M(S1)|M(S3,S4)|M(S1,S4)|M(e0)|M(S3)}"]),
    (28, &["ZS1v(0) = {M(e0,S3)|M(e0,S1)}"]),
    (29, &[
        "{M(S3)|M(S4,S3)} - ZS1v(0) - {M(S1,S4)|M(S1)}",
        "M(e0) - ZS1v(0) - {M(S1)|M(S1,S4)|M(S3)|M(S3,S4)}",
    ]),
    (30, &["M(S1,e0) = ZS1v(0) - {M(S3)|M(S3,S4)}", "M(S3,e0) = ZS1v(0) - M(S1)"]),
    (31, &["{M(S3)|M(S4,S3)} - z:ZS1v(0); z - M(e0); z - {M(S1)|M(S1,S4)}"]),
    (32, &["M(S3) - z:ZS1v(0); z - M(e0); z - M(S1,S4) - C5", "M(S3) - z:ZS1v(0); z - M(S1,S4) - C5"]),
    (33, &["{C5|Zpw(0)} - M(S4,S3) - ZS1v(0) = M(e0,S1)"]),
    (34, &["{C5|Zpw(0)} - M(S4,S3) - z:ZS1v(0); z - M(e0); z - M(S1)"]),
    (35, &["{M(e1)|M(e0,e1)} - Zpw(0) - M(S4,S3) - ZS1v(0) = M(e0,S1)"]),
    (36, &[
        "M(e1) - Zpw(0) - M(S4,S3) - z:ZS1v(0); z - M(e0); z - M(S1)",
        "M(e1) - Zpw(0) - M(S4,S3) - z:ZS1v(0); z - M(S1)",
    ]),
    (37, &[
        "C5 - M(S4,S3) - z:ZS1v(0); z - M(e0); z - M(S1,S4) - C5",
        "C5 - M(S4,S3) - z:ZS1v(0); z - M(S1,S4) - C5",
        "z:ZS1v(0); z - M(e0); z - M(S1,S4) - C5",
        "ZS1v(0) - M(S1,S4) - C5",
    ]),
    (38, &["{C5|Zpw(0)} - M(S4,S3) - ZS1v(0) - {M(e0)|M(S1)}"]),
    (39, &["Zw(*)"]),
    (40, &["Zw(1) - M(S3)"]),
    (41, &["Zw(0) - {M(S1)|M(S1,e0)|M(S3)|M(S3,e0)|M(S4)}"]),
    (42, &["Zw(0) = {M(S1,S4)|M(S3,S4)}"]),
    (43, &["{M(S1)|M(e0,S1)} - Zw(0) - {M(S3)|M(S3,e0)|M(S4)}", "M(S4) - Zw(0) - {M(S3)|M(S3,e0)}"]),
    (44, &["M(S1) - Zw(0) = M(S3,S4)", "M(S3) - Zw(0) = M(S4,S1)", "M(e0,S3) - Zw(0) = M(S4,S1)"]),
    (45, &["{M(S1)|M(e0,S1)} - z:Zw(0); z - {M(S3)|M(S3,e0)}; z - M(S4)"]),
    (46, &[
        "M(S3) - Zv(0) - M(e0,S1) - z:Zw(0); z - M(S3); z - M(S4)",
        "Zv(0) - M(e0,S1) - z:Zw(0); z - M(S3); z - M(S4)",
        "M(S3) - Zv(0) - M(e0,S1) - Zw(0) - M(S3)",
        "Zv(0) - M(e0,S1) - Zw(0) - M(S4)",
        "Zv(0) - M(e0,S1) - Zw(0)",
    ]),
    (47, &["M(S3) - Zv(0) - M(e0,S1) - Zw(0) = M(S3,S4)", "Zv(0) - M(e0,S1) - Zw(0) = M(S3,S4)"]),
    (48, &["Zv(*)"]),
    (49, &["Zv(0) - {M(e0)|M(e0,e1)|M(S3)|M(S3,S4)}"]),
    (50, &["Zv(0) = M(e0,S3)"]),
    (51, &["{M(e0)|M(e1,e0)} - Zv(0) - {M(S3)|M(S3,S4)}"]),
    (52, &["M(e0) - Zv(0) - M(S3,S4) - {Zpw(0)|C5}", "Zv(0) - M(S3,S4) - {Zpw(0)|C5}"]),
    (53, &["M(e0) - Zv(0) - M(S3,S4) - Zpw(0) - M(e1)", "Zv(0) - M(S3,S4) - Zpw(0) - M(e1)"]),
    (54, &["a:Zv(0) - M(e0,e1) - b:Zpw(0); a - M(S3,S4) - b"]),
    (55, &[
        "M(S3) - Zv(0) - M(e0,e1) - Zpw(0) - M(S4)",
        "Zv(0) - M(e0,e1) - Zpw(0) - M(S4)",
        "M(S3) - Zv(0) - M(e0,e1) - Zpw(0)",
    ]),
    (56, &["{M(S3)|M(S4,S3)} - Zv(0) - M(e0,S1) - Ch4"]),
    (57, &["M(e1,e0) - Zv(0) - M(S3,S4) - C5"]),
    (58, &["C5 - M(S4,S3) - Zv(0) - M(e0,S1) - Ch4"]),
    (59, &["Zv(0) - M(e0,e1) - {Zpw(0)|Ch4}"]),
    (60, &["M(S3) - Zv(0) - M(e0,S1) - Ch4 - {M(S3)|M(S3,S4)}", "M(S4,S3) - Zv(0) - M(e0,S1) - Ch4 - M(S3,S4)"]),
    (61, &["{M(S3)|M(S4,S3)} - Zv(0) - M(e0,S1) - Ch4 - M(S3,S4) - C5"]),
    (62, &["C5 - M(S4,S3) - Zv(0) - M(e0,S1) - Ch4 - M(S3,S4) - C5"]),
    (63, &["Zpw(*)"]),
    (64, &["Zpw(0) - {M(e1)|M(e1,e0)|M(S4)|M(S4,S3)}"]),
    (65, &["Zpw(0) = M(e1,S4)"]),
    (66, &["{M(e1)|M(e0,e1)} - Zpw(0) - {M(S4)|M(S4,S3)}"]),
    (67, &["{M(e1)|M(e0,e1)} - Zpw(0) - M(S4,S3) - C4", "Zpw(0) - M(S4,S3) - C4"]),
    (68, &["{M(e1)|M(e0,e1)} - Zpw(0) - M(S4,S3) - Ch4 - {M(S1)|M(S1,e0)}"]),
    (69, &["C4", "C5"]),
    (70, &["Ch4 - {M(S1)|M(S3)}", "Ce4 - M(S3)", "C5 - M(S4)"]),
    (71, &["M(S1) - Ch4 - M(S3)"]),
    (72, &["M(S1) - Ch4 - M(S3,S4) - C5", "{M(S3)|M(e0,S3)} - Ch4 - M(S1,S4) - C5"]),
    (73, &["C5 - M(S4,S1) - Ch4 - M(S3,S4) - C5"]),
    (74, &["Ch4 - {M(S1,S4)|M(S3,S4)} - C5"]),
];

fn expand(s: &str) -> Vec<String> {
    let Some(open) = s.find('{') else { return vec![s.to_string()] };
    let close = open + s[open..].find('}').expect("unbalanced pattern");
    let mut out = Vec::new();
    for alt in s[open + 1..close].split('|') {
        out.extend(expand(&format!("{}{}{}", &s[..open], alt, &s[close + 1..])));
    }
    out
}

fn parse_anchor(s: &str) -> Anchor {
    match s.trim() {
        "e0" => Anchor::E0,
        "e1" | "S1" => Anchor::E1,
        "S3" => Anchor::S3,
        "S4" => Anchor::S4,
        x => panic!("bad anchor {x}"),
    }
}

fn parse_node(tok: &str) -> PNode {
    let (head, args) = match tok.find('(') {
        Some(k) => (&tok[..k], tok[k + 1..tok.len() - 1].split(',').collect::<Vec<_>>()),
        None => (tok, Vec::new()),
    };
    let two = |fams: &[Family], v: Sub, w: Sub| PNode::Two { fams: fams.to_vec(), v, w };
    use Family::*;
    match head {
        "Zvw" => two(&[Zvw], Sub::parse(args[0]), Sub::parse(args[1])),
        "ZS1v" => two(&[ZS1v], Sub::parse(args[0]), Sub::Any),
        "Zv" => two(&[Zv], Sub::parse(args[0]), Sub::Any),
        "Zpw" => two(&[Zpw], Sub::Any, Sub::parse(args[0])),
        "Zw" => two(&[Zw], Sub::Any, Sub::parse(args[0])),
        "C4" => two(&[Ce4, Ch4], Sub::Any, Sub::Any),
        "C5" => two(&[Ce5, Ch5], Sub::Any, Sub::Any),
        "Ce4" => two(&[Ce4], Sub::Any, Sub::Any),
        "Ch4" => two(&[Ch4], Sub::Any, Sub::Any),
        "Ce5" => two(&[Ce5], Sub::Any, Sub::Any),
        "Ch5" => two(&[Ch5], Sub::Any, Sub::Any),
        "M" => {
            let mut a: Vec<Anchor> = args.iter().map(|s| parse_anchor(s)).collect();
            a.sort();
            PNode::M(a)
        }
        x => panic!("bad node {x}"),
    }
}

fn parse_pattern(s: &str) -> PGraph {
    let mut g = PGraph::default();
    let mut names: BTreeMap<&str, usize> = BTreeMap::new();
    for seg in s.split(';') {
        let toks: Vec<&str> = seg.split_whitespace().collect();
        let mut prev: Option<usize> = None;
        let mut conn = 0u8;
        for (k, tok) in toks.iter().enumerate() {
            if k % 2 == 1 {
                conn = match *tok {
                    "-" => 1,
                    "=" => 2,
                    x => panic!("bad connector {x}"),
                };
                continue;
            }
            let id = if let Some((name, ty)) = tok.split_once(':') {
                g.nodes.push(parse_node(ty));
                names.insert(name, g.nodes.len() - 1);
                g.nodes.len() - 1
            } else if let Some(&id) = names.get(tok) {
                id
            } else {
                g.nodes.push(parse_node(tok));
                g.nodes.len() - 1
            };
            if let Some(p) = prev {
                *g.edges.entry((p.min(id), p.max(id))).or_insert(0) += conn;
            }
            prev = Some(id);
        }
    }
    g
}

fn compile_patterns() -> Vec<(u8, PGraph)> {
    let mut out = Vec::new();
    for &(idx, alts) in LIST_STAR {
        for a in alts {
            for e in expand(a) {
                out.push((idx, parse_pattern(&e)));
            }
        }
    }
    out
}

fn node_admits(p: &PNode, c: &GraphNode) -> bool {
    match (p, c) {
        (PNode::Two { fams, v, w }, GraphNode::Two { family: Some(f), v3, w3, .. }) => {
            fams.contains(f) && v.admits(*v3) && w.admits(*w3)
        }
        (PNode::M(a), GraphNode::Three { anchors, .. }) => a == anchors,
        _ => false,
    }
}

fn graph_matches(p: &PGraph, g: &ConnectionGraph) -> bool {
    if p.nodes.len() != g.nodes.len() {
        return false;
    }
    let mut ge: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    for &(a, b, _) in &g.edges {
        *ge.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }
    let pe_total: u32 = p.edges.values().map(|&x| x as u32).sum();
    let ge_total: u32 = ge.values().map(|&x| x as u32).sum();
    if pe_total != ge_total {
        return false;
    }
    let n = p.nodes.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(
        i: usize,
        p: &PGraph,
        g: &ConnectionGraph,
        ge: &BTreeMap<(usize, usize), u8>,
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if i == p.nodes.len() {
            return true;
        }
        for c in 0..g.nodes.len() {
            if used[c] || !node_admits(&p.nodes[i], &g.nodes[c]) {
                continue;
            }
            let ok = (0..i).all(|j| {
                let pm = p.edges.get(&(j.min(i), j.max(i))).copied().unwrap_or(0);
                let d = map[j];
                let gm = ge.get(&(d.min(c), d.max(c))).copied().unwrap_or(0);
                pm == gm
            });
            if !ok {
                continue;
            }
            map[i] = c;
            used[c] = true;
            if rec(i + 1, p, g, ge, map, used) {
                return true;
            }
            used[c] = false;
        }
        false
    }
    rec(0, p, g, &ge, &mut map, &mut used)
}

// ---------------------------------------------------------------------------
// constituents

#[derive(Debug, Clone)]
struct TwoNode {
    piece: Piece2,
    mat: BlockMatrix,
    counts: [usize; 4],
}

impl TwoNode {
    fn new(piece: Piece2) -> Self {
        let mat = piece.matrix();
        let mut counts = [0; 4];
        for side in [Side::Row, Side::Col] {
            for l in mat.line_labels(side) {
                if let Some(x) = Anchor::of_label(&l) {
                    counts[x.idx()] += 1;
                }
            }
        }
        TwoNode { piece, mat, counts }
    }

    fn item(&self) -> Option<CatalogItem2> {
        match self.piece {
            Piece2::Item(i) => Some(i),
            _ => None,
        }
    }

    fn is_cone(&self) -> bool {
        self.item().is_some_and(|i| i.is_bare_cone())
    }

    fn hosts(&self) -> Vec<(Anchor, Side, usize)> {
        let mut out = Vec::new();
        for side in [Side::Row, Side::Col] {
            for (i, l) in self.mat.line_labels(side).iter().enumerate() {
                if let Some(x) = Anchor::of_label(l) {
                    out.push((x, side, i));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct ThreeNode {
    obj: StringObject,
    /// letter position and class of every 𝕃 letter
    anchors: Vec<(usize, Anchor)>,
    counts: [usize; 4],
}

impl ThreeNode {
    fn new(obj: StringObject) -> Self {
        let anchors: Vec<(usize, Anchor)> =
            obj.word().anchors().into_iter().map(|(i, x)| (i, Anchor::of_letter(x).unwrap())).collect();
        let mut counts = [0; 4];
        for &(_, x) in &anchors {
            counts[x.idx()] += 1;
        }
        ThreeNode { obj, anchors, counts }
    }

    fn letters(&self) -> &[Letter] {
        &self.obj.word().letters
    }

    fn exponents_in(&self, conv: &BTreeSet<u32>) -> BTreeSet<u32> {
        self.letters()
            .iter()
            .filter_map(|x| match x {
                Letter::F(r) | Letter::Ft(r) if conv.contains(r) => Some(*r),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Host {
    Line { node: usize, side: Side, line: usize },
    Unit { class: Anchor, k: usize },
}

struct Group {
    twos: Vec<usize>,
    threes: Vec<usize>,
    units: [usize; 4],
}

fn need(twos: &[&TwoNode], threes: &[&ThreeNode]) -> [usize; 4] {
    let mut out = [0; 4];
    for x in 0..4 {
        let l: usize = twos.iter().map(|t| t.counts[x]).sum();
        let a: usize = threes.iter().map(|t| t.counts[x]).sum();
        out[x] = a.saturating_sub(l);
    }
    out
}

const PARTITION_STEPS: usize = 2_000_000;
const ARRANGEMENT_CAP: usize = 50_000;

struct PartSearch<'a> {
    twos: &'a [TwoNode],
    threes: &'a [ThreeNode],
    units: [usize; 4],
    best: Vec<u64>,
    best_n: usize,
    steps: usize,
}

impl PartSearch<'_> {
    fn n2(&self) -> usize {
        self.twos.len()
    }

    fn members(&self, g: u64) -> (Vec<&TwoNode>, Vec<&ThreeNode>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..64 {
            if g >> k & 1 == 1 {
                if k < self.n2() {
                    a.push(&self.twos[k]);
                } else {
                    b.push(&self.threes[k - self.n2()]);
                }
            }
        }
        (a, b)
    }

    fn admissible(&self, g: u64) -> bool {
        if g.count_ones() == 1 {
            return true;
        }
        let (a, b) = self.members(g);
        if a.is_empty() || b.is_empty() {
            return false;
        }
        let shares = |x: &[usize; 4], y: &[usize; 4]| (0..4).any(|k| x[k] > 0 && y[k] > 0);
        a.iter().all(|t| b.iter().any(|s| shares(&t.counts, &s.counts)))
            && b.iter().all(|s| a.iter().any(|t| shares(&t.counts, &s.counts)))
    }

    fn rec(&mut self, remaining: u64, groups: &mut Vec<u64>, used: [usize; 4]) -> Result<(), CongruenceError> {
        self.steps += 1;
        if self.steps > PARTITION_STEPS {
            return Err(budget_error(self.steps));
        }
        if remaining == 0 {
            if groups.len() > self.best_n {
                self.best_n = groups.len();
                self.best = groups.clone();
            }
            return Ok(());
        }
        if groups.len() + remaining.count_ones() as usize <= self.best_n {
            return Ok(());
        }
        let e = remaining.trailing_zeros() as usize;
        let rest = remaining & !(1u64 << e);
        let idx: Vec<usize> = (0..64).filter(|&k| rest >> k & 1 == 1).collect();
        for size in 0..=idx.len() {
            let mut comb: Vec<usize> = (0..size).collect();
            loop {
                let mut g = 1u64 << e;
                for &c in &comb {
                    g |= 1u64 << idx[c];
                }
                if self.admissible(g) {
                    let (a, b) = self.members(g);
                    let nd = need(&a, &b);
                    let mut u = used;
                    let mut ok = true;
                    for x in 0..4 {
                        u[x] += nd[x];
                        ok &= u[x] <= self.units[x];
                    }
                    if ok {
                        groups.push(g);
                        self.rec(remaining & !g, groups, u)?;
                        groups.pop();
                    }
                }
                // next combination
                let mut i = size;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if comb[i] < idx.len() - size + i {
                        comb[i] += 1;
                        for j in i + 1..size {
                            comb[j] = comb[j - 1] + 1;
                        }
                        i = usize::MAX;
                        break;
                    }
                }
                if i != usize::MAX {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Splits the constituents into the largest number of groups whose unit
/// demands fit the available unit lines.
fn partition(twos: &[TwoNode], threes: &[ThreeNode], units: [usize; 4]) -> Result<Vec<Group>, CongruenceError> {
    let n = twos.len() + threes.len();
    if n > 64 {
        return Err(CongruenceError::Unsupported(format!("{n} local pieces")));
    }
    let mut total = [0usize; 4];
    for t in threes {
        for x in 0..4 {
            total[x] += t.counts[x];
        }
    }
    let masks: Vec<u64> = if (0..4).all(|x| total[x] <= units[x]) {
        (0..n).map(|k| 1u64 << k).collect()
    } else {
        let mut s = PartSearch { twos, threes, units, best: Vec::new(), best_n: 0, steps: 0 };
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        s.rec(all, &mut Vec::new(), [0; 4])?;
        if s.best.is_empty() && n > 0 {
            return Err(CongruenceError::Reconcile("local pieces do not fit the stripe counts".to_string()));
        }
        s.best
    };
    let n2 = twos.len();
    let mut out = Vec::new();
    for g in masks {
        let tw: Vec<usize> = (0..n2).filter(|&k| g >> k & 1 == 1).collect();
        let th: Vec<usize> = (n2..n).filter(|&k| g >> k & 1 == 1).map(|k| k - n2).collect();
        let units = need(&tw.iter().map(|&k| &twos[k]).collect::<Vec<_>>(), &th.iter().map(|&k| &threes[k]).collect::<Vec<_>>());
        out.push(Group { twos: tw, threes: th, units });
    }
    Ok(out)
}

/// Every placement of the anchors of `threes` on the lines of `twos` and on
/// `units` unit lines, up to permuting unit lines of one class.
fn arrangements(twos: &[&TwoNode], threes: &[&ThreeNode], units: [usize; 4]) -> Result<Vec<Vec<Vec<Host>>>, CongruenceError> {
    let mut hosts: Vec<(Anchor, Host)> = Vec::new();
    for (k, t) in twos.iter().enumerate() {
        for (x, side, line) in t.hosts() {
            hosts.push((x, Host::Line { node: k, side, line }));
        }
    }
    for x in Anchor::ALL {
        for k in 0..units[x.idx()] {
            hosts.push((x, Host::Unit { class: x, k }));
        }
    }
    let slots: Vec<(usize, usize, Anchor)> = threes
        .iter()
        .enumerate()
        .flat_map(|(t, th)| th.anchors.iter().enumerate().map(move |(a, &(_, x))| (t, a, x)))
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut used = vec![false; hosts.len()];
    fn rec(
        i: usize,
        slots: &[(usize, usize, Anchor)],
        hosts: &[(Anchor, Host)],
        used: &mut [bool],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), CongruenceError> {
        if out.len() > ARRANGEMENT_CAP {
            return Err(budget_error(out.len()));
        }
        if i == slots.len() {
            out.push(cur.clone());
            return Ok(());
        }
        let x = slots[i].2;
        for h in 0..hosts.len() {
            if used[h] || hosts[h].0 != x {
                continue;
            }
            if let Host::Unit { class, k } = hosts[h].1 {
                let lower_free = (0..h).any(|g| !used[g] && matches!(hosts[g].1, Host::Unit { class: c, k: kk } if c == class && kk < k));
                if lower_free {
                    continue;
                }
            }
            used[h] = true;
            cur.push(h);
            rec(i + 1, slots, hosts, used, cur, out)?;
            cur.pop();
            used[h] = false;
        }
        Ok(())
    }
    let mut flat = Vec::new();
    rec(0, &slots, &hosts, &mut used, &mut cur, &mut flat)?;
    for f in flat {
        let mut per: Vec<Vec<Host>> = threes.iter().map(|t| Vec::with_capacity(t.anchors.len())).collect();
        for (s, h) in slots.iter().zip(f) {
            per[s.0].push(hosts[h].1);
        }
        out.push(per);
    }
    Ok(out)
}

struct Evaluated {
    index: Option<u8>,
    absorbed: usize,
    graph: ConnectionGraph,
    notes: Vec<String>,
    arrangement: Vec<Vec<Host>>,
}

fn is_pair_word(t: &ThreeNode, a: Letter, b: Letter) -> bool {
    t.letters() == [a, b]
}

// ---------------------------------------------------------------------------
// the classifier

/// Decomposes and names integral matrices; holds the 2-local catalog and
/// the compiled List* patterns.
pub struct Classifier {
    catalog: Catalog2,
    budget: Budget,
    patterns: Vec<(u8, PGraph)>,
}

impl Classifier {
    pub fn new(budget: &Budget) -> Result<Self, CongruenceError> {
        Ok(Classifier { catalog: Catalog2::new(budget)?, budget: *budget, patterns: compile_patterns() })
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    /// 2-local and 3-local decompositions of an integral matrix.
    pub fn local_parts(&self, a: &BlockMatrix) -> Result<(Vec<Piece2>, Vec<Object3>), CongruenceError> {
        if a.variant() != Variant::Integral {
            return Err(CongruenceError::Variant { expected: "integral", got: a.variant() });
        }
        let p2 = self.catalog.decompose2(&a.localize(2)?)?;
        let p3 = decompose3(&a.localize(3)?, &self.budget)?;
        Ok((p2, p3))
    }

    /// Equal stripe dimensions and equivalent localizations at 2 and 3.
    pub fn congruent(&self, a: &BlockMatrix, b: &BlockMatrix) -> Result<bool, CongruenceError> {
        for m in [a, b] {
            if m.variant() != Variant::Integral {
                return Err(CongruenceError::Variant { expected: "integral", got: m.variant() });
            }
        }
        if a.trimmed().shape() != b.trimmed().shape() {
            return Ok(false);
        }
        Ok(self.local_parts(a)? == self.local_parts(b)?)
    }

    /// The first List* index whose pattern matches the graph.
    pub fn liststar_index(&self, g: &ConnectionGraph) -> Option<u8> {
        self.patterns.iter().find(|(_, p)| graph_matches(p, g)).map(|(i, _)| *i)
    }

    /// Indecomposable congruence classes of an integral or integral-ext
    /// matrix, sorted.
    pub fn classify(&self, a: &BlockMatrix) -> Result<Vec<CongruenceClass>, CongruenceError> {
        let mut out = match a.variant() {
            Variant::Integral => self.classify_integral(a, &BTreeSet::new())?,
            Variant::IntegralExt => self.classify_ext(a)?,
            v => return Err(CongruenceError::Variant { expected: "integral or integral-ext", got: v }),
        };
        out.sort_by(|x, y| x.key().cmp(&y.key()));
        Ok(out)
    }

    fn classify_ext(&self, a: &BlockMatrix) -> Result<Vec<CongruenceClass>, CongruenceError> {
        let d = diagonalize_integral_block(a)?;
        let mut out = Vec::new();
        for &q in &d.cofactors {
            for (p, e) in prime_powers(q) {
                let m = BlockMatrix::zeros(Variant::IntegralExt, &[], &[])?;
                out.push(CongruenceClass {
                    kind: ClassKind::Moore,
                    name: format!("M_{{{p}^{e}}}^{{n+3}}"),
                    params: format!("p={p} r={e} k=3"),
                    parts2: Vec::new(),
                    parts3: Vec::new(),
                    graph: ConnectionGraph::default(),
                    matrix: m,
                });
            }
        }
        let m = &d.matrix;
        let rr = m.lines_of(&StripeLabel::sphere_row(3));
        let cr = m.lines_of(&StripeLabel::sphere_col(3));
        let mut drop_rows = BTreeSet::new();
        let mut conv_cols: BTreeMap<usize, u32> = BTreeMap::new();
        let mut drop_cols = BTreeSet::new();
        for (t, &x) in d.diagonal.iter().enumerate() {
            if x == 0 {
                continue;
            }
            drop_rows.insert(rr.start + t);
            drop_cols.insert(cr.start + t);
            let r = split_three(x).0;
            if r > 0 {
                conv_cols.insert(cr.start + t, r);
            }
        }
        let conv: BTreeSet<u32> = conv_cols.values().copied().collect();
        for &r in &conv {
            if !m.lines_of(&StripeLabel::col(Generator::MooreN3(r), 3)).is_empty() {
                return Err(CongruenceError::Unsupported(format!(
                    "integer block diagonal 3^{r} next to M3^{r}[n+3] columns"
                )));
            }
        }
        let mut asm = Assembly::default();
        let rows: Vec<(usize, usize)> = (0..m.nrows())
            .filter(|i| !drop_rows.contains(i))
            .map(|i| (i, asm.line(m.row_label(i))))
            .collect();
        let mut cols: Vec<(usize, usize)> = Vec::new();
        for j in 0..m.ncols() {
            if let Some(&r) = conv_cols.get(&j) {
                let c = asm.line(StripeLabel::col(Generator::MooreN3(r), 3));
                asm.line(StripeLabel::col(Generator::MooreN3(r), 4));
                cols.push((j, c));
            } else if !drop_cols.contains(&j) {
                cols.push((j, asm.line(m.col_label(j))));
            }
        }
        for &(i, a) in &rows {
            for &(j, b) in &cols {
                let x = m.get(i, j);
                if x == 0 {
                    continue;
                }
                if conv_cols.contains_key(&j) {
                    asm.whole.push((a, b, x.rem_euclid(3)));
                } else {
                    asm.whole.push((a, b, x));
                }
            }
        }
        let b = asm.build(Variant::Integral)?;
        out.extend(self.classify_integral(&b, &conv)?);
        Ok(out)
    }

    fn classify_integral(&self, a: &BlockMatrix, conv: &BTreeSet<u32>) -> Result<Vec<CongruenceClass>, CongruenceError> {
        let (p2, p3) = self.local_parts(a)?;
        let mut out = Vec::new();
        let mut units = [0usize; 4];
        let mut other_units = Vec::new();
        let mut twos = Vec::new();
        for p in p2 {
            match p {
                Piece2::Unit(l) => match Anchor::of_label(&l) {
                    Some(x) => units[x.idx()] += 1,
                    None => other_units.push(l),
                },
                p => twos.push(TwoNode::new(p)),
            }
        }
        let mut threes = Vec::new();
        for o in p3 {
            match o {
                Object3::Band(_) => out.push(self.pure3(o, conv)?),
                Object3::String(s) => {
                    let anchored = !s.word().anchors().is_empty();
                    if anchored && s.word().len() == 1 {
                        continue;
                    }
                    if anchored {
                        threes.push(ThreeNode::new(s));
                    } else {
                        out.push(self.pure3(Object3::String(s), conv)?);
                    }
                }
            }
        }
        let groups = partition(&twos, &threes, units)?;
        let mut left = units;
        for g in &groups {
            for x in 0..4 {
                left[x] -= g.units[x];
            }
            let tw: Vec<&TwoNode> = g.twos.iter().map(|&k| &twos[k]).collect();
            let th: Vec<&ThreeNode> = g.threes.iter().map(|&k| &threes[k]).collect();
            out.push(self.name_group(&tw, &th, g.units, conv)?);
        }
        for x in Anchor::ALL {
            for _ in 0..left[x.idx()] {
                other_units.push(x.unit_label());
            }
        }
        for l in other_units {
            let mut asm = Assembly::default();
            asm.line(l);
            out.push(CongruenceClass {
                kind: ClassKind::Elementary,
                name: sphere_name(&l),
                params: String::new(),
                parts2: vec![Piece2::Unit(l)],
                parts3: Vec::new(),
                graph: ConnectionGraph::default(),
                matrix: asm.build(Variant::Integral)?,
            });
        }
        Ok(out)
    }

    /// Bands and strings made of Moore letters only.
    fn pure3(&self, o: Object3, conv: &BTreeSet<u32>) -> Result<CongruenceClass, CongruenceError> {
        let real = o.realize()?;
        let mut asm = Assembly::default();
        let rows: Vec<usize> = (0..real.nrows()).map(|i| asm.line(real.row_label(i))).collect();
        let cols: Vec<usize> = (0..real.ncols()).map(|j| asm.line(real.col_label(j))).collect();
        for (i, j, x) in real.nonzero() {
            asm.three.push((rows[i], cols[j], x));
        }
        let matrix = asm.build(Variant::Integral)?;
        let letters: Vec<Letter> = match &o {
            Object3::String(s) => s.word().letters.clone(),
            Object3::Band(b) => b.word.letters.clone(),
        };
        let touched: BTreeSet<u32> = letters
            .iter()
            .filter_map(|x| match x {
                Letter::F(r) | Letter::Ft(r) if conv.contains(r) => Some(*r),
                _ => None,
            })
            .collect();
        let (kind, name, params) = match &o {
            Object3::String(_) if real.nnz() == 0 => {
                let (r, k) = match letters[0] {
                    Letter::E(s) | Letter::Et(s) => (s, 0),
                    Letter::Ep(t) => (t, 1),
                    Letter::F(r) | Letter::Ft(r) => (r, if conv.contains(&r) { 3 } else { 4 }),
                    _ => (0, 0),
                };
                (ClassKind::Moore, format!("M_{{3^{r}}}^{{n+{k}}}"), format!("p=3 r={r} k={k}"))
            }
            Object3::String(s) if touched.is_empty() => (ClassKind::Local3String, s.to_string(), String::new()),
            Object3::Band(b) if touched.is_empty() => (ClassKind::Local3Band, b.to_string(), String::new()),
            _ => (ClassKind::ListStarStar, format!("M(-,S3)({}) in {o}", join_r(&touched)), String::new()),
        };
        Ok(CongruenceClass {
            kind,
            name,
            params,
            parts2: Vec::new(),
            parts3: vec![o],
            graph: ConnectionGraph::default(),
            matrix,
        })
    }

    fn evaluate(&self, twos: &[&TwoNode], threes: &[&ThreeNode], arr: Vec<Vec<Host>>) -> Option<Evaluated> {
        let n2 = twos.len();
        let n = n2 + threes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (t, hs) in arr.iter().enumerate() {
            for h in hs {
                if let Host::Line { node, .. } = h {
                    let (a, b) = (find(&mut parent, *node), find(&mut parent, n2 + t));
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|k| find(&mut parent, k) != root) {
            return None;
        }
        // units absorbed into a v or ω cell
        let mut v3 = vec![false; n2];
        let mut w3 = vec![false; n2];
        let mut absorbed = vec![false; threes.len()];
        for (t, th) in threes.iter().enumerate() {
            let (want, pair) = if is_pair_word(th, Letter::E0, Letter::F0) {
                (twos_v_row as fn(&TwoNode) -> Option<StripeLabel>, (Anchor::E0, Anchor::S3))
            } else if is_pair_word(th, Letter::Ep0, Letter::Fp0) {
                (twos_w_row as fn(&TwoNode) -> Option<StripeLabel>, (Anchor::E1, Anchor::S4))
            } else {
                continue;
            };
            let (Host::Line { node: a, side: _, line: ra }, Host::Line { node: b, .. }) = (arr[t][0], arr[t][1]) else {
                continue;
            };
            if a != b || twos[a].is_cone() {
                continue;
            }
            let Some(row) = want(twos[a]) else { continue };
            if twos[a].mat.row_label(ra) != row {
                continue;
            }
            let _ = pair;
            absorbed[t] = true;
            if pair.0 == Anchor::E0 {
                v3[a] = true;
            } else {
                w3[a] = true;
            }
        }
        let mut graph = ConnectionGraph::default();
        let mut gid = vec![usize::MAX; n];
        for (k, t) in twos.iter().enumerate() {
            if t.is_cone() {
                continue;
            }
            gid[k] = graph.nodes.len();
            graph.nodes.push(GraphNode::Two {
                piece: t.piece.clone(),
                family: t.item().map(|i| family(&i)),
                v3: v3[k],
                w3: w3[k],
            });
        }
        let mut notes = Vec::new();
        for (t, th) in threes.iter().enumerate() {
            if absorbed[t] {
                continue;
            }
            let me = graph.nodes.len();
            let mut hosted = Vec::new();
            for (h, &(_, x)) in arr[t].iter().zip(&th.anchors) {
                if let Host::Line { node, side, line } = *h {
                    if twos[node].is_cone() {
                        notes.push(format!("{x}={}", host_name(&twos[node].mat.label(side, line))));
                    } else {
                        graph.edges.push((me, gid[node], x));
                        hosted.push(x);
                    }
                }
            }
            hosted.sort();
            graph.nodes.push(GraphNode::Three { word: th.obj.clone(), anchors: hosted });
        }
        let index = if twos.iter().any(|t| t.item().is_none()) { None } else { self.liststar_index(&graph) };
        Some(Evaluated { index, absorbed: absorbed.iter().filter(|&&b| b).count(), graph, notes, arrangement: arr })
    }

    fn name_group(
        &self,
        twos: &[&TwoNode],
        threes: &[&ThreeNode],
        units: [usize; 4],
        conv: &BTreeSet<u32>,
    ) -> Result<CongruenceClass, CongruenceError> {
        let mut parts2: Vec<Piece2> = twos.iter().map(|t| t.piece.clone()).collect();
        for x in Anchor::ALL {
            for _ in 0..units[x.idx()] {
                parts2.push(Piece2::Unit(x.unit_label()));
            }
        }
        parts2.sort();
        let mut parts3: Vec<Object3> = threes.iter().map(|t| Object3::String(t.obj.clone())).collect();
        parts3.sort();
        let mut best: Option<Evaluated> = None;
        let mut first: Option<Vec<Vec<Host>>> = None;
        for arr in arrangements(twos, threes, units)? {
            if first.is_none() {
                first = Some(arr.clone());
            }
            let Some(e) = self.evaluate(twos, threes, arr) else { continue };
            let key = |e: &Evaluated| (has_closed_string(&e.graph), e.index.is_none(), e.absorbed, e.index.unwrap_or(u8::MAX));
            if best.as_ref().is_none_or(|b| key(&e) < key(b)) {
                best = Some(e);
            }
        }
        let (arr, graph, notes, index) = match best {
            Some(e) => (e.arrangement, e.graph, e.notes, e.index),
            None => (first.unwrap_or_default(), ConnectionGraph::default(), Vec::new(), None),
        };
        let matrix = realize_group(twos, threes, &arr)?;
        let touched: BTreeSet<u32> = threes.iter().flat_map(|t| t.exponents_in(conv)).collect();
        let real_twos: Vec<&&TwoNode> = twos.iter().filter(|t| !t.is_cone()).collect();
        let (mut kind, mut name, mut params) = if threes.is_empty() && twos.len() == 1 && twos[0].is_cone() {
            (ClassKind::Elementary, twos[0].item().unwrap().name().to_string(), String::new())
        } else if real_twos.is_empty() && threes.len() == 1 {
            let mut p = notes.clone();
            if p.is_empty() {
                p = threes[0]
                    .anchors
                    .iter()
                    .map(|&(_, x)| format!("{x}={}", host_name(&x.unit_label())))
                    .collect();
            }
            (ClassKind::Local3String, threes[0].obj.to_string(), p.join(" "))
        } else {
            match index {
                Some(k) => (ClassKind::ListStar(k), format!("List*({k})"), describe(&graph, &notes)),
                None => (ClassKind::Unclassified, "unclassified component".to_string(), describe(&graph, &notes)),
            }
        };
        if !touched.is_empty() {
            let rigid = real_twos.is_empty() && threes.len() == 1 && {
                let l = threes[0].letters();
                l.len() == 3 && l[0] == Letter::E0 && matches!((l[1], l[2]), (Letter::F(a), Letter::Ft(b)) if a == b)
            };
            let r = join_r(&touched);
            if rigid {
                let host = twos.first().and_then(|t| t.item()).map(|i| i.index);
                name = match host {
                    Some(3) => format!("(eta.4)_0^1({r})"),
                    Some(5) => format!("(eta2.4)_0^1({r})"),
                    _ => format!("C_8^{{n+4}}({r})"),
                };
                params = format!("r={r}");
            } else {
                name = format!("M(-,S3)({r}) in {name}");
            }
            kind = ClassKind::ListStarStar;
        }
        let matrix = if touched.is_empty() { matrix } else { deconvert(&matrix, conv)? };
        Ok(CongruenceClass { kind, name, params, parts2, parts3, graph, matrix })
    }
}

fn twos_v_row(t: &TwoNode) -> Option<StripeLabel> {
    t.item().and_then(|i| i.v_row())
}

fn twos_w_row(t: &TwoNode) -> Option<StripeLabel> {
    t.item().and_then(|i| i.w_row())
}

fn join_r(rs: &BTreeSet<u32>) -> String {
    rs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

fn describe(g: &ConnectionGraph, notes: &[String]) -> String {
    let mut parts: Vec<String> = g
        .nodes
        .iter()
        .map(|n| match n {
            GraphNode::Two { piece: Piece2::Item(i), v3, w3, .. } => {
                let z24 = |row: Option<StripeLabel>| row.is_some_and(|l| l.gen == Generator::Sphere(0) || l.gen == Generator::Sphere(1));
                let mut s = i.name().to_string();
                let mut ps = Vec::new();
                if let Some(v) = i.v {
                    ps.push(format!("v={}", representative(z24(i.v_row()), v, *v3)));
                }
                if let Some(w) = i.w {
                    ps.push(format!("w={}", representative(z24(i.w_row()), w, *w3)));
                }
                if !ps.is_empty() {
                    s.push_str(&format!("{{{}}}", ps.join(",")));
                }
                s
            }
            GraphNode::Two { piece, .. } => piece.to_string(),
            GraphNode::Three { word, .. } => format!("[{word}]"),
        })
        .collect();
    let mut edges: Vec<String> = g.edges.iter().map(|&(a, b, x)| format!("{a}-{b}:{x}")).collect();
    edges.sort();
    parts.extend(edges);
    parts.extend(notes.iter().cloned());
    parts.join(" ")
}

fn realize_group(twos: &[&TwoNode], threes: &[&ThreeNode], arr: &[Vec<Host>]) -> Result<BlockMatrix, CongruenceError> {
    let mut asm = Assembly::default();
    let mut maps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for t in twos {
        let r: Vec<usize> = (0..t.mat.nrows()).map(|i| asm.line(t.mat.row_label(i))).collect();
        let c: Vec<usize> = (0..t.mat.ncols()).map(|j| asm.line(t.mat.col_label(j))).collect();
        for (i, j, x) in t.mat.nonzero() {
            asm.two.push((r[i], c[j], x));
        }
        maps.push((r, c));
    }
    let mut unit_lines: BTreeMap<(Anchor, usize), usize> = BTreeMap::new();
    for (t, th) in threes.iter().enumerate() {
        let (m, lines) = realize_string_lines(th.obj.word())?;
        let mut rmap = vec![usize::MAX; m.nrows()];
        let mut cmap = vec![usize::MAX; m.ncols()];
        for (k, &(li, _)) in th.anchors.iter().enumerate() {
            let side = th.letters()[li].label().side;
            let target = match arr.get(t).and_then(|a| a.get(k)) {
                Some(Host::Line { node, side: s, line }) => {
                    if *s == Side::Row {
                        maps[*node].0[*line]
                    } else {
                        maps[*node].1[*line]
                    }
                }
                Some(Host::Unit { class, k }) => {
                    *unit_lines.entry((*class, *k)).or_insert_with(|| asm.line(class.unit_label()))
                }
                None => asm.line(Anchor::of_letter(th.letters()[li]).unwrap().unit_label()),
            };
            if side == Side::Row {
                rmap[lines[li]] = target;
            } else {
                cmap[lines[li]] = target;
            }
        }
        for (i, x) in rmap.iter_mut().enumerate() {
            if *x == usize::MAX {
                *x = asm.line(m.row_label(i));
            }
        }
        for (j, x) in cmap.iter_mut().enumerate() {
            if *x == usize::MAX {
                *x = asm.line(m.col_label(j));
            }
        }
        for (i, j, x) in m.nonzero() {
            asm.three.push((rmap[i], cmap[j], x));
        }
    }
    asm.build(Variant::Integral)
}

/// Writes converted Moore columns back as S+3 columns with their 3-power
/// diagonal, when their second slots carry nothing.
fn deconvert(m: &BlockMatrix, conv: &BTreeSet<u32>) -> Result<BlockMatrix, CongruenceError> {
    let is_conv = |l: &StripeLabel, slot: u8| matches!(l.gen, Generator::MooreN3(r) if conv.contains(&r)) && l.slot == slot;
    for j in 0..m.ncols() {
        if is_conv(&m.col_label(j), 4) && (0..m.nrows()).any(|i| m.get(i, j) != 0) {
            return Ok(m.clone());
        }
    }
    let mut asm = Assembly::default();
    let rows: Vec<usize> = (0..m.nrows()).map(|i| asm.line(m.row_label(i))).collect();
    let mut cols: Vec<Option<usize>> = Vec::new();
    for j in 0..m.ncols() {
        let l = m.col_label(j);
        if is_conv(&l, 4) {
            cols.push(None);
        } else if is_conv(&l, 3) {
            let c = asm.line(StripeLabel::sphere_col(3));
            let r = asm.line(StripeLabel::sphere_row(3));
            let Generator::MooreN3(e) = l.gen else { unreachable!() };
            asm.whole.push((r, c, 3i64.pow(e)));
            cols.push(Some(c));
        } else {
            cols.push(Some(asm.line(l)));
        }
    }
    for (i, j, x) in m.nonzero() {
        let Some(c) = cols[j] else { continue };
        let l = m.col_label(j);
        let v = if is_conv(&l, 3) {
            match m.row_label(i).gen {
                Generator::Sphere(0) => representative(true, 0, true),
                Generator::CetaN2 | Generator::Ceta2N3 => representative(false, 0, true),
                _ => x,
            }
        } else {
            x
        };
        asm.whole.push((rows[i], c, v));
    }
    asm.build(Variant::IntegralExt)
}

/// Where one anchor of a string is attached: to the line of its class in
/// the given item, or to a fresh unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Item(usize),
    Unit,
}

/// The integral matrix of catalog items joined by strings, each anchor
/// placed as listed (in any order; matched by class).
pub fn assemble(items: &[CatalogItem2], strings: &[(StringObject, Vec<(Anchor, Place)>)]) -> Result<BlockMatrix, CongruenceError> {
    let twos: Vec<TwoNode> = items.iter().map(|i| TwoNode::new(Piece2::Item(*i))).collect();
    let threes: Vec<ThreeNode> = strings.iter().map(|(w, _)| ThreeNode::new(w.clone())).collect();
    let mut k = 0;
    let mut taken: BTreeSet<(usize, Anchor)> = BTreeSet::new();
    let mut arr = Vec::new();
    for (th, (w, place)) in threes.iter().zip(strings) {
        let mut left = place.clone();
        let mut hs = Vec::new();
        for &(_, x) in &th.anchors {
            let at = left
                .iter()
                .position(|p| p.0 == x)
                .ok_or_else(|| CongruenceError::Reconcile(format!("no placement for anchor {x} of {w}")))?;
            hs.push(match left.remove(at).1 {
                Place::Item(n) => {
                    let t = twos.get(n).ok_or_else(|| CongruenceError::Reconcile(format!("no item {n}")))?;
                    let (_, side, line) = t
                        .hosts()
                        .into_iter()
                        .find(|h| h.0 == x)
                        .ok_or_else(|| CongruenceError::Reconcile(format!("item {n} has no {x} line")))?;
                    if !taken.insert((n, x)) {
                        return Err(CongruenceError::Reconcile(format!("{x} line of item {n} used twice")));
                    }
                    Host::Line { node: n, side, line }
                }
                Place::Unit => {
                    k += 1;
                    Host::Unit { class: x, k }
                }
            });
        }
        if !left.is_empty() {
            return Err(CongruenceError::Reconcile(format!("{w} has fewer anchors than placements")));
        }
        arr.push(hs);
    }
    let tw: Vec<&TwoNode> = twos.iter().collect();
    let th: Vec<&ThreeNode> = threes.iter().collect();
    realize_group(&tw, &th, &arr)
}

/// One-shot [`Classifier::congruent`].
pub fn congruent(a: &BlockMatrix, b: &BlockMatrix, budget: &Budget) -> Result<bool, CongruenceError> {
    Classifier::new(budget)?.congruent(a, b)
}

/// One-shot [`Classifier::classify`].
pub fn classify(a: &BlockMatrix, budget: &Budget) -> Result<Vec<CongruenceClass>, CongruenceError> {
    Classifier::new(budget)?.classify(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(k: u8) -> StripeLabel {
        StripeLabel::sphere_row(k)
    }
    fn sc(k: u8) -> StripeLabel {
        StripeLabel::sphere_col(k)
    }

    fn one(ring_row: StripeLabel, col: StripeLabel, u: i64, v: i64) -> i64 {
        let a2 = BlockMatrix::zeros(Variant::Integral, &[(ring_row, 1)], &[(col, 1)]).unwrap();
        let mut l2 = a2.localize(2).unwrap();
        let mut l3 = a2.localize(3).unwrap();
        if l2.nrows() > 0 && l2.ncols() > 0 {
            l2.set(0, 0, u);
        }
        if l3.nrows() > 0 && l3.ncols() > 0 {
            l3.set(0, 0, v);
        }
        merge_like(&l2, &l3, &a2).unwrap().get(0, 0)
    }

    #[test]
    fn merge_examples() {
        assert_eq!(one(s(0), sc(3), 5, 1), 13);
        assert_eq!(one(s(1), sc(3), 1, 0), 1);
        let m = StripeLabel::row(Generator::MooreN(1), 0);
        assert_eq!(one(m, sc(3), 0, 2), 2);
    }

    #[test]
    fn patterns_compile() {
        let p = compile_patterns();
        assert!(p.len() > 150);
        let idx: BTreeSet<u8> = p.iter().map(|x| x.0).collect();
        assert_eq!(idx.len(), 74);
        // (54) is a cycle through four nodes
        let c = p.iter().find(|x| x.0 == 54).unwrap();
        assert_eq!(c.1.nodes.len(), 4);
        assert_eq!(c.1.edges.len(), 4);
    }

    fn ext(block: &[&[i64]]) -> BlockMatrix {
        let k = block.len();
        let l = block[0].len();
        let mut m = BlockMatrix::zeros(Variant::IntegralExt, &[(s(3), k)], &[(sc(3), l)]).unwrap();
        for (i, row) in block.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    #[test]
    fn diagonal_examples() {
        let d = diagonalize_integral_block(&ext(&[&[3, 0], &[0, 9]])).unwrap();
        assert_eq!(d.diagonal, vec![9, 3]);
        let d = diagonalize_integral_block(&ext(&[&[0, 3], &[3, 0]])).unwrap();
        assert_eq!(d.diagonal, vec![3, 3]);
        let d = diagonalize_integral_block(&ext(&[&[3, 3], &[3, 12]])).unwrap();
        assert_eq!(d.diagonal, vec![9, 3]);
        let d = diagonalize_integral_block(&ext(&[&[15]])).unwrap();
        assert_eq!((d.diagonal, d.cofactors), (vec![3], vec![5]));
        assert_eq!(diagonalize_integral_block(&ext(&[&[6]])), Err(CongruenceError::TwoTorsion(6)));
    }

    #[test]
    fn single_entry_names() {
        let c = Classifier::new(&Budget::default()).unwrap();
        let m = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 6)]).unwrap();
        let out = c.classify(&m).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, ClassKind::ListStar(48));
        assert_eq!(out[0].to_string(), "liststar List*(48) C_v^{n+4}{v=6}");
        let z = BlockMatrix::zeros(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)]).unwrap();
        let names: Vec<String> = c.classify(&z).unwrap().iter().map(|x| x.to_string()).collect();
        assert_eq!(names, ["elementary S^{n+0}", "elementary S^{n+4}"]);
        let u = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 8)]).unwrap();
        let out = c.classify(&u).unwrap();
        assert_eq!(out[0].kind, ClassKind::Local3String);
        assert_eq!(out[0].name, "e0 - f0");
    }

    fn placed(items: &[CatalogItem2], strings: &[(&str, &[(Anchor, Option<usize>)])]) -> BlockMatrix {
        let strings: Vec<(StringObject, Vec<(Anchor, Place)>)> = strings
            .iter()
            .map(|(w, p)| {
                let o = StringObject::new(w.parse().unwrap()).unwrap();
                (o, p.iter().map(|&(x, n)| (x, n.map_or(Place::Unit, Place::Item))).collect())
            })
            .collect();
        assemble(items, &strings).unwrap()
    }

    fn center() -> CatalogItem2 {
        CatalogItem2::new(24, Some(1), Some(1)).unwrap()
    }

    const LONG_E0_S3: &str = "e0 - f1 ~ ft1 - et1 ~ e1 - f0";
    const LONG_E1_S4: &str = "e'0 - ft1 ~ f1 - e1 ~ et1 - f'0";

    fn kinds(m: &BlockMatrix) -> Vec<ClassKind> {
        let c = Classifier::new(&Budget::default()).unwrap();
        let out = c.classify(m).unwrap();
        for x in &out {
            assert!(!has_closed_string(&x.graph));
        }
        out.iter().map(|x| x.kind).collect()
    }

    use Anchor::*;

    #[test]
    fn worked_case_four() {
        let m = placed(
            &[center()],
            &[(LONG_E0_S3, &[(E0, Some(0)), (S3, Some(0))]), ("e'0 - ft1 ~ f1", &[(E1, Some(0))]), ("f'0 - et1 ~ e1", &[(S4, Some(0))])],
        );
        assert_eq!(kinds(&m), [ClassKind::ListStar(17)]);
    }

    #[test]
    fn worked_case_five() {
        let m = placed(
            &[center()],
            &[
                ("e0 - f1 ~ ft1", &[(E0, Some(0))]),
                ("e'0 - ft1 ~ f1", &[(E1, Some(0))]),
                ("f0 - e1 ~ et1", &[(S3, Some(0))]),
                ("f'0 - et1 ~ e1", &[(S4, Some(0))]),
            ],
        );
        assert_eq!(kinds(&m), [ClassKind::ListStar(19)]);
    }

    #[test]
    fn worked_case_i2() {
        let ch4 = CatalogItem2::new(8, None, None).unwrap();
        let m = placed(
            &[center(), ch4],
            &[
                ("e0 - f1 ~ ft1 - e'0", &[(E0, Some(0)), (E1, Some(0))]),
                ("f0 - e1 ~ et1", &[(S3, Some(0))]),
                ("e'0 - f'0", &[(S4, Some(0)), (E1, Some(1))]),
                ("f0 - e2 ~ et2", &[(S3, Some(1))]),
            ],
        );
        assert_eq!(kinds(&m), [ClassKind::ListStar(20)]);
    }

    #[test]
    fn doubly_attached_pair_splits_off() {
        let m = placed(
            &[center()],
            &[
                (LONG_E0_S3, &[(E0, Some(0)), (S3, Some(0))]),
                (LONG_E1_S4, &[(E1, Some(0)), (S4, Some(0))]),
                ("f0 - e1 ~ et1", &[(S3, None)]),
            ],
        );
        assert_eq!(kinds(&m), [ClassKind::Local3String, ClassKind::ListStar(16)]);
    }

    fn ext_names(rows: &[(StripeLabel, usize)], entries: &[(usize, usize, i64)]) -> Vec<String> {
        let m = BlockMatrix::from_entries(Variant::IntegralExt, rows, &[(sc(3), 1)], entries).unwrap();
        let c = Classifier::new(&Budget::default()).unwrap();
        c.classify(&m).unwrap().iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn ext_rigid_items() {
        assert_eq!(ext_names(&[(s(0), 1), (s(3), 1)], &[(0, 0, 8), (1, 0, 3)]), ["liststarstar C_8^{n+4}(1) r=1"]);
        let cone = StripeLabel::row(Generator::CetaN2, 0);
        let n = ext_names(&[(cone, 1), (s(3), 1)], &[(1, 0, 4), (0, 0, 9)]);
        assert_eq!(n, ["liststarstar (eta.4)_0^1(2) r=2"]);
        assert_eq!(ext_names(&[(s(3), 1)], &[(0, 0, 3)]), ["moore M_{3^1}^{n+3} p=3 r=1 k=3"]);
        assert_eq!(ext_names(&[(s(0), 1), (s(3), 1)], &[(0, 0, 5), (1, 0, 1)]), ["elementary S^{n+0}"]);
        assert_eq!(ext_names(&[(s(3), 1)], &[(0, 0, 15)]), ["moore M_{3^1}^{n+3} p=3 r=1 k=3", "moore M_{5^1}^{n+3} p=5 r=1 k=3"]);
    }

    #[test]
    fn ext_rigid_payload_round_trips() {
        let m = BlockMatrix::from_entries(Variant::IntegralExt, &[(s(0), 1), (s(3), 1)], &[(sc(3), 1)], &[(0, 0, 8), (1, 0, 3)]).unwrap();
        let c = Classifier::new(&Budget::default()).unwrap();
        let out = c.classify(&m).unwrap();
        assert_eq!(out[0].matrix, m);
    }
}
