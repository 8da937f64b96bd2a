//! Admissible transformations and the exact orbit search built on them:
//! equivalence, canonical forms and decomposition into indecomposables.
//!
//! The search walks the orbit of a matrix under all single admissible steps.
//! States are deduplicated modulo line permutations and unit scalings of one
//! side, which the generator set is closed under conjugation by; the
//! normalized state is the lexicographically least member of that coset,
//! so the least visited state is the least member of the whole orbit.

use alloc::boxed::Box;
use alloc::collections::{BinaryHeap, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::{HashMap, HashSet};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::blockmat::{BlockError, BlockMatrix};
use crate::shape::{transfer, CellRing, Side, StripeLabel, TransformSchema, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("inadmissible step: {0}")]
    Inadmissible(String),
    #[error(transparent)]
    Block(#[from] BlockError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("budget exceeded after {states} states")]
    BudgetExceeded { states: usize },
    #[error("budget exceeded: matrix is {rows}x{cols}, limit {max_rows}x{max_cols}")]
    TooLarge { rows: usize, cols: usize, max_rows: usize, max_cols: usize },
    #[error("orbit search does not support {0}")]
    Unsupported(Variant),
    #[error("shape mismatch")]
    ShapeMismatch,
}

/// Limits of the orbit search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_states: usize,
    pub max_rows: usize,
    pub max_cols: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_states: 10_000_000, max_rows: 8, max_cols: 8 }
    }
}

impl Budget {
    pub fn states(max_states: usize) -> Self {
        Budget { max_states, ..Budget::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Swap { a: usize, b: usize },
    Scale { line: usize, unit: i64 },
    /// Adds `k` times line `src` to line `dst`; across stripes the schema
    /// coefficient multiplies `k`.
    Add { src: usize, dst: usize, k: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformStep {
    pub side: Side,
    pub kind: StepKind,
}

// local index of a line inside its stripe and the stripe label
fn locate(a: &BlockMatrix, side: Side, i: usize) -> Option<(StripeLabel, usize)> {
    let off = a.offsets(side);
    let stripes = a.stripes(side);
    (0..stripes.len())
        .find(|&k| i >= off[k] && i < off[k + 1])
        .map(|k| (stripes[k].label, i - off[k]))
}

fn mirror(a: &BlockMatrix, schema: &TransformSchema, side: Side, i: usize) -> Option<usize> {
    let (label, t) = locate(a, side, i)?;
    let p = schema.linked(&label)?;
    let r = a.lines_of(&p);
    (t < r.len()).then(|| r.start + t)
}

fn cell(_a: &BlockMatrix, side: Side, line: usize, other: usize) -> (usize, usize) {
    match side {
        Side::Row => (line, other),
        Side::Col => (other, line),
    }
}

fn add_line(a: &mut BlockMatrix, side: Side, src: usize, dst: usize, mult: i64) {
    let n = a.len(match side {
        Side::Row => Side::Col,
        Side::Col => Side::Row,
    });
    for o in 0..n {
        let (si, sj) = cell(a, side, src, o);
        let (di, dj) = cell(a, side, dst, o);
        let x = a.get(si, sj);
        if x == 0 {
            continue;
        }
        let add = transfer(a.ring(si, sj), a.ring(di, dj), mult, x);
        if add != 0 && a.ring(di, dj) != CellRing::Zero {
            let y = a.get(di, dj);
            a.set(di, dj, y + add);
        }
    }
}

fn scale_line(a: &mut BlockMatrix, side: Side, i: usize, u: i64) {
    let n = a.len(match side {
        Side::Row => Side::Col,
        Side::Col => Side::Row,
    });
    for o in 0..n {
        let (r, c) = cell(a, side, i, o);
        let v = a.get(r, c);
        a.set(r, c, v * u);
    }
}

fn swap_lines(a: &mut BlockMatrix, side: Side, x: usize, y: usize) {
    let n = a.len(match side {
        Side::Row => Side::Col,
        Side::Col => Side::Row,
    });
    for o in 0..n {
        let (r1, c1) = cell(a, side, x, o);
        let (r2, c2) = cell(a, side, y, o);
        let v1 = a.get(r1, c1);
        let v2 = a.get(r2, c2);
        a.set(r1, c1, v2);
        a.set(r2, c2, v1);
    }
}

/// Applies one admissible step; linked stripes receive the mirrored step.
pub fn apply(a: &BlockMatrix, step: &TransformStep, schema: &TransformSchema) -> Result<BlockMatrix, TransformError> {
    if schema.variant != a.variant() {
        return Err(TransformError::Inadmissible("schema variant differs from matrix".to_string()));
    }
    let side = step.side;
    let len = a.len(side);
    let bad = |m: &str| Err(TransformError::Inadmissible(m.to_string()));
    let mut out = a.clone();
    match step.kind {
        StepKind::Swap { a: x, b: y } => {
            if x >= len || y >= len {
                return bad("index out of range");
            }
            let (lx, _) = locate(a, side, x).unwrap();
            let (ly, _) = locate(a, side, y).unwrap();
            if lx != ly {
                return bad("swap across stripes");
            }
            if x == y {
                return Ok(out);
            }
            swap_lines(&mut out, side, x, y);
            if let (Some(mx), Some(my)) = (mirror(a, schema, side, x), mirror(a, schema, side, y)) {
                swap_lines(&mut out, side, mx, my);
            }
        }
        StepKind::Scale { line, unit } => {
            if line >= len {
                return bad("index out of range");
            }
            let (l, _) = locate(a, side, line).unwrap();
            if !schema.unit_scalars(&l).contains(&unit) {
                return bad("scalar is not an admissible unit");
            }
            scale_line(&mut out, side, line, unit);
            if let Some(m) = mirror(a, schema, side, line) {
                scale_line(&mut out, side, m, unit);
            }
        }
        StepKind::Add { src, dst, k } => {
            if src >= len || dst >= len || src == dst {
                return bad("bad line indices");
            }
            let (ls, _) = locate(a, side, src).unwrap();
            let (ld, _) = locate(a, side, dst).unwrap();
            if ls == ld {
                add_line(&mut out, side, src, dst, k);
                if let (Some(ms), Some(md)) = (mirror(a, schema, side, src), mirror(a, schema, side, dst)) {
                    add_line(&mut out, side, ms, md, k);
                }
            } else {
                match schema.addition(&ls, &ld) {
                    Some(coef) => add_line(&mut out, side, src, dst, coef * k),
                    None => return bad("no ordered addition between these stripes"),
                }
            }
        }
    }
    Ok(out)
}

/// A random admissible step, or None if the matrix has no lines.
pub fn random_step<R: RngCore>(a: &BlockMatrix, schema: &TransformSchema, rng: &mut R) -> Option<TransformStep> {
    let pick = |rng: &mut R, n: usize| (rng.next_u32() as usize) % n;
    for _ in 0..64 {
        let side = if rng.next_u32().is_multiple_of(2) { Side::Row } else { Side::Col };
        let len = a.len(side);
        if len == 0 {
            continue;
        }
        let x = pick(rng, len);
        let (lx, _) = locate(a, side, x).unwrap();
        match rng.next_u32() % 3 {
            0 => {
                let r = a.lines_of(&lx);
                let y = r.start + pick(rng, r.len());
                return Some(TransformStep { side, kind: StepKind::Swap { a: x, b: y } });
            }
            1 => {
                let units = schema.unit_scalars(&lx);
                let unit = units[pick(rng, units.len())];
                return Some(TransformStep { side, kind: StepKind::Scale { line: x, unit } });
            }
            _ => {
                let y = pick(rng, len);
                if y == x {
                    continue;
                }
                let (ly, _) = locate(a, side, y).unwrap();
                if lx == ly || schema.addition(&lx, &ly).is_some() {
                    let k = 1 + (rng.next_u32() % 23) as i64;
                    return Some(TransformStep { side, kind: StepKind::Add { src: x, dst: y, k } });
                }
            }
        }
    }
    None
}

/// Applies `steps` random admissible steps.
pub fn scramble<R: RngCore>(a: &BlockMatrix, schema: &TransformSchema, steps: usize, rng: &mut R) -> BlockMatrix {
    let mut m = a.clone();
    for _ in 0..steps {
        if let Some(s) = random_step(&m, schema, rng) {
            m = apply(&m, &s, schema).expect("random steps are admissible");
        }
    }
    m
}

/// Connected components of the incidence graph (nonzero entries join a
/// row and a column; linked lines are joined), as sorted (rows, cols).
pub fn components(a: &BlockMatrix, schema: &TransformSchema) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = a.nrows();
    let m = a.ncols();
    let mut uf = UnionFind::new(n + m);
    for (i, j, _) in a.nonzero() {
        uf.union(i, n + j);
    }
    for i in 0..n {
        if let Some(p) = mirror(a, schema, Side::Row, i) {
            uf.union(i, p);
        }
    }
    for j in 0..m {
        if let Some(p) = mirror(a, schema, Side::Col, j) {
            uf.union(n + j, n + p);
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for x in 0..n + m {
        let r = uf.find(x);
        let k = match roots.iter().position(|&y| y == r) {
            Some(k) => k,
            None => {
                roots.push(r);
                out.push((Vec::new(), Vec::new()));
                roots.len() - 1
            }
        };
        if x < n {
            out[k].0.push(x);
        } else {
            out[k].1.push(x - n);
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

// ---------------------------------------------------------------------------
// compiled problem

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Add { dst: u16, src: u16, lut: u16 },
    Map { pos: u16, lut: u16 },
    Swap { a: u16, b: u16 },
}

type Lut = [u8; 24];

/// One side's lines grouped into bundles (a line plus its linked partner)
/// per stripe, with the unit scalars of that stripe.
struct Normalizer {
    /// positions of each line's cells, in the order used for comparison
    groups: Vec<Group>,
}

struct Group {
    /// for every bundle in the stripe, the flat positions compared in order
    bundles: Vec<Vec<u16>>,
    /// scaling luts per unit (including 1), indexed by position
    units: Vec<i64>,
}

/// A matrix compiled to byte states for fast orbit walks.
pub struct Problem {
    nrows: usize,
    ncols: usize,
    size: Vec<u8>,
    luts: Vec<Lut>,
    gens: Vec<Vec<Op>>,
    norm: Normalizer,
    row_mirror: Vec<Option<usize>>,
    col_mirror: Vec<Option<usize>>,
    template: BlockMatrix,
}

fn lut_id(pool: &mut Vec<Lut>, index: &mut HashMap<Lut, u16>, lut: Lut) -> u16 {
    if let Some(&k) = index.get(&lut) {
        return k;
    }
    pool.push(lut);
    let k = (pool.len() - 1) as u16;
    index.insert(lut, k);
    k
}

fn lcm(a: u32, b: u32) -> u32 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    a / crate::rings::gcd(a as u64, b as u64) as u32 * b
}

impl Problem {
    pub fn new(a: &BlockMatrix, schema: &TransformSchema) -> Result<Problem, SearchError> {
        if a.variant() == Variant::IntegralExt || schema.variant != a.variant() {
            return Err(SearchError::Unsupported(a.variant()));
        }
        let a = a.trimmed();
        let n = a.nrows();
        let m = a.ncols();
        let mut size = vec![0u8; n * m];
        for i in 0..n {
            for j in 0..m {
                size[i * m + j] = a.ring(i, j).size().unwrap() as u8;
            }
        }
        let row_mirror: Vec<Option<usize>> = (0..n).map(|i| mirror(&a, schema, Side::Row, i)).collect();
        let col_mirror: Vec<Option<usize>> = (0..m).map(|j| mirror(&a, schema, Side::Col, j)).collect();
        let pos = |side: Side, line: usize, o: usize| -> usize {
            match side {
                Side::Row => line * m + o,
                Side::Col => o * m + line,
            }
        };
        let mut luts: Vec<Lut> = Vec::new();
        let mut lut_index: HashMap<Lut, u16> = HashMap::new();
        let mut gens: Vec<Vec<Op>> = Vec::new();
        let mut seen: HashSet<Vec<Op>> = HashSet::new();
        let mut push = |g: Vec<Op>, gens: &mut Vec<Vec<Op>>| {
            if !g.is_empty() && seen.insert(g.clone()) {
                gens.push(g);
            }
        };
        for side in [Side::Row, Side::Col] {
            let other = if side == Side::Row { m } else { n };
            let mirrors = if side == Side::Row { &row_mirror } else { &col_mirror };
            let labels = a.line_labels(side);
            let stripes = a.stripes(side).to_vec();
            let off = a.offsets(side);
            let line_size = |line: usize| -> u32 {
                let mut l = 0;
                for o in 0..other {
                    l = lcm(l, size[pos(side, line, o)] as u32);
                }
                l
            };
            let add_ops = |src: usize, dst: usize, mult: i64, luts: &mut Vec<Lut>, idx: &mut HashMap<Lut, u16>| {
                let mut ops = Vec::new();
                for o in 0..other {
                    let ps = pos(side, src, o);
                    let pd = pos(side, dst, o);
                    let (rs, rd) = match side {
                        Side::Row => (a.ring(src, o), a.ring(dst, o)),
                        Side::Col => (a.ring(o, src), a.ring(o, dst)),
                    };
                    if rs == CellRing::Zero || rd == CellRing::Zero {
                        continue;
                    }
                    let mut lut = [0u8; 24];
                    let mut nonzero = false;
                    for x in 0..size[ps] as i64 {
                        let v = rd.reduce(transfer(rs, rd, mult, x)) as u8;
                        lut[x as usize] = v;
                        nonzero |= v != 0;
                    }
                    if nonzero {
                        ops.push(Op::Add { dst: pd as u16, src: ps as u16, lut: lut_id(luts, idx, lut) });
                    }
                }
                ops
            };
            for (k, st) in stripes.iter().enumerate() {
                if !st.label.is_primary() && schema.linked(&st.label).is_some() {
                    continue;
                }
                let lines: Vec<usize> = (off[k]..off[k + 1]).collect();
                // swaps
                for x in 0..lines.len() {
                    for y in x + 1..lines.len() {
                        let (p, q) = (lines[x], lines[y]);
                        let mut g = Vec::new();
                        for pair in [(Some(p), Some(q)), (mirrors[p], mirrors[q])] {
                            if let (Some(u), Some(v)) = pair {
                                for o in 0..other {
                                    if size[pos(side, u, o)] != 0 {
                                        g.push(Op::Swap { a: pos(side, u, o) as u16, b: pos(side, v, o) as u16 });
                                    }
                                }
                            }
                        }
                        push(g, &mut gens);
                    }
                }
                // unit scalings
                for &u in schema.unit_scalars(&st.label).iter().filter(|&&u| u != 1) {
                    for &p in &lines {
                        let mut g = Vec::new();
                        for l in [Some(p), mirrors[p]].into_iter().flatten() {
                            for o in 0..other {
                                let ps = pos(side, l, o);
                                if size[ps] > 1 {
                                    let mut lut = [0u8; 24];
                                    for x in 0..size[ps] as i64 {
                                        lut[x as usize] = (x * u).rem_euclid(size[ps] as i64) as u8;
                                    }
                                    if (0..size[ps] as usize).any(|x| lut[x] as usize != x) {
                                        g.push(Op::Map { pos: ps as u16, lut: lut_id(&mut luts, &mut lut_index, lut) });
                                    }
                                }
                            }
                        }
                        push(g, &mut gens);
                    }
                }
                // additions inside the stripe
                for &p in &lines {
                    for &q in &lines {
                        if p == q {
                            continue;
                        }
                        let kmax = lcm(line_size(q), mirrors[q].map(line_size).unwrap_or(0));
                        for kk in 1..kmax.max(1) as i64 {
                            let mut g = add_ops(p, q, kk, &mut luts, &mut lut_index);
                            if let (Some(mp), Some(mq)) = (mirrors[p], mirrors[q]) {
                                g.extend(add_ops(mp, mq, kk, &mut luts, &mut lut_index));
                            }
                            push(g, &mut gens);
                        }
                    }
                }
            }
            // additions across stripes
            for (si, di, coef) in schema.additions(&stripes.iter().map(|s| s.label).collect::<Vec<_>>()) {
                for p in off[si]..off[si + 1] {
                    for q in off[di]..off[di + 1] {
                        let kmax = line_size(q).max(1) as i64;
                        for kk in 1..kmax {
                            let g = add_ops(p, q, coef * kk, &mut luts, &mut lut_index);
                            push(g, &mut gens);
                        }
                    }
                }
            }
            let _ = &labels;
        }
        let norm = Normalizer::build(&a, schema, &row_mirror, &col_mirror, &size);
        Ok(Problem { nrows: n, ncols: m, size, luts, gens, norm, row_mirror, col_mirror, template: a })
    }

    pub fn generator_count(&self) -> usize {
        self.gens.len()
    }

    pub fn encode(&self, a: &BlockMatrix) -> Vec<u8> {
        a.trimmed().entries().iter().map(|&x| x as u8).collect()
    }

    pub fn decode(&self, s: &[u8]) -> BlockMatrix {
        self.template.with_raw_entries(s.iter().map(|&x| x as i64).collect())
    }

    fn apply_gen(&self, g: &[Op], s: &mut [u8]) {
        for op in g {
            match *op {
                Op::Add { dst, src, lut } => {
                    let d = dst as usize;
                    let v = s[d] + self.luts[lut as usize][s[src as usize] as usize];
                    let z = self.size[d];
                    s[d] = if v >= z { v - z } else { v };
                }
                Op::Map { pos, lut } => {
                    s[pos as usize] = self.luts[lut as usize][s[pos as usize] as usize];
                }
                Op::Swap { a, b } => s.swap(a as usize, b as usize),
            }
        }
    }

    pub fn normalize(&self, s: &mut [u8]) {
        self.norm.apply(s, &self.size);
    }

    /// Number of components of the incidence graph of a state.
    fn component_count(&self, s: &[u8]) -> usize {
        let (n, m) = (self.nrows, self.ncols);
        let mut uf = UnionFind::new(n + m);
        for i in 0..n {
            for j in 0..m {
                if s[i * m + j] != 0 {
                    uf.union(i, n + j);
                }
            }
        }
        for (i, p) in self.row_mirror.iter().enumerate() {
            if let Some(p) = p {
                uf.union(i, *p);
            }
        }
        for (j, p) in self.col_mirror.iter().enumerate() {
            if let Some(p) = p {
                uf.union(n + j, n + *p);
            }
        }
        (0..n + m).filter(|&x| uf.find(x) == x).count()
    }

    fn successors(&self, s: &[u8], order: &[usize]) -> Vec<Box<[u8]>> {
        let mut out = Vec::with_capacity(order.len());
        for &g in order {
            let mut t: Box<[u8]> = s.into();
            self.apply_gen(&self.gens[g], &mut t);
            self.normalize(&mut t);
            out.push(t);
        }
        out
    }
}

impl Normalizer {
    fn build(
        a: &BlockMatrix,
        schema: &TransformSchema,
        row_mirror: &[Option<usize>],
        col_mirror: &[Option<usize>],
        size: &[u8],
    ) -> Normalizer {
        let n = a.nrows();
        let m = a.ncols();
        let mut best: Option<(u128, Vec<Group>)> = None;
        for side in [Side::Row, Side::Col] {
            let mirrors = if side == Side::Row { row_mirror } else { col_mirror };
            let other = if side == Side::Row { m } else { n };
            let off = a.offsets(side);
            let mut groups = Vec::new();
            let mut gain = 1u128;
            for (k, st) in a.stripes(side).iter().enumerate() {
                if !st.label.is_primary() && schema.linked(&st.label).is_some() {
                    continue;
                }
                let mut bundles = Vec::new();
                for line in off[k]..off[k + 1] {
                    let mut ps = Vec::new();
                    match side {
                        Side::Row => {
                            for o in 0..other {
                                ps.push((line * m + o) as u16);
                            }
                            if let Some(mm) = mirrors[line] {
                                for o in 0..other {
                                    ps.push((mm * m + o) as u16);
                                }
                            }
                        }
                        Side::Col => {
                            for o in 0..other {
                                ps.push((o * m + line) as u16);
                                if let Some(mm) = mirrors[line] {
                                    ps.push((o * m + mm) as u16);
                                }
                            }
                        }
                    }
                    ps.retain(|&p| size[p as usize] > 1);
                    ps.sort_unstable();
                    bundles.push(ps);
                }
                let d = bundles.len();
                let units = schema.unit_scalars(&st.label);
                for t in 1..=d {
                    gain = gain.saturating_mul(t as u128).saturating_mul(units.len() as u128);
                }
                groups.push(Group { bundles, units });
            }
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, groups));
            }
        }
        Normalizer { groups: best.map(|b| b.1).unwrap_or_default() }
    }

    fn apply(&self, s: &mut [u8], size: &[u8]) {
        let mut keys: Vec<Vec<u8>> = Vec::new();
        for g in &self.groups {
            if g.bundles.is_empty() {
                continue;
            }
            keys.clear();
            for b in &g.bundles {
                let mut best: Vec<u8> = b.iter().map(|&p| s[p as usize]).collect();
                let mut cand = vec![0u8; b.len()];
                for &u in &g.units[1..] {
                    for (t, &p) in b.iter().enumerate() {
                        let z = size[p as usize] as i64;
                        cand[t] = (s[p as usize] as i64 * u).rem_euclid(z) as u8;
                    }
                    if cand < best {
                        best.copy_from_slice(&cand);
                    }
                }
                keys.push(best);
            }
            keys.sort_unstable();
            for (b, key) in g.bundles.iter().zip(keys.iter()) {
                for (t, &p) in b.iter().enumerate() {
                    s[p as usize] = key[t];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// searches

fn check_size(a: &BlockMatrix, budget: &Budget) -> Result<(), SearchError> {
    let (r, c) = (a.nrows(), a.ncols());
    if r > budget.max_rows || c > budget.max_cols {
        return Err(SearchError::TooLarge { rows: r, cols: c, max_rows: budget.max_rows, max_cols: budget.max_cols });
    }
    Ok(())
}

/// Result of exploring a whole orbit.
struct Exploration {
    least: Box<[u8]>,
    sparsest: Box<[u8]>,
    split: Option<Box<[u8]>>,
}

/// Walks the orbit; with `stop_on_split` it runs best-first by number of
/// nonzero entries and returns at the first split state.
fn explore(p: &Problem, start: &[u8], budget: &Budget, stop_on_split: bool, order: &[usize]) -> Result<Exploration, SearchError> {
    let mut s0: Box<[u8]> = start.into();
    p.normalize(&mut s0);
    let nnz = |s: &[u8]| s.iter().filter(|&&x| x != 0).count();
    let mut visited: HashSet<Box<[u8]>> = HashSet::new();
    visited.insert(s0.clone());
    let mut least = s0.clone();
    let mut sparsest = s0.clone();
    if stop_on_split && p.component_count(&s0) >= 2 {
        return Ok(Exploration { least, sparsest, split: Some(s0) });
    }
    let mut heap: BinaryHeap<Reverse<(usize, u64, Box<[u8]>)>> = BinaryHeap::new();
    let mut queue: VecDeque<Box<[u8]>> = VecDeque::new();
    let mut seq = 0u64;
    if stop_on_split {
        heap.push(Reverse((nnz(&s0), seq, s0)));
    } else {
        queue.push_back(s0);
    }
    loop {
        let layer: Vec<Box<[u8]>> = if stop_on_split {
            match heap.pop() {
                Some(Reverse((_, _, s))) => vec![s],
                None => break,
            }
        } else {
            if queue.is_empty() {
                break;
            }
            queue.drain(..).collect()
        };
        let succ = expand_layer(p, &layer, order);
        for t in succ {
            if visited.contains(&t) {
                continue;
            }
            if visited.len() >= budget.max_states {
                return Err(SearchError::BudgetExceeded { states: visited.len() });
            }
            visited.insert(t.clone());
            if t < least {
                least = t.clone();
            }
            if nnz(&t) < nnz(&sparsest) {
                sparsest = t.clone();
            }
            if stop_on_split {
                if p.component_count(&t) >= 2 {
                    return Ok(Exploration { least, sparsest, split: Some(t) });
                }
                seq += 1;
                heap.push(Reverse((nnz(&t), seq, t)));
            } else {
                queue.push_back(t);
            }
        }
    }
    Ok(Exploration { least, sparsest, split: None })
}

#[cfg(feature = "parallel")]
fn expand_layer(p: &Problem, layer: &[Box<[u8]>], order: &[usize]) -> Vec<Box<[u8]>> {
    use rayon::prelude::*;
    if layer.len() < 64 {
        return layer.iter().flat_map(|s| p.successors(s, order)).collect();
    }
    let parts: Vec<Vec<Box<[u8]>>> = layer.par_iter().map(|s| p.successors(s, order)).collect();
    parts.into_iter().flatten().collect()
}

#[cfg(not(feature = "parallel"))]
fn expand_layer(p: &Problem, layer: &[Box<[u8]>], order: &[usize]) -> Vec<Box<[u8]>> {
    layer.iter().flat_map(|s| p.successors(s, order)).collect()
}

fn identity_order(p: &Problem) -> Vec<usize> {
    (0..p.gens.len()).collect()
}

fn seeded_order(p: &Problem, seed: u64) -> Vec<usize> {
    let mut order = identity_order(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

/// The lexicographically least matrix (row-major entries) in the orbit.
pub fn canonical_form(a: &BlockMatrix, schema: &TransformSchema, budget: &Budget) -> Result<BlockMatrix, SearchError> {
    check_size(a, budget)?;
    let p = Problem::new(a, schema)?;
    let e = explore(&p, &p.encode(a), budget, false, &identity_order(&p))?;
    Ok(restore(a, &p.decode(&e.least)))
}

// puts entries of a trimmed matrix back into the stripes of `like`
fn restore(like: &BlockMatrix, trimmed: &BlockMatrix) -> BlockMatrix {
    like.with_raw_entries(trimmed.entries().to_vec())
}

/// Decides whether `b` lies in the orbit of `a` (after padding with zero
/// lines to equal stripe dims).
pub fn equivalent(a: &BlockMatrix, b: &BlockMatrix, schema: &TransformSchema, budget: &Budget) -> Result<bool, SearchError> {
    if a.variant() != b.variant() {
        return Err(SearchError::ShapeMismatch);
    }
    if a.shape() != b.shape() {
        return Ok(false);
    }
    check_size(a, budget)?;
    let a = a.trimmed();
    let b = b.trimmed();
    if a.nnz() != 0 && b.nnz() == 0 || a.nnz() == 0 && b.nnz() != 0 {
        return Ok(false);
    }
    let p = Problem::new(&a, schema)?;
    let mut sa: Box<[u8]> = p.encode(&a).into();
    let mut sb: Box<[u8]> = p.encode(&b).into();
    p.normalize(&mut sa);
    p.normalize(&mut sb);
    if sa == sb {
        return Ok(true);
    }
    let order = identity_order(&p);
    let mut seen = [HashSet::new(), HashSet::new()];
    let mut front: [Vec<Box<[u8]>>; 2] = [vec![sa.clone()], vec![sb.clone()]];
    seen[0].insert(sa);
    seen[1].insert(sb);
    loop {
        // grow the smaller nonempty side
        let k = if front[0].is_empty() || (!front[1].is_empty() && front[0].len() > front[1].len()) { 1 } else { 0 };
        if front[k].is_empty() {
            return Ok(false);
        }
        let layer = core::mem::take(&mut front[k]);
        let mut next = Vec::new();
        for t in expand_layer(&p, &layer, &order) {
            if seen[1 - k].contains(&t) {
                return Ok(true);
            }
            if seen[k].contains(&t) {
                continue;
            }
            if seen[0].len() + seen[1].len() >= budget.max_states {
                return Err(SearchError::BudgetExceeded { states: seen[0].len() + seen[1].len() });
            }
            seen[k].insert(t.clone());
            next.push(t);
        }
        if next.is_empty() {
            // one orbit is exhausted without meeting the other
            return Ok(false);
        }
        front[k] = next;
    }
}

/// An indecomposable summand found by [`decompose_detailed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summand {
    /// Least member of the orbit.
    pub canonical: BlockMatrix,
    /// A member of the orbit with the fewest nonzero entries.
    pub sparse: BlockMatrix,
}

/// Splits `a` into indecomposable summands.
pub fn decompose(a: &BlockMatrix, schema: &TransformSchema, budget: &Budget) -> Result<Vec<BlockMatrix>, SearchError> {
    Ok(decompose_detailed(a, schema, budget, 0)?.into_iter().map(|s| s.canonical).collect())
}

/// Like [`decompose`], with generator order shuffled by `seed` and each
/// summand reported with its canonical and sparsest forms. The summands
/// are sorted by canonical form.
pub fn decompose_detailed(a: &BlockMatrix, schema: &TransformSchema, budget: &Budget, seed: u64) -> Result<Vec<Summand>, SearchError> {
    if a.variant() != schema.variant {
        return Err(SearchError::ShapeMismatch);
    }
    let mut out = Vec::new();
    let mut spent = 0usize;
    let mut work = vec![a.trimmed()];
    while let Some(m) = work.pop() {
        let comps = components(&m, schema);
        if comps.len() >= 2 {
            for (r, c) in comps {
                work.push(m.submatrix(&r, &c).trimmed());
            }
            continue;
        }
        if comps.is_empty() {
            continue;
        }
        if m.nrows() + m.ncols() == 1 || (m.nnz() == 0 && comps.len() == 1) {
            out.push(Summand { canonical: m.clone(), sparse: m });
            continue;
        }
        check_size(&m, budget)?;
        let p = Problem::new(&m, schema)?;
        let order = if seed == 0 { identity_order(&p) } else { seeded_order(&p, seed) };
        let left = Budget { max_states: budget.max_states.saturating_sub(spent), ..*budget };
        let e = explore(&p, &p.encode(&m), &left, true, &order)?;
        match e.split {
            Some(s) => {
                spent += 1;
                work.push(p.decode(&s));
            }
            None => {
                out.push(Summand { canonical: p.decode(&e.least), sparse: p.decode(&e.sparsest) });
            }
        }
    }
    out.sort_by_key(|x| summand_key(&x.canonical));
    Ok(out)
}

/// A total order on matrices: shape, then entries.
pub fn summand_key(m: &BlockMatrix) -> (Vec<(StripeLabel, usize)>, Vec<(StripeLabel, usize)>, Vec<i64>) {
    let (r, c) = m.shape();
    (r, c, m.entries().to_vec())
}

/// True if no admissible transformation splits `a`.
pub fn is_indecomposable(a: &BlockMatrix, schema: &TransformSchema, budget: &Budget) -> Result<bool, SearchError> {
    Ok(decompose(a, schema, budget)?.len() == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::Generator::*;

    fn s(k: u8) -> StripeLabel {
        StripeLabel::sphere_row(k)
    }
    fn sc(k: u8) -> StripeLabel {
        StripeLabel::sphere_col(k)
    }

    #[test]
    fn eta_cubed_addition() {
        let sch = TransformSchema::new(Variant::Integral);
        let a = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1), (s(1), 1)], &[(sc(3), 1)], &[(0, 0, 6), (1, 0, 1)]).unwrap();
        let step = TransformStep { side: Side::Row, kind: StepKind::Add { src: 1, dst: 0, k: 1 } };
        assert_eq!(apply(&a, &step, &sch).unwrap().get(0, 0), 18);
        let back = TransformStep { side: Side::Row, kind: StepKind::Add { src: 0, dst: 1, k: 1 } };
        assert!(apply(&a, &back, &sch).is_err());
    }

    #[test]
    fn six_times_sphere_into_cone() {
        let sch = TransformSchema::new(Variant::Integral);
        let a = BlockMatrix::from_entries(
            Variant::Integral,
            &[(s(2), 1), (StripeLabel::row(CetaN2, 0), 1)],
            &[(sc(3), 1)],
            &[(0, 0, 1)],
        )
        .unwrap();
        // rows: S+2, Ceta@0, Ceta@2
        let step = TransformStep { side: Side::Row, kind: StepKind::Add { src: 0, dst: 1, k: 1 } };
        assert_eq!(apply(&a.clone(), &step, &sch).unwrap().get(1, 0), 6);
    }

    #[test]
    fn linked_columns_swap_together() {
        let sch = TransformSchema::new(Variant::Local3);
        let a = BlockMatrix::from_entries(
            Variant::Local3,
            &[(s(0), 1), (s(1), 1)],
            &[(StripeLabel::col(MooreN3(1), 3), 2)],
            &[(0, 0, 1), (1, 3, 2)],
        )
        .unwrap();
        let step = TransformStep { side: Side::Col, kind: StepKind::Swap { a: 0, b: 1 } };
        let b = apply(&a, &step, &sch).unwrap();
        assert_eq!(b.entries(), &[0, 1, 0, 0, 0, 0, 2, 0]);
    }

    #[test]
    fn unit_scaling_orbit() {
        let sch = TransformSchema::new(Variant::Local3);
        let one = BlockMatrix::from_entries(Variant::Local3, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 1)]).unwrap();
        let two = BlockMatrix::from_entries(Variant::Local3, &[(s(0), 1)], &[(sc(3), 1)], &[(0, 0, 2)]).unwrap();
        let b = Budget::default();
        assert!(equivalent(&one, &two, &sch, &b).unwrap());
        assert_eq!(canonical_form(&two, &sch, &b).unwrap(), one);
        assert!(equivalent(&one, &one, &sch, &b).unwrap());
        let z = BlockMatrix::zeros(Variant::Local3, &[(s(0), 1)], &[(sc(3), 1)]).unwrap();
        assert_eq!(canonical_form(&z, &sch, &b).unwrap(), z);
    }

    #[test]
    fn zero_block_splits_into_units() {
        let sch = TransformSchema::new(Variant::Integral);
        let z = BlockMatrix::zeros(Variant::Integral, &[(s(0), 1)], &[(sc(3), 1)]).unwrap();
        let parts = decompose(&z, &sch, &Budget::default()).unwrap();
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn twelve_rule_in_orbit() {
        let sch = TransformSchema::new(Variant::Integral);
        let b = Budget::default();
        for a in 0..24 {
            let x = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1), (s(2), 1)], &[(sc(3), 1)], &[(0, 0, a), (1, 0, 1)]).unwrap();
            let y = BlockMatrix::from_entries(Variant::Integral, &[(s(0), 1), (s(2), 1)], &[(sc(3), 1)], &[(0, 0, (a + 12) % 24), (1, 0, 1)]).unwrap();
            assert!(equivalent(&x, &y, &sch, &b).unwrap());
        }
    }

    #[test]
    fn ext_is_unsupported_by_search() {
        let m = BlockMatrix::from_entries(Variant::IntegralExt, &[(s(3), 1)], &[(sc(3), 1)], &[(0, 0, 9)]).unwrap();
        let sch = TransformSchema::new(Variant::IntegralExt);
        assert!(matches!(canonical_form(&m, &sch, &Budget::default()), Err(SearchError::Unsupported(_))));
    }

    #[test]
    fn budget_is_reported() {
        let sch = TransformSchema::new(Variant::Local3);
        let a = BlockMatrix::from_entries(Variant::Local3, &[(s(0), 2)], &[(sc(3), 2)], &[(0, 0, 1), (1, 1, 1)]).unwrap();
        let tiny = Budget::states(1);
        assert!(matches!(canonical_form(&a, &sch, &tiny), Err(SearchError::BudgetExceeded { .. })));
        let narrow = Budget { max_rows: 1, ..Budget::default() };
        assert!(matches!(canonical_form(&a, &sch, &narrow), Err(SearchError::TooLarge { .. })));
    }
}
