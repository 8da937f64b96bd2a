//! The acceptance criteria, each a deterministic check returning a verdict
//! and a one-line detail. Sample counts, seeds and step bounds are fixed
//! here; every check is exact.

use std::collections::BTreeMap;
use std::error::Error;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stripemat_core::cat2::{enumerate_catalog, CatalogItem2};
use stripemat_core::chains3::{band_iso, decompose3, enumerate_words, realize_band, realize_string, BandObject, Object3, StringObject};
use stripemat_core::congruence::{
    assemble, diagonalize_integral_block, has_closed_string, Anchor, ClassKind, Classifier, Place,
};
use stripemat_core::shape::{all_labels, UnitPolicy};
use stripemat_core::transform::{
    apply, canonical_form, decompose, equivalent, is_indecomposable, scramble, summand_key, Budget, StepKind, TransformStep,
};
use stripemat_core::{crt_combine, crt_split, BlockMatrix, CellRing, Modulus, Residue, Side, StripeLabel, TransformSchema, Variant};

/// Criteria expected to fail; see the decisions ledger.
pub const KNOWN_UNATTAINABLE: &[u8] = &[4];

pub const NAMES: [&str; 11] = [
    "crt exactness",
    "localization functoriality",
    "eta^3 = 12 rule",
    "catalog soundness",
    "string classification",
    "band objects",
    "krull-schmidt recovery",
    "worked example",
    "simultaneous summands and closed strings",
    "integer block",
    "congruence vs equivalence",
];

pub const LOCALIZE_SAMPLES: usize = 200;
pub const LOCALIZE_MAX_DIM: usize = 6;
pub const KS_TRIALS: usize = 100;
pub const KS_MAX_SUMMANDS: usize = 3;
pub const MAX_SCRAMBLE: usize = 20;
pub const SMITH_BLOCKS: usize = 50;
pub const SMITH_MAX_DIM: usize = 4;
pub const PAIR_SAMPLES: usize = 40;
pub const WORD_MAX_LEN: usize = 6;
pub const WORD_MAX_EXP: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = Result<(bool, String), Box<dyn Error>>;

fn rng(id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + id as u64)
}

/// Runs one criterion (1..=11). Internal errors count as failures.
pub fn run(id: u8, budget: &Budget) -> Outcome {
    let res = match id {
        1 => crt_exactness(),
        2 => localization(),
        3 => eta_cubed(budget),
        4 => catalog(budget),
        5 => strings(budget),
        6 => bands(budget),
        7 => krull_schmidt(budget),
        8 => worked_example(budget),
        9 => simultaneous(budget),
        10 => integer_block(),
        11 => congruence_vs_equivalence(budget),
        _ => Err(format!("no criterion {id}").into()),
    };
    let (pass, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, name: NAMES.get(id as usize - 1).copied().unwrap_or("?"), pass, detail }
}

pub fn run_all(budget: &Budget) -> Vec<Outcome> {
    (1..=11).map(|id| run(id, budget)).collect()
}

// ---------------------------------------------------------------------------
// 1

fn crt_exactness() -> Check {
    let mut bad = 0;
    let mut checked = 0;
    for (m, two) in [(Modulus::Z24, Modulus::Z8), (Modulus::Z12, Modulus::Z4)] {
        for x in 0..m.value() as i64 {
            let u = Residue::new(x, m);
            let (a, b) = crt_split(u)?;
            bad += (crt_combine(a, b)? != u) as usize;
            for y in 0..m.value() as i64 {
                let v = Residue::new(y, m);
                let (c, d) = crt_split(v)?;
                bad += (crt_split(u.add(v)?)? != (a.add(c)?, b.add(d)?)) as usize;
                bad += (crt_split(u.mul(v)?)? != (a.mul(c)?, b.mul(d)?)) as usize;
                checked += 2;
            }
        }
        for a in 0..two.value() as i64 {
            for b in 0..3 {
                let (a, b) = (Residue::new(a, two), Residue::new(b, Modulus::Z3));
                bad += (crt_split(crt_combine(a, b)?)? != (a, b)) as usize;
            }
        }
        checked += 2 * m.value() as usize;
    }
    Ok((bad == 0, format!("{checked} identities, {bad} violated")))
}

// ---------------------------------------------------------------------------
// 2

/// A random integral matrix with at most `max` rows and columns, entries
/// uniform in each cell ring.
pub fn random_integral<R: Rng>(rng: &mut R, max: usize) -> BlockMatrix {
    let rows = all_labels(Variant::Integral, Side::Row, 2);
    let cols = all_labels(Variant::Integral, Side::Col, 2);
    loop {
        let pick = |rng: &mut R, ls: &[StripeLabel]| -> Vec<(StripeLabel, usize)> {
            let n = rng.gen_range(1..=3);
            ls.choose_multiple(rng, n).map(|&l| (l, rng.gen_range(1..=2))).collect()
        };
        let (r, c) = (pick(rng, &rows), pick(rng, &cols));
        let Ok(mut m) = BlockMatrix::zeros(Variant::Integral, &r, &c) else { continue };
        if m.nrows() > max || m.ncols() > max {
            continue;
        }
        fill(rng, &mut m);
        return m;
    }
}

fn fill<R: Rng>(rng: &mut R, m: &mut BlockMatrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let x = match m.ring(i, j) {
                CellRing::Zero => 0,
                r => match r.size() {
                    Some(s) => rng.gen_range(0..s as i64),
                    None => rng.gen_range(-9..=9),
                },
            };
            m.set(i, j, x);
        }
    }
}

/// For each line of `s = a ⊕ b`: whether it came from `b`, and its line
/// there. `direct_sum` puts the lines of `a` first inside every stripe.
fn sum_origin(a: &BlockMatrix, b: &BlockMatrix, s: &BlockMatrix, side: Side) -> Vec<(bool, usize)> {
    let mut out = Vec::with_capacity(s.len(side));
    for st in s.stripes(side) {
        let (ra, rb) = (a.lines_of(&st.label), b.lines_of(&st.label));
        out.extend(ra.map(|i| (false, i)));
        out.extend(rb.map(|i| (true, i)));
    }
    out
}

/// Line of `la ⊕ lb` holding line `i` of `la` (or of `lb` when `from_b`).
fn sum_position(la: &BlockMatrix, lb: &BlockMatrix, sum: &BlockMatrix, side: Side, from_b: bool, i: usize) -> usize {
    let src = if from_b { lb } else { la };
    let label = src.label(side, i);
    let skip = if from_b { la.lines_of(&label).len() } else { 0 };
    sum.lines_of(&label).start + skip + (i - src.lines_of(&label).start)
}

/// `localize(a ⊕ b)` equals `localize(a) ⊕ localize(b)` once lines are
/// matched through their integral origin.
fn localize_commutes(a: &BlockMatrix, b: &BlockMatrix, s: &BlockMatrix, p: u8) -> Result<bool, Box<dyn Error>> {
    let (la, lb, ls) = (a.localize(p)?, b.localize(p)?, s.localize(p)?);
    let right = la.direct_sum(&lb)?;
    if ls.shape() != right.shape() {
        return Ok(false);
    }
    let mut perm = [vec![usize::MAX; ls.nrows()], vec![usize::MAX; ls.ncols()]];
    for (k, side) in [Side::Row, Side::Col].into_iter().enumerate() {
        let (ms, ma, mb) = (s.local_line_map(p, side)?, a.local_line_map(p, side)?, b.local_line_map(p, side)?);
        for (line, (from_b, i)) in sum_origin(a, b, s, side).into_iter().enumerate() {
            let own = if from_b { mb[i] } else { ma[i] };
            match (ms[line], own) {
                (Some(x), Some(y)) => perm[k][x] = sum_position(&la, &lb, &right, side, from_b, y),
                (None, None) => {}
                _ => return Ok(false),
            }
        }
    }
    if perm.iter().flatten().any(|&x| x == usize::MAX) {
        return Ok(false);
    }
    Ok((0..ls.nrows()).all(|i| (0..ls.ncols()).all(|j| ls.get(i, j) == right.get(perm[0][i], perm[1][j]))))
}

fn localization() -> Check {
    let mut rng = rng(2);
    let mut bad = Vec::new();
    for t in 0..LOCALIZE_SAMPLES {
        let a = random_integral(&mut rng, LOCALIZE_MAX_DIM / 2);
        let b = random_integral(&mut rng, LOCALIZE_MAX_DIM / 2);
        let s = a.direct_sum(&b)?;
        for p in [2, 3] {
            if !localize_commutes(&a, &b, &s, p)? {
                bad.push(format!("sum@{p}#{t}"));
            }
        }
        for m in [&a, &s] {
            let back = stripemat_core::congruence::merge_like(&m.localize(2)?, &m.localize(3)?, m)?;
            if back.trimmed() != m.trimmed() {
                bad.push(format!("merge#{t}"));
            }
        }
    }
    Ok((bad.is_empty(), format!("{LOCALIZE_SAMPLES} pairs, failures {bad:?}")))
}

// ---------------------------------------------------------------------------
// 3

fn family(a: i64, b: i64, c: i64) -> Result<BlockMatrix, Box<dyn Error>> {
    let rows = [(StripeLabel::sphere_row(0), 1), (StripeLabel::sphere_row(1), 1)];
    let cols = [(StripeLabel::sphere_col(3), 1), (StripeLabel::sphere_col(4), 1)];
    Ok(BlockMatrix::from_entries(Variant::Integral, &rows, &cols, &[(0, 0, a), (1, 0, b), (1, 1, c)])?)
}

fn eta_cubed(budget: &Budget) -> Check {
    let sch = TransformSchema::new(Variant::Integral);
    // adding the S+1 row to the S+0 row carries the Z/2 cell into Z/24 as 12
    let step = TransformStep { side: Side::Row, kind: StepKind::Add { src: 1, dst: 0, k: 1 } };
    let mut bad = Vec::new();
    for a in 0..24 {
        for c in 0..24 {
            let x = family(a, 1, c)?;
            let y = family((a + 12) % 24, 1, c)?;
            if apply(&x, &step, &sch)? != y || !equivalent(&x, &y, &sch, budget)? {
                bad.push((a, c));
            }
        }
    }
    // without the Z/2 entry the shift is not always available
    let controls = [(0, 0), (4, 0), (4, 5)];
    let mut leaked = Vec::new();
    for &(a, c) in &controls {
        if equivalent(&family(a, 0, c)?, &family((a + 12) % 24, 0, c)?, &sch, budget)? {
            leaked.push((a, c));
        }
    }
    let pass = bad.is_empty() && leaked.is_empty();
    Ok((pass, format!("576 pairs, {} not joined; controls {controls:?}, {} joined", bad.len(), leaked.len())))
}

// ---------------------------------------------------------------------------
// 4

fn catalog(budget: &Budget) -> Check {
    let sch = TransformSchema::new(Variant::Local2);
    let items = enumerate_catalog();
    let mut split = Vec::new();
    let mut seen: BTreeMap<_, String> = BTreeMap::new();
    let mut same = Vec::new();
    for it in &items {
        let m = it.matrix();
        if !is_indecomposable(&m, &sch, budget)? {
            split.push(it.to_string());
        }
        let key = summand_key(&canonical_form(&m.trimmed(), &sch, budget)?);
        if let Some(prev) = seen.insert(key, it.to_string()) {
            same.push(format!("{prev} ~ {it}"));
        }
    }
    let shown: Vec<&String> = split.iter().take(4).collect();
    Ok((
        split.is_empty() && same.is_empty(),
        format!(
            "{} instances, {} split (e.g. {shown:?}), {} equivalent pairs {same:?}",
            items.len(),
            split.len(),
            same.len()
        ),
    ))
}

// ---------------------------------------------------------------------------
// 5

fn strings(budget: &Budget) -> Check {
    let sch = TransformSchema::new(Variant::Local3);
    let words = enumerate_words(WORD_MAX_LEN, WORD_MAX_EXP);
    let mut dec = Vec::new();
    let mut clash = Vec::new();
    let mut inv = Vec::new();
    let mut seen: BTreeMap<_, String> = BTreeMap::new();
    for w in &words {
        let m = realize_string(w.word())?;
        if !is_indecomposable(&m, &sch, budget)? {
            dec.push(w.to_string());
        }
        if let Some(prev) = seen.insert(summand_key(&canonical_form(&m.trimmed(), &sch, budget)?), w.to_string()) {
            clash.push(format!("{prev} ~ {w}"));
        }
        let r = realize_string(&w.word().inverse())?;
        if !equivalent(&m, &r, &sch, budget)? {
            inv.push(w.to_string());
        }
    }
    let pass = dec.is_empty() && clash.is_empty() && inv.is_empty();
    Ok((
        pass,
        format!(
            "{} words; decomposable {dec:?}; equivalent distinct {clash:?}; inverse not equivalent {inv:?}",
            words.len()
        ),
    ))
}

// ---------------------------------------------------------------------------
// 6

/// `B(w,1,t-1)`, `B(w,1,t+1)` and `B(w,2,t-1)` on the shortest cycle.
pub fn test_bands() -> Vec<BandObject> {
    ["band(f1 ~ ft1 - et1 ~ e1; z=1; pi=2,1)", "band(f1 ~ ft1 - et1 ~ e1; z=1; pi=1,1)", "band(f1 ~ ft1 - et1 ~ e1; z=2; pi=2,1)"]
        .iter()
        .map(|s| s.parse().expect("band literal"))
        .collect()
}

fn bands(budget: &Budget) -> Check {
    let sch = TransformSchema::new(Variant::Local3);
    let bs = test_bands();
    let ms: Vec<BlockMatrix> = bs.iter().map(realize_band).collect::<Result<_, _>>()?;
    let mut bad = Vec::new();
    for (b, m) in bs.iter().zip(&ms) {
        if !is_indecomposable(m, &sch, budget)? {
            bad.push(format!("{b} splits"));
        }
    }
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            if ms[i].shape() == ms[j].shape() && equivalent(&ms[i], &ms[j], &sch, budget)? {
                bad.push(format!("{} ~ {}", bs[i], bs[j]));
            }
        }
    }
    let mut rng = rng(6);
    let mut recovered = 0;
    for (b, m) in bs.iter().zip(&ms) {
        for _ in 0..4 {
            let s = scramble(m, &sch, MAX_SCRAMBLE, &mut rng);
            match decompose3(&s, budget)?.as_slice() {
                [Object3::Band(g)] if g.z == b.z && g.pi == b.pi && band_iso(g, b, budget)? => recovered += 1,
                other => bad.push(format!("{b} read as {other:?}")),
            }
        }
    }
    Ok((bad.is_empty(), format!("3 bands, {recovered}/12 scrambles recovered; problems {bad:?}")))
}

// ---------------------------------------------------------------------------
// 7

enum Pool {
    Two(Vec<BlockMatrix>),
    Three(Vec<(Object3, BlockMatrix)>),
}

fn same_objects(got: &[Object3], want: &[Object3], budget: &Budget) -> Result<bool, Box<dyn Error>> {
    let mut left: Vec<&Object3> = want.iter().collect();
    for g in got {
        let mut hit = None;
        for (k, w) in left.iter().enumerate() {
            let eq = match (g, w) {
                (Object3::Band(x), Object3::Band(y)) => band_iso(x, y, budget)?,
                (x, y) => x == *y,
            };
            if eq {
                hit = Some(k);
                break;
            }
        }
        match hit {
            Some(k) => {
                left.remove(k);
            }
            None => return Ok(false),
        }
    }
    Ok(left.is_empty())
}

fn krull_schmidt(budget: &Budget) -> Check {
    let s2 = TransformSchema::new(Variant::Local2);
    let s3 = TransformSchema::new(Variant::Local3);
    let mut two = Vec::new();
    for it in enumerate_catalog() {
        let m = it.matrix().trimmed();
        if is_indecomposable(&m, &s2, budget)? {
            two.push(m);
        }
    }
    let mut three: Vec<(Object3, BlockMatrix)> = Vec::new();
    for w in enumerate_words(4, 1) {
        let m = realize_string(w.word())?;
        three.push((Object3::String(w), m));
    }
    for b in test_bands() {
        let m = realize_band(&b)?;
        three.push((Object3::Band(b), m));
    }
    let pools = [Pool::Two(two), Pool::Three(three)];
    let mut rng = rng(7);
    let mut bad = Vec::new();
    let cap = LOCALIZE_MAX_DIM;
    for t in 0..KS_TRIALS {
        let pool = &pools[t % 2];
        let want = rng.gen_range(1..=KS_MAX_SUMMANDS);
        let mut parts: Vec<BlockMatrix> = Vec::new();
        let mut objs: Vec<Object3> = Vec::new();
        let (mut r, mut c) = (0, 0);
        let mut tries = 0;
        while parts.len() < want && tries < 50 {
            tries += 1;
            let (m, o) = match pool {
                Pool::Two(v) => (v[rng.gen_range(0..v.len())].clone(), None),
                Pool::Three(v) => {
                    let (o, m) = &v[rng.gen_range(0..v.len())];
                    (m.clone(), Some(o.clone()))
                }
            };
            if r + m.nrows() > cap || c + m.ncols() > cap {
                continue;
            }
            r += m.nrows();
            c += m.ncols();
            parts.push(m);
            objs.extend(o);
        }
        let (variant, sch) = match pool {
            Pool::Two(_) => (Variant::Local2, &s2),
            Pool::Three(_) => (Variant::Local3, &s3),
        };
        let sum = BlockMatrix::direct_sum_all(variant, &parts)?;
        let steps = rng.gen_range(1..=MAX_SCRAMBLE);
        let x = scramble(&sum, sch, steps, &mut rng);
        let mut expect = Vec::new();
        for p in &parts {
            expect.push(canonical_form(&p.trimmed(), sch, budget)?);
        }
        expect.sort_by_key(summand_key);
        let got = decompose(&x, sch, budget)?;
        if got != expect {
            bad.push(format!("trial {t}: {} summands in, {} out", expect.len(), got.len()));
            continue;
        }
        if variant == Variant::Local3 && !same_objects(&decompose3(&x, budget)?, &objs, budget)? {
            bad.push(format!("trial {t}: objects differ"));
        }
    }
    Ok((bad.is_empty(), format!("{KS_TRIALS} trials, failures {bad:?}")))
}

// ---------------------------------------------------------------------------
// 8, 9: fixtures

/// `(v₀η²ω₀)⁰₀`, the center of the worked example.
pub fn center() -> CatalogItem2 {
    CatalogItem2::new(24, Some(1), Some(1)).expect("center")
}

fn so(w: &str) -> StringObject {
    StringObject::new(w.parse().expect("word literal")).expect("valid word")
}

type Placed<'a> = (&'a str, &'a [(Anchor, Place)]);

fn placed(items: &[CatalogItem2], strings: &[Placed]) -> BlockMatrix {
    let strings: Vec<(StringObject, Vec<(Anchor, Place)>)> = strings.iter().map(|(w, p)| (so(w), p.to_vec())).collect();
    assemble(items, &strings).expect("fixture assembles")
}

const LONG_E0_S3: &str = "e0 - f1 ~ ft1 - et1 ~ e1 - f0";
const LONG_E1_S4: &str = "e'0 - ft1 ~ f1 - e1 ~ et1 - f'0";
const X: Place = Place::Item(0);

use Anchor::{E0, E1, S3, S4};

/// Case (iv): `M(S⁰,S³)` on both ends, `M(S¹)_e` and `M(S⁴)_f` hanging.
pub fn case_iv() -> BlockMatrix {
    placed(&[center()], &[(LONG_E0_S3, &[(E0, X), (S3, X)]), ("e'0 - ft1 ~ f1", &[(E1, X)]), ("f'0 - et1 ~ e1", &[(S4, X)])])
}

/// Case (v): four hanging strings.
pub fn case_v() -> BlockMatrix {
    placed(
        &[center()],
        &[
            ("e0 - f1 ~ ft1", &[(E0, X)]),
            ("e'0 - ft1 ~ f1", &[(E1, X)]),
            ("f0 - e1 ~ et1", &[(S3, X)]),
            ("f'0 - et1 ~ e1", &[(S4, X)]),
        ],
    )
}

/// The (i2) completion: a second node `C_{η²}^{n+4}` reached through
/// `M(S⁴, e′₀)`, carrying one more `M(S³)_f`.
pub fn case_i2() -> BlockMatrix {
    let ch4 = CatalogItem2::new(8, None, None).expect("C_eta2^{n+4}");
    placed(
        &[center(), ch4],
        &[
            ("e0 - f1 ~ ft1 - e'0", &[(E0, X), (E1, X)]),
            ("f0 - e1 ~ et1", &[(S3, X)]),
            ("e'0 - f'0", &[(S4, X), (E1, Place::Item(1))]),
            ("f0 - e2 ~ et2", &[(S3, Place::Item(1))]),
        ],
    )
}

/// `M(e₀,S³)` and `M(e′₀,S⁴)` both attached at their two ends.
pub fn doubly_attached() -> BlockMatrix {
    placed(&[center()], &[(LONG_E0_S3, &[(E0, X), (S3, X)]), (LONG_E1_S4, &[(E1, X), (S4, X)])])
}

/// [`doubly_attached`] next to a free `M(S³)_f`.
pub fn doubly_attached_with_free() -> BlockMatrix {
    placed(
        &[center()],
        &[(LONG_E0_S3, &[(E0, X), (S3, X)]), (LONG_E1_S4, &[(E1, X), (S4, X)]), ("f0 - e1 ~ et1", &[(S3, Place::Unit)])],
    )
}

/// `M(e₀,e′₀)` and `M(S³,S⁴)` both attached at their two ends.
pub fn cross_attached() -> BlockMatrix {
    placed(&[center()], &[("e0 - f1 ~ ft1 - e'0", &[(E0, X), (E1, X)]), ("f0 - e1 ~ et1 - f'0", &[(S3, X), (S4, X)])])
}

/// `M(e₀,e′₀)` from the center by e₀ and `M(S⁴,e′₀)` by S⁴, their other
/// ends joined through `second` and a third node.
pub fn closed_configuration(second: CatalogItem2) -> BlockMatrix {
    placed(
        &[center(), second, center()],
        &[
            ("e0 - f1 ~ ft1 - e'0", &[(E0, X), (E1, Place::Item(1))]),
            ("e'0 - f'0", &[(S4, X), (E1, Place::Item(2))]),
            ("f0 - e1 ~ et1 - f'0", &[(S3, Place::Item(2)), (S4, Place::Item(1))]),
        ],
    )
}

fn kinds(c: &Classifier, m: &BlockMatrix) -> Result<(Vec<ClassKind>, bool), Box<dyn Error>> {
    let out = c.classify(m)?;
    let closed = out.iter().any(|x| has_closed_string(&x.graph));
    Ok((out.iter().map(|x| x.kind).collect(), closed))
}

fn worked_example(budget: &Budget) -> Check {
    let c = Classifier::new(budget)?;
    let sch = TransformSchema::new(Variant::Integral);
    let mut rng = rng(8);
    let mut got = Vec::new();
    let mut pass = true;
    for (tag, m, k) in [("iv", case_iv(), 17), ("v", case_v(), 19), ("i2", case_i2(), 20)] {
        let want = vec![ClassKind::ListStar(k)];
        let (plain, _) = kinds(&c, &m)?;
        let (mixed, _) = kinds(&c, &scramble(&m, &sch, MAX_SCRAMBLE, &mut rng))?;
        pass &= plain == want && mixed == want;
        got.push(format!("{tag}: {plain:?}/{mixed:?}"));
    }
    Ok((pass, got.join("; ")))
}

fn simultaneous(budget: &Budget) -> Check {
    let c = Classifier::new(budget)?;
    let mut bad = Vec::new();
    let expect = [
        ("pairs", doubly_attached(), vec![ClassKind::ListStar(16)]),
        ("pairs+free", doubly_attached_with_free(), vec![ClassKind::Local3String, ClassKind::ListStar(16)]),
        ("cross pairs", cross_attached(), vec![ClassKind::ListStar(16)]),
    ];
    for (tag, m, want) in expect {
        let (got, closed) = kinds(&c, &m)?;
        if got != want || closed {
            bad.push(format!("{tag}: {got:?}"));
        }
    }
    let seconds = [
        CatalogItem2::new(2, None, Some(1))?,
        CatalogItem2::new(11, None, Some(1))?,
        center(),
    ];
    let mut tested = 0;
    for s in seconds {
        let m = closed_configuration(s);
        let out = c.classify(&m)?;
        let parts: Vec<BlockMatrix> = out.iter().map(|x| x.matrix.clone()).collect();
        let sum = BlockMatrix::direct_sum_all(Variant::Integral, &parts)?;
        if out.iter().any(|x| has_closed_string(&x.graph)) || !c.congruent(&m, &sum)? {
            bad.push(format!("closed via {s}"));
        }
        tested += 1;
    }
    let mut rng = rng(9);
    for t in 0..30 {
        let m = random_integral(&mut rng, LOCALIZE_MAX_DIM);
        if kinds(&c, &m)?.1 {
            bad.push(format!("random #{t} closed"));
        }
        tested += 1;
    }
    Ok((bad.is_empty(), format!("3 split fixtures, {tested} closed-string probes; problems {bad:?}")))
}

// ---------------------------------------------------------------------------
// 10

fn det(mut a: Vec<Vec<i128>>) -> i128 {
    // fraction-free elimination
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Invariant factors from determinantal divisors, largest first, zeros
/// last.
pub fn smith_oracle(a: &[Vec<i64>]) -> Vec<i64> {
    let (k, l) = (a.len(), a[0].len());
    let n = k.min(l);
    let mut d = vec![1i128];
    for s in 1..=n {
        let mut g = 0i128;
        for rs in subsets(k, s) {
            for cs in subsets(l, s) {
                let m = rs.iter().map(|&i| cs.iter().map(|&j| a[i][j] as i128).collect()).collect();
                g = gcd(g, det(m));
            }
        }
        d.push(g);
    }
    let mut f: Vec<i64> = (1..=n).map(|s| if d[s] == 0 { 0 } else { (d[s] / d[s - 1]) as i64 }).collect();
    f.sort_by_key(|&x| if x == 0 { i64::MAX } else { -x });
    f
}

fn unimodular<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
    if n < 2 {
        return u;
    }
    for _ in 0..6 {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let k = rng.gen_range(-2..=2);
        let src = u[j].clone();
        for (x, y) in u[i].iter_mut().zip(&src) {
            *x += k * y;
        }
        if rng.gen_bool(0.3) {
            u.swap(i, j);
        }
    }
    u
}

fn mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

/// The three rigid items at exponent `r`, as integral-ext matrices.
pub fn rigid_items(r: u32) -> Vec<(String, BlockMatrix)> {
    use stripemat_core::Generator::{Ceta2N3, CetaN2};
    let s3r = StripeLabel::sphere_row(3);
    let s3c = [(StripeLabel::sphere_col(3), 1)];
    let lam = 3i64.pow(r);
    let mk = |top: StripeLabel, x: i64| {
        // the S+3 row sorts before the cone rows
        let (ti, si) = if top < s3r { (0, 1) } else { (1, 0) };
        let rows = [(top, 1), (s3r, 1)];
        BlockMatrix::from_entries(Variant::IntegralExt, &rows, &s3c, &[(ti, 0, x), (si, 0, lam)]).expect("rigid item")
    };
    vec![
        (format!("liststarstar C_8^{{n+4}}({r}) r={r}"), mk(StripeLabel::sphere_row(0), 8)),
        (format!("liststarstar (eta.4)_0^1({r}) r={r}"), mk(StripeLabel::row(CetaN2, 0), 4)),
        (format!("liststarstar (eta2.4)_0^1({r}) r={r}"), mk(StripeLabel::row(Ceta2N3, 0), 4)),
    ]
}

fn integer_block() -> Check {
    let mut rng = rng(10);
    let mut bad = Vec::new();
    for t in 0..SMITH_BLOCKS {
        let k = rng.gen_range(1..=SMITH_MAX_DIM);
        let l = rng.gen_range(1..=SMITH_MAX_DIM);
        let mut d = vec![vec![0i64; l]; k];
        for (i, row) in d.iter_mut().enumerate().take(k.min(l)) {
            row[i] = [0, 1, 3, 9, 27][rng.gen_range(0..5)];
        }
        let a = mul(&mul(&unimodular(&mut rng, k), &d), &unimodular(&mut rng, l));
        let rows = [(StripeLabel::sphere_row(3), k)];
        let cols = [(StripeLabel::sphere_col(3), l)];
        let mut m = BlockMatrix::zeros(Variant::IntegralExt, &rows, &cols)?;
        for (i, row) in a.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        let got = diagonalize_integral_block(&m)?;
        let want = smith_oracle(&a);
        let diag_ok = (0..k).all(|i| (0..l).all(|j| got.matrix.get(i, j) == if i == j { want[i] } else { 0 }));
        if got.diagonal != want || !diag_ok || !got.cofactors.is_empty() {
            bad.push(format!("#{t}: {:?} vs {want:?}", got.diagonal));
        }
    }
    let c = Classifier::new(&Budget::default())?;
    let sch = TransformSchema::new(Variant::IntegralExt);
    let other = BlockMatrix::from_entries(
        Variant::IntegralExt,
        &[(StripeLabel::sphere_row(0), 1)],
        &[(StripeLabel::sphere_col(3), 1)],
        &[(0, 0, 9)],
    )?;
    let mut splits = 0;
    for r in 1..=2 {
        for (name, item) in rigid_items(r) {
            let alone: Vec<String> = c.classify(&item)?.iter().map(|x| x.to_string()).collect();
            if alone != [name.clone()] {
                bad.push(format!("{name} read as {alone:?}"));
                continue;
            }
            let sum = item.direct_sum(&other)?;
            for _ in 0..3 {
                let x = scramble(&sum, &sch, MAX_SCRAMBLE, &mut rng);
                let out: Vec<String> = c.classify(&x)?.iter().map(|x| x.to_string()).collect();
                if out.len() == 2 && out.iter().filter(|s| **s == name).count() == 1 {
                    splits += 1;
                } else {
                    bad.push(format!("{name} + C_v: {out:?}"));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("{SMITH_BLOCKS} blocks vs oracle, {splits}/18 rigid splits; problems {bad:?}")))
}

// ---------------------------------------------------------------------------
// 11

fn congruence_vs_equivalence(budget: &Budget) -> Check {
    let c = Classifier::new(budget)?;
    let sch = TransformSchema::new(Variant::Integral);
    let mut rng = rng(11);
    let (mut pairs, mut equiv, mut skipped) = (0, 0, 0);
    let mut bad = Vec::new();
    for t in 0..PAIR_SAMPLES {
        let a = random_integral(&mut rng, 3);
        let mut b = a.clone();
        fill(&mut rng, &mut b);
        let s = scramble(&a, &sch, MAX_SCRAMBLE, &mut rng);
        for y in [b, s] {
            pairs += 1;
            match equivalent(&a, &y, &sch, budget) {
                Ok(true) => {
                    equiv += 1;
                    if !c.congruent(&a, &y)? {
                        bad.push(t);
                    }
                }
                Ok(false) => {}
                Err(_) => skipped += 1,
            }
        }
    }
    let one = |v: i64| {
        BlockMatrix::from_entries(Variant::Integral, &[(StripeLabel::sphere_row(0), 1)], &[(StripeLabel::sphere_col(3), 1)], &[(0, 0, v)])
    };
    let (w1, w17) = (one(1)?, one(17)?);
    let cong = c.congruent(&w1, &w17)?;
    let signs = TransformSchema::with_units(Variant::Integral, UnitPolicy::SignOnly);
    let eq_sign = equivalent(&w1, &w17, &signs, budget)?;
    let eq_full = equivalent(&w1, &w17, &sch, budget)?;
    Ok((
        bad.is_empty() && cong,
        format!(
            "{pairs} pairs, {equiv} equivalent, {skipped} over budget, {} equivalent but not congruent; \
             witness Z/24 1 vs 17: congruent {cong}, equivalent with signs only {eq_sign}, with all units {eq_full}",
            bad.len()
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_small_cases() {
        assert_eq!(det(vec![vec![2, 1], vec![7, 4]]), 1);
        assert_eq!(det(vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 5]]), -5);
        assert_eq!(smith_oracle(&[vec![2, 4], vec![6, 8]]), [4, 2]);
        assert_eq!(smith_oracle(&[vec![3, 0], vec![0, 9]]), [9, 3]);
        assert_eq!(smith_oracle(&[vec![0, 0], vec![0, 3]]), [3, 0]);
        assert_eq!(smith_oracle(&[vec![6, 10, 15]]), [1]);
    }

    #[test]
    fn fixtures_have_expected_shape() {
        assert_eq!(case_v().nrows(), 6);
        assert_eq!(rigid_items(1).len(), 3);
        assert_eq!(test_bands()[2].z, 2);
    }
}
