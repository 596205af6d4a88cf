//! The small quantum ring of the pair, computed two independent ways:
//! an exact lattice-monoid model, and a constraint solver that is given
//! only the two gradings, commutativity, the identity, one seed product
//! and associativity. Also here: three-point invariants of any degree,
//! the string/dilaton/divisor rewrite moves, an invariant provider
//! closed under those moves, and residual checks for the two exchange
//! identities (WDVV and TRR).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::insertions::{dual_basis_element, InsClass, PairContext};
use crate::linalg::RowReducer;
use crate::rat::{rat_i, Rat};

/// True when (a, b) lies in the index monoid: the open upper half
/// lattice together with the nonnegative part of the horizontal axis
/// (origin included).
pub fn lattice_point_ok(a: i64, b: i64) -> bool {
    b >= 1 || (b == 0 && a >= 0)
}

/// An element of the monoid algebra: a finite rational combination of
/// lattice points. The first coordinate tracks contact order, the
/// second the divisor-power bookkeeping; the identity is the origin.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MonoidElem {
    terms: BTreeMap<(i64, i64), Rat>,
}

impl MonoidElem {
    pub fn zero() -> Self {
        MonoidElem::default()
    }

    pub fn point(a: i64, b: i64) -> Result<Self> {
        if !lattice_point_ok(a, b) {
            return Err(Error::Unsupported(format!(
                "lattice point ({a}, {b}) is outside the index monoid"
            )));
        }
        let mut m = MonoidElem::zero();
        m.add_term((a, b), rat_i(1));
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), &Rat)> {
        self.terms.iter().map(|(p, c)| (*p, c))
    }

    pub fn add(&self, other: &MonoidElem) -> MonoidElem {
        let mut out = self.clone();
        for (p, c) in other.terms() {
            out.add_term(p, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> MonoidElem {
        if c.is_zero() {
            return MonoidElem::zero();
        }
        MonoidElem { terms: self.terms.iter().map(|(p, v)| (*p, v * c)).collect() }
    }

    fn add_term(&mut self, p: (i64, i64), c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(p).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&p);
        }
    }
}

/// Convolution product. The support stays inside the monoid because
/// the monoid is closed under addition.
pub fn monoid_mult(u: &MonoidElem, v: &MonoidElem) -> MonoidElem {
    let mut out = MonoidElem::zero();
    for (p, a) in u.terms() {
        for (q, b) in v.terms() {
            out.add_term((p.0 + q.0, p.1 + q.1), a * b);
        }
    }
    out
}

/// A q-power series with insertion-class coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct QSeriesClass {
    ctx: PairContext,
    terms: BTreeMap<u32, InsClass>,
}

impl QSeriesClass {
    pub fn zero(ctx: PairContext) -> Self {
        QSeriesClass { ctx, terms: BTreeMap::new() }
    }

    pub fn ctx(&self) -> PairContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: u32) -> InsClass {
        self.terms.get(&m).cloned().unwrap_or_else(|| InsClass::zero(self.ctx))
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &InsClass)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn add_term(&mut self, m: u32, c: &InsClass) -> Result<()> {
        if c.ctx() != self.ctx {
            return Err(Error::RingMismatch("q-series terms share one context".into()));
        }
        if c.is_zero() {
            return Ok(());
        }
        let cur = self.coefficient(m);
        let sum = cur.add(c)?;
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
        Ok(())
    }

    /// Drops every term of q-exponent above the cutoff.
    pub fn truncate(&self, qmax: u32) -> QSeriesClass {
        QSeriesClass {
            ctx: self.ctx,
            terms: self.terms.iter().filter(|(m, _)| **m <= qmax).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = Vec::new();
        for (m, c) in self.terms() {
            let body = c.render();
            let body = if body.contains(" + ") { format!("({body})") } else { body };
            out.push(match m {
                0 => body,
                1 => format!("q * {body}"),
                _ => format!("q^{m} * {body}"),
            });
        }
        out.join(" + ")
    }
}

impl fmt::Display for QSeriesClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// The lattice point carrying one basis class: index-zero classes sit
/// on the vertical axis, positive-index classes keep their exponent,
/// negative-index classes are shifted one step up.
fn basis_point(i: i64, k: usize) -> (i64, i64) {
    if i >= 0 {
        (i, k as i64)
    } else {
        (i, k as i64 + 1)
    }
}

/// The basis class a lattice point carries, when it carries one.
fn point_basis(n: usize, a: i64, b: i64) -> Option<(i64, usize)> {
    let n = n as i64;
    if a == 0 {
        if (0..=n).contains(&b) {
            Some((0, b as usize))
        } else {
            None
        }
    } else if a > 0 {
        if (0..n).contains(&b) {
            Some((a, b as usize))
        } else {
            None
        }
    } else if (1..=n).contains(&b) {
        Some((a, (b - 1) as usize))
    } else {
        None
    }
}

/// Linear extension of the dictionary sending basis classes to lattice
/// points.
pub fn ins_to_monoid(c: &InsClass) -> MonoidElem {
    let mut out = MonoidElem::zero();
    for (i, part) in c.parts() {
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if !coeff.is_zero() {
                out.add_term(basis_point(i, k), coeff.clone());
            }
        }
    }
    out
}

/// Writes a monoid element as a q-series of insertion classes. Every
/// lattice point must be a dictionary point shifted by a power of the
/// q-direction (1, n); the shift is unique and the uniqueness is
/// checked, not assumed.
pub fn monoid_to_qseries(u: &MonoidElem, ctx: PairContext) -> Result<QSeriesClass> {
    let n = ctx.n as i64;
    let mut out = QSeriesClass::zero(ctx);
    for ((a, b), coeff) in u.terms() {
        let mut found: Option<(u32, (i64, usize))> = None;
        for m in 0..=(b / n) {
            let (a2, b2) = (a - m, b - m * n);
            if !lattice_point_ok(a2, b2) {
                continue;
            }
            if let Some(label) = point_basis(ctx.n, a2, b2) {
                if found.is_some() {
                    return Err(Error::Inconsistent(format!(
                        "lattice point ({a}, {b}) decomposes in two ways"
                    )));
                }
                found = Some((m as u32, label));
            }
        }
        let Some((m, (i, k))) = found else {
            return Err(Error::Undecomposable { a, b });
        };
        let cls = InsClass::basis_class(ctx, i, k)?.scale(coeff);
        out.add_term(m, &cls)?;
    }
    Ok(out)
}

/// The quantum product through the lattice model, truncated at the
/// q-cutoff. Errors when a result component falls outside the window.
pub fn quantum_product_small(u: &InsClass, v: &InsClass, qmax: u32) -> Result<QSeriesClass> {
    if u.ctx() != v.ctx() {
        return Err(Error::RingMismatch("product operands share one context".into()));
    }
    let prod = monoid_mult(&ins_to_monoid(u), &ins_to_monoid(v));
    Ok(monoid_to_qseries(&prod, u.ctx())?.truncate(qmax))
}

/// The q^0 part.
pub fn classical_limit(s: &QSeriesClass) -> InsClass {
    s.coefficient(0)
}

type BasisLabel = (i64, usize);
type PairKey = (BasisLabel, BasisLabel);

fn pair_key(a: BasisLabel, b: BasisLabel) -> PairKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EntryStatus {
    Determined,
    Undetermined,
}

/// One q-coefficient of one basis product, expanded over the window
/// basis. A determined entry with no coefficients is zero inside the
/// window.
#[derive(Clone, PartialEq, Debug)]
pub struct ProductEntry {
    pub status: EntryStatus,
    pub coeffs: BTreeMap<BasisLabel, Rat>,
}

/// Products of window basis classes, coefficient by coefficient in q.
/// The table speaks only about components inside the window.
#[derive(Clone, Debug)]
pub struct StructureTable {
    pub ctx: PairContext,
    pub qmax: u32,
    entries: BTreeMap<PairKey, Vec<ProductEntry>>,
}

impl StructureTable {
    /// The entry for an unordered pair at one q-exponent.
    pub fn entry(&self, a: BasisLabel, b: BasisLabel, m: u32) -> Option<&ProductEntry> {
        self.entries.get(&pair_key(a, b)).and_then(|v| v.get(m as usize))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (PairKey, &Vec<ProductEntry>)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }
}

fn neg_shift(i: i64) -> i64 {
    if i < 0 {
        1
    } else {
        0
    }
}

/// Where the two gradings allow the q^m component of a basis pair
/// product to live: nowhere, at one window basis class, or at a class
/// beyond the window.
enum Candidate {
    Zero,
    InWindow(BasisLabel),
    Outside,
}

fn candidate(ctx: PairContext, e1: BasisLabel, e2: BasisLabel, m: u32) -> Candidate {
    let i = e1.0 + e2.0 - m as i64;
    let d2 = e1.1 as i64 + neg_shift(e1.0) + e2.1 as i64 + neg_shift(e2.0) - m as i64 * ctx.n as i64;
    let k = d2 - neg_shift(i);
    let top = if i == 0 { ctx.n as i64 } else { ctx.n as i64 - 1 };
    if k < 0 || k > top {
        Candidate::Zero
    } else if i.abs() <= ctx.window {
        Candidate::InWindow((i, k as usize))
    } else {
        Candidate::Outside
    }
}

#[derive(Clone, Debug)]
enum QState {
    /// No basis class of the infinite ring has the right bidegree.
    Zero,
    /// The bidegree slot exists but lies beyond the window.
    Outside,
    /// In-window slot, value not pinned.
    Open(BasisLabel),
    /// In-window slot with a pinned value.
    Pinned(BasisLabel, Rat),
}

/// A linear expression in the current stage's unknowns.
#[derive(Clone, Default)]
struct LinExpr {
    vars: BTreeMap<usize, Rat>,
    cons: Rat,
}

impl LinExpr {
    fn constant(c: Rat) -> Self {
        LinExpr { vars: BTreeMap::new(), cons: c }
    }

    fn var(id: usize) -> Self {
        LinExpr { vars: [(id, rat_i(1))].into_iter().collect(), cons: Rat::zero() }
    }

    fn add_assign(&mut self, other: &LinExpr) {
        for (v, c) in &other.vars {
            let e = self.vars.entry(*v).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                self.vars.remove(v);
            }
        }
        self.cons += &other.cons;
    }

    fn scaled(&self, c: &Rat) -> LinExpr {
        if c.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            vars: self.vars.iter().map(|(v, x)| (*v, x * c)).collect(),
            cons: &self.cons * c,
        }
    }

    /// Product with at most one non-constant side.
    fn mul(&self, other: &LinExpr) -> LinExpr {
        assert!(self.vars.is_empty() || other.vars.is_empty());
        if self.vars.is_empty() {
            other.scaled(&self.cons)
        } else {
            self.scaled(&other.cons)
        }
    }
}

type LinClass = BTreeMap<BasisLabel, LinExpr>;

fn lin_add(acc: &mut LinClass, label: BasisLabel, expr: &LinExpr) {
    let e = acc.entry(label).or_default();
    e.add_assign(expr);
    if e.vars.is_empty() && e.cons.is_zero() {
        acc.remove(&label);
    }
}

struct Solver {
    ctx: PairContext,
    /// Classical products of window basis pairs, kept exact in a wider
    /// window so components beyond the table window stay visible.
    classical: BTreeMap<PairKey, Vec<(BasisLabel, Rat)>>,
    states: BTreeMap<(PairKey, u32), QState>,
}

impl Solver {
    /// The q^mm coefficient of a window basis pair product as a linear
    /// expression. `vars` carries the unknown ids of the stage under
    /// way; None means the coefficient refers to data the window model
    /// does not carry.
    fn stage_cls(
        &self,
        x: BasisLabel,
        y: BasisLabel,
        mm: u32,
        stage: u32,
        vars: &BTreeMap<PairKey, usize>,
    ) -> Option<LinClass> {
        if mm == 0 {
            let mut out = LinClass::new();
            for (label, c) in &self.classical[&pair_key(x, y)] {
                lin_add(&mut out, *label, &LinExpr::constant(c.clone()));
            }
            return Some(out);
        }
        let key = pair_key(x, y);
        match &self.states[&(key, mm)] {
            QState::Zero => Some(LinClass::new()),
            QState::Outside => None,
            QState::Pinned(label, v) => {
                let mut out = LinClass::new();
                lin_add(&mut out, *label, &LinExpr::constant(v.clone()));
                Some(out)
            }
            QState::Open(label) => {
                if mm == stage {
                    let id = vars[&key];
                    let mut out = LinClass::new();
                    lin_add(&mut out, *label, &LinExpr::var(id));
                    Some(out)
                } else {
                    None
                }
            }
        }
    }

    /// The q^m coefficient of (x * y) * z as a linear expression in the
    /// stage unknowns. None when the expansion would leave the window.
    fn assoc_form(
        &self,
        x: BasisLabel,
        y: BasisLabel,
        z: BasisLabel,
        m: u32,
        vars: &BTreeMap<PairKey, usize>,
    ) -> Option<LinClass> {
        let mut acc = LinClass::new();
        for m1 in 0..=m {
            let left = self.stage_cls(x, y, m1, m, vars)?;
            let m2 = m - m1;
            for (e, expr) in &left {
                let right = if m2 == 0 {
                    // classical step; the left support is always inside
                    // the window here (it is a bidegree slot)
                    self.stage_cls(*e, z, 0, m, vars)?
                } else {
                    if e.0.abs() > self.ctx.window {
                        return None;
                    }
                    self.stage_cls(*e, z, m2, m, vars)?
                };
                for (f, expr2) in &right {
                    lin_add(&mut acc, *f, &expr.mul(expr2));
                }
            }
        }
        Some(acc)
    }
}

/// Builds the structure table from the gradings, commutativity, the
/// identity, the single seed product and associativity, processed by
/// increasing q-exponent so that each stage is a linear problem.
/// Entries the system does not pin inside the window are reported
/// undetermined, never guessed.
pub fn solve_structure_constants(n: usize, window: i64, qmax: u32) -> Result<StructureTable> {
    let ctx = PairContext::new(n, window)?;
    if qmax < 1 {
        return Err(Error::Unsupported("q cutoff must be at least 1".into()));
    }
    let big = PairContext::new(n, 2 * window + qmax as i64 + 1)?;
    let basis = ctx.basis_indices();
    let identity: BasisLabel = (0, 0);

    let mut classical = BTreeMap::new();
    for (ai, &a) in basis.iter().enumerate() {
        for &b in &basis[ai..] {
            let ca = InsClass::basis_class(big, a.0, a.1)?;
            let cb = InsClass::basis_class(big, b.0, b.1)?;
            let prod = ca.product(&cb)?;
            classical.insert(pair_key(a, b), class_components(&prod));
        }
    }

    let mut states = BTreeMap::new();
    for (ai, &a) in basis.iter().enumerate() {
        for &b in &basis[ai..] {
            for m in 1..=qmax {
                let st = match candidate(ctx, a, b, m) {
                    Candidate::Zero => QState::Zero,
                    Candidate::Outside => QState::Outside,
                    Candidate::InWindow(t) => {
                        if a == identity || b == identity {
                            QState::Pinned(t, Rat::zero())
                        } else {
                            QState::Open(t)
                        }
                    }
                };
                states.insert((pair_key(a, b), m), st);
            }
        }
    }

    let mut solver = Solver { ctx, classical, states };
    let seed_key = pair_key((1, 0), (0, n));

    for m in 1..=qmax {
        let mut vars: BTreeMap<PairKey, usize> = BTreeMap::new();
        for ((key, mm), st) in &solver.states {
            if *mm == m {
                if let QState::Open(_) = st {
                    let id = vars.len();
                    vars.insert(*key, id);
                }
            }
        }
        if vars.is_empty() {
            continue;
        }
        let mut reducer = RowReducer::new(vars.len());
        if m == 1 {
            if let Some(&id) = vars.get(&seed_key) {
                reducer.add_row(vec![(id, rat_i(1))], rat_i(1))?;
            }
        }
        let working: Vec<BasisLabel> = basis.iter().copied().filter(|&e| e != identity).collect();
        for (ai, &a) in working.iter().enumerate() {
            for (bi, &b) in working.iter().enumerate().skip(ai) {
                for &c in &working[bi..] {
                    let mut groupings = BTreeSet::new();
                    groupings.insert((pair_key(a, b), c));
                    groupings.insert((pair_key(a, c), b));
                    groupings.insert((pair_key(b, c), a));
                    let forms: Vec<LinClass> = groupings
                        .iter()
                        .filter_map(|((x, y), z)| solver.assoc_form(*x, *y, *z, m, &vars))
                        .collect();
                    for other in forms.iter().skip(1) {
                        add_difference_rows(&mut reducer, &forms[0], other)?;
                    }
                }
            }
        }
        for (key, id) in &vars {
            if let Some(v) = reducer.value(*id) {
                let st = solver.states.get_mut(&(*key, m)).expect("state exists");
                let QState::Open(label) = st.clone() else { unreachable!() };
                *st = QState::Pinned(label, v);
            }
        }
    }

    let mut entries = BTreeMap::new();
    for (ai, &a) in basis.iter().enumerate() {
        for &b in &basis[ai..] {
            let key = pair_key(a, b);
            let mut list = Vec::with_capacity(qmax as usize + 1);
            let q0: BTreeMap<BasisLabel, Rat> = solver.classical[&key]
                .iter()
                .filter(|(l, _)| l.0.abs() <= window)
                .map(|(l, c)| (*l, c.clone()))
                .collect();
            list.push(ProductEntry { status: EntryStatus::Determined, coeffs: q0 });
            for m in 1..=qmax {
                let entry = match &solver.states[&(key, m)] {
                    QState::Zero | QState::Outside => {
                        ProductEntry { status: EntryStatus::Determined, coeffs: BTreeMap::new() }
                    }
                    QState::Open(_) => {
                        ProductEntry { status: EntryStatus::Undetermined, coeffs: BTreeMap::new() }
                    }
                    QState::Pinned(label, v) => {
                        let mut coeffs = BTreeMap::new();
                        if !v.is_zero() {
                            coeffs.insert(*label, v.clone());
                        }
                        ProductEntry { status: EntryStatus::Determined, coeffs }
                    }
                };
                list.push(entry);
            }
            entries.insert(key, list);
        }
    }
    Ok(StructureTable { ctx, qmax, entries })
}

fn add_difference_rows(reducer: &mut RowReducer, lhs: &LinClass, rhs: &LinClass) -> Result<()> {
    let mut labels: BTreeSet<BasisLabel> = lhs.keys().copied().collect();
    labels.extend(rhs.keys().copied());
    for label in labels {
        let mut expr = lhs.get(&label).cloned().unwrap_or_default();
        if let Some(r) = rhs.get(&label) {
            expr.add_assign(&r.scaled(&rat_i(-1)));
        }
        let row: Vec<(usize, Rat)> = expr.vars.into_iter().collect();
        let rhs_val = -expr.cons;
        reducer.add_row(row, rhs_val)?;
    }
    Ok(())
}

fn class_components(c: &InsClass) -> Vec<(BasisLabel, Rat)> {
    let mut out = Vec::new();
    for (i, part) in c.parts() {
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if !coeff.is_zero() {
                out.push(((i, k), coeff.clone()));
            }
        }
    }
    out
}

/// Compares every determined table entry against the lattice model.
/// Returns human-readable descriptions of the mismatches; an empty
/// list means the two routes agree.
pub fn verify_against_oracle(table: &StructureTable) -> Result<Vec<String>> {
    let ctx = table.ctx;
    let big = PairContext::new(ctx.n, 2 * ctx.window + table.qmax as i64 + 1)?;
    let basis = ctx.basis_indices();
    let mut bad = Vec::new();
    for (ai, &a) in basis.iter().enumerate() {
        for &b in &basis[ai..] {
            let ca = InsClass::basis_class(big, a.0, a.1)?;
            let cb = InsClass::basis_class(big, b.0, b.1)?;
            let series = monoid_to_qseries(&monoid_mult(&ins_to_monoid(&ca), &ins_to_monoid(&cb)), big)?;
            for m in 0..=table.qmax {
                let entry = table
                    .entry(a, b, m)
                    .ok_or_else(|| Error::Inconsistent("table is missing an entry".into()))?;
                if entry.status == EntryStatus::Undetermined {
                    continue;
                }
                let oracle: BTreeMap<BasisLabel, Rat> = class_components(&series.coefficient(m))
                    .into_iter()
                    .filter(|(l, _)| l.0.abs() <= ctx.window)
                    .collect();
                if oracle != entry.coeffs {
                    bad.push(format!(
                        "pair ({:?}, {:?}) at q^{m}: solver {:?}, lattice model {:?}",
                        a, b, entry.coeffs, oracle
                    ));
                }
            }
        }
    }
    Ok(bad)
}

/// The degree-zero three-point invariant, which is the trilinear form
/// of the ring of insertions (zero when contact orders do not cancel).
pub fn degree_zero_three_point(a: &InsClass, b: &InsClass, c: &InsClass) -> Result<Rat> {
    InsClass::trilinear_a(a, b, c)
}

/// The three-point invariant of any degree through the lattice model:
/// the q^d coefficient of the product, paired against the third
/// insertion. Computed in an internally enlarged window, so no input
/// combination overflows.
pub fn three_point_small(d: u32, a: &InsClass, b: &InsClass, c: &InsClass) -> Result<Rat> {
    if a.ctx() != b.ctx() || a.ctx() != c.ctx() {
        return Err(Error::RingMismatch("three-point operands share one context".into()));
    }
    let mut span = d as i64 + 1;
    for cls in [a, b, c] {
        span += cls.parts().map(|(i, _)| i.abs()).max().unwrap_or(0);
    }
    let big = PairContext::new(a.ctx().n, span)?;
    let (ea, eb, ec) = (a.embed(big.window)?, b.embed(big.window)?, c.embed(big.window)?);
    let series = monoid_to_qseries(&monoid_mult(&ins_to_monoid(&ea), &ins_to_monoid(&eb)), big)?;
    series.coefficient(d).pairing(&ec)
}

/// One correlator query: a curve degree and insertions carrying
/// descendant powers.
#[derive(Clone, PartialEq, Debug)]
pub struct Query {
    pub degree: u32,
    pub insertions: Vec<(u32, InsClass)>,
}

fn is_unit_class(c: &InsClass) -> bool {
    let mut seen = false;
    for (i, part) in c.parts() {
        if i != 0 {
            return false;
        }
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            if k != 0 || coeff != &rat_i(1) {
                return false;
            }
            seen = true;
        }
    }
    seen
}

/// The scalar c when the class is c times the degree-two ambient
/// hyperplane at contact order zero.
fn divisor_scalar(c: &InsClass) -> Option<Rat> {
    let mut scalar = None;
    for (i, part) in c.parts() {
        if i != 0 {
            return None;
        }
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            if k != 1 {
                return None;
            }
            scalar = Some(coeff.clone());
        }
    }
    scalar
}

/// Forgets a plain unit insertion (first in the list) and lowers each
/// remaining descendant power by one, term by term.
pub fn string_reduce(q: &Query) -> Result<Vec<(Rat, Query)>> {
    let Some((power, first)) = q.insertions.first() else {
        return Err(Error::Unsupported("string move needs an insertion to remove".into()));
    };
    if *power != 0 || !is_unit_class(first) {
        return Err(Error::Unsupported(
            "string move applies to a plain unit insertion in first position".into(),
        ));
    }
    let rest = &q.insertions[1..];
    let mut out = Vec::new();
    for (l, (a, _)) in rest.iter().enumerate() {
        if *a == 0 {
            continue;
        }
        let mut ins = rest.to_vec();
        ins[l].0 -= 1;
        out.push((rat_i(1), Query { degree: q.degree, insertions: ins }));
    }
    Ok(out)
}

/// Forgets a once-descended unit insertion (first in the list); the
/// remaining query picks up the factor (number of remaining insertions
/// minus two).
pub fn dilaton_reduce(q: &Query) -> Result<Vec<(Rat, Query)>> {
    let Some((power, first)) = q.insertions.first() else {
        return Err(Error::Unsupported("dilaton move needs an insertion to remove".into()));
    };
    if *power != 1 || !is_unit_class(first) {
        return Err(Error::Unsupported(
            "dilaton move applies to a once-descended unit insertion in first position".into(),
        ));
    }
    let rest = q.insertions[1..].to_vec();
    let coef = rat_i(rest.len() as i64 - 2);
    Ok(vec![(coef, Query { degree: q.degree, insertions: rest })])
}

/// Forgets a degree-two ambient insertion (first in the list): the
/// remaining query picks up the pairing of the divisor with the curve
/// class, plus one cup-corrected term per remaining descendant.
pub fn divisor_reduce(q: &Query) -> Result<Vec<(Rat, Query)>> {
    let Some((power, first)) = q.insertions.first() else {
        return Err(Error::Unsupported("divisor move needs an insertion to remove".into()));
    };
    let Some(scalar) = (if *power == 0 { divisor_scalar(first) } else { None }) else {
        return Err(Error::Unsupported(
            "divisor move applies to a degree-two ambient insertion in first position".into(),
        ));
    };
    let omega = first.clone();
    let rest = q.insertions[1..].to_vec();
    let mut out = Vec::new();
    out.push((&scalar * &rat_i(q.degree as i64), Query { degree: q.degree, insertions: rest.clone() }));
    for (l, (a, cls)) in rest.iter().enumerate() {
        if *a == 0 {
            continue;
        }
        let cupped = omega.product(cls)?;
        if cupped.is_zero() {
            continue;
        }
        let mut ins = rest.clone();
        ins[l] = (*a - 1, cupped);
        out.push((rat_i(1), Query { degree: q.degree, insertions: ins }));
    }
    Ok(out)
}

/// Answers correlator queries exactly or declines.
pub trait InvariantProvider {
    fn ambient_dim(&self) -> usize;
    /// `Ok(None)` means the query falls outside the supported sector.
    fn invariant(&self, q: &Query) -> Result<Option<Rat>>;
}

/// The rewrite-closure provider: arbitrary-degree three-point values
/// from the lattice model, the degree-zero sectors that vanish for
/// dimension reasons, and everything reachable from those through the
/// string, dilaton and divisor moves. Anything else is declined.
pub struct SmallProvider {
    n: usize,
}

impl SmallProvider {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::RingMismatch("ambient dimension must be >= 1".into()));
        }
        Ok(SmallProvider { n })
    }

    /// Evaluates a query over basis insertions (power, index, exponent).
    fn eval(&self, d: u32, items: &[(u32, i64, usize)]) -> Result<Option<Rat>> {
        let isum: i64 = items.iter().map(|t| t.1).sum();
        if isum != d as i64 {
            return Ok(Some(Rat::zero()));
        }
        let len = items.len();
        let total_desc: u32 = items.iter().map(|t| t.0).sum();
        let span = 1 + items.iter().map(|t| t.1.abs()).max().unwrap_or(0);
        let ctx = PairContext::new(self.n, span)?;
        if d == 0 {
            if len < 3 {
                return Ok(Some(Rat::zero()));
            }
            if len == 3 {
                if total_desc > 0 {
                    // a three-pointed degree-zero domain is rigid
                    return Ok(Some(Rat::zero()));
                }
                let cls = |t: &(u32, i64, usize)| InsClass::basis_class(ctx, t.1, t.2);
                return Ok(Some(InsClass::trilinear_a(&cls(&items[0])?, &cls(&items[1])?, &cls(&items[2])?)?));
            }
        } else if total_desc == 0 {
            if len == 3 {
                let cls = |t: &(u32, i64, usize)| InsClass::basis_class(ctx, t.1, t.2);
                return three_point_small(d, &cls(&items[0])?, &cls(&items[1])?, &cls(&items[2])?).map(Some);
            }
            if len < 3 {
                // raise with a divisor insertion; on descendant-free
                // queries the cup corrections vanish
                let mut raised = vec![(0, 0, 1)];
                raised.extend_from_slice(items);
                let sub = self.eval(d, &raised)?;
                return Ok(sub.map(|v| v / rat_i(d as i64)));
            }
        }
        if let Some(pos) = items.iter().position(|t| *t == (0, 0, 0)) {
            // string move
            let rest = removed(items, pos);
            let mut total = Rat::zero();
            for (l, t) in rest.iter().enumerate() {
                if t.0 == 0 {
                    continue;
                }
                let mut lowered = rest.clone();
                lowered[l].0 -= 1;
                match self.eval(d, &lowered)? {
                    None => return Ok(None),
                    Some(v) => total += v,
                }
            }
            return Ok(Some(total));
        }
        if let Some(pos) = items.iter().position(|t| *t == (1, 0, 0)) {
            // dilaton move
            let rest = removed(items, pos);
            let coef = rat_i(rest.len() as i64 - 2);
            return Ok(self.eval(d, &rest)?.map(|v| v * coef));
        }
        if let Some(pos) = items.iter().position(|t| *t == (0, 0, 1)) {
            // divisor move
            let rest = removed(items, pos);
            let mut total = match self.eval(d, &rest)? {
                None => return Ok(None),
                Some(v) => v * rat_i(d as i64),
            };
            for (l, t) in rest.iter().enumerate() {
                if t.0 == 0 {
                    continue;
                }
                let top = if t.1 == 0 { self.n } else { self.n - 1 };
                if t.2 + 1 > top {
                    continue;
                }
                let mut lowered = rest.clone();
                lowered[l] = (t.0 - 1, t.1, t.2 + 1);
                match self.eval(d, &lowered)? {
                    None => return Ok(None),
                    Some(v) => total += v,
                }
            }
            return Ok(Some(total));
        }
        Ok(None)
    }
}

fn removed(items: &[(u32, i64, usize)], pos: usize) -> Vec<(u32, i64, usize)> {
    let mut out = items.to_vec();
    out.remove(pos);
    out
}

impl InvariantProvider for SmallProvider {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn invariant(&self, q: &Query) -> Result<Option<Rat>> {
        // expand multilinearly over basis insertions
        let mut expanded: Vec<(Rat, Vec<(u32, i64, usize)>)> = vec![(rat_i(1), Vec::new())];
        for (power, cls) in &q.insertions {
            if cls.ctx().n != self.n {
                return Err(Error::RingMismatch("query classes live over another pair".into()));
            }
            let mut parts = Vec::new();
            for (label, coeff) in class_components(cls) {
                parts.push((coeff, (*power, label.0, label.1)));
            }
            let mut next = Vec::new();
            for (coef, items) in &expanded {
                for (c, item) in &parts {
                    let mut items = items.clone();
                    items.push(*item);
                    next.push((coef * c, items));
                }
            }
            expanded = next;
        }
        let mut total = Rat::zero();
        for (coef, items) in &expanded {
            if coef.is_zero() {
                continue;
            }
            match self.eval(q.degree, items)? {
                None => return Ok(None),
                Some(v) => total += coef * &v,
            }
        }
        Ok(Some(total))
    }
}

/// One side of an exchange identity: splits the degree and the extra
/// insertions between two factors joined by a dual-basis edge, and
/// sums the products of factor invariants. The contact-order balance
/// pins the edge index, so the sum is finite.
fn split_sum(
    p: &dyn InvariantProvider,
    degree: u32,
    f1: &[(u32, InsClass)],
    f2: &[(u32, InsClass)],
    extras: &[(u32, InsClass)],
) -> Result<Option<Rat>> {
    let n = p.ambient_dim();
    let mut span = degree as i64 + 1;
    for (_, c) in f1.iter().chain(f2).chain(extras) {
        if c.ctx().n != n {
            return Err(Error::RingMismatch("insertions live over another pair".into()));
        }
        span += c.parts().map(|(i, _)| i.abs()).max().unwrap_or(0);
    }
    let big = PairContext::new(n, span)?;
    let pieces = |list: &[(u32, InsClass)]| -> Result<Vec<Vec<(u32, InsClass)>>> {
        list.iter()
            .map(|(a, c)| {
                let e = c.embed(big.window)?;
                Ok(e.parts().map(|(i, part)| (*a, InsClass::from_part(big, i, part.clone()))).collect())
            })
            .collect()
    };
    let p1 = pieces(f1)?;
    let p2 = pieces(f2)?;
    let pe = pieces(extras)?;
    let mut total = Rat::zero();
    for combo1 in cartesian(&p1) {
        for combo2 in cartesian(&p2) {
            for comboe in cartesian(&pe) {
                for mask in 0..(1usize << comboe.len()) {
                    let (mut s1, mut s2) = (Vec::new(), Vec::new());
                    for (j, item) in comboe.iter().enumerate() {
                        if mask & (1 << j) != 0 {
                            s1.push(item.clone());
                        } else {
                            s2.push(item.clone());
                        }
                    }
                    for d1 in 0..=degree {
                        let isum: i64 = combo1.iter().chain(&s1).map(|(_, c)| single_index(c)).sum();
                        let it = d1 as i64 - isum;
                        for k in 0..=big.ring_dim(it) {
                            let t = InsClass::basis_class(big, it, k)?;
                            let mut q1 = combo1.clone();
                            q1.extend(s1.iter().cloned());
                            q1.push((0, t));
                            let v1 = match p.invariant(&Query { degree: d1, insertions: q1 })? {
                                None => return Ok(None),
                                Some(v) => v,
                            };
                            if v1.is_zero() {
                                continue;
                            }
                            let dual = dual_basis_element(big, it, k)?;
                            let mut q2 = vec![(0, dual)];
                            q2.extend(combo2.iter().cloned());
                            q2.extend(s2.iter().cloned());
                            let v2 = match p.invariant(&Query { degree: degree - d1, insertions: q2 })? {
                                None => return Ok(None),
                                Some(v) => v,
                            };
                            total += v1 * v2;
                        }
                    }
                }
            }
        }
    }
    Ok(Some(total))
}

fn single_index(c: &InsClass) -> i64 {
    c.parts().next().map(|(i, _)| i).unwrap_or(0)
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::new();
        for prefix in &out {
            for item in list {
                let mut p = prefix.clone();
                p.push(item.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Residual of the four-point exchange identity: grouping (1 2 | 3 4)
/// minus grouping (1 3 | 2 4), each summed over degree splits, subsets
/// of the extra insertions, and the dual-basis edge. `None` when some
/// needed query is unsupported.
pub fn check_wdvv(
    p: &dyn InvariantProvider,
    degree: u32,
    four: &[(u32, InsClass); 4],
    extras: &[(u32, InsClass)],
) -> Result<Option<Rat>> {
    let left = split_sum(p, degree, &four[0..2], &four[2..4], extras)?;
    let swapped_f1 = [four[0].clone(), four[2].clone()];
    let swapped_f2 = [four[1].clone(), four[3].clone()];
    let right = split_sum(p, degree, &swapped_f1, &swapped_f2, extras)?;
    Ok(match (left, right) {
        (Some(l), Some(r)) => Some(l - r),
        _ => None,
    })
}

/// Residual of the descendant-lowering identity: the query with its
/// first descendant power intact, minus the split sum where the first
/// insertion is lowered by one and rejoined to the second and third
/// through a dual-basis edge.
pub fn check_trr(p: &dyn InvariantProvider, degree: u32, inputs: &[(u32, InsClass)]) -> Result<Option<Rat>> {
    if inputs.len() < 3 {
        return Err(Error::Unsupported("the identity needs at least three insertions".into()));
    }
    if inputs[0].0 == 0 {
        return Err(Error::Unsupported(
            "the identity needs a descendant power on the first insertion".into(),
        ));
    }
    let lhs = p.invariant(&Query { degree, insertions: inputs.to_vec() })?;
    let lowered = [(inputs[0].0 - 1, inputs[0].1.clone())];
    let rhs = split_sum(p, degree, &lowered, &inputs[1..3], &inputs[3..])?;
    Ok(match (lhs, rhs) {
        (Some(l), Some(r)) => Some(l - r),
        _ => None,
    })
}
