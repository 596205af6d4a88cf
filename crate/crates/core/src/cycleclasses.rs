//! Symbolic cycle classes attached to a bipartite graph.
//!
//! The obstruction-class extraction works in a commutative polynomial
//! ring whose generators are tautological symbols on the moduli
//! factors of a graph: a global class `Psi` on the ambient factor, a
//! class `PsiInf(v)` per divisor-side vertex, and per root a
//! cotangent symbol `psi(e)` and a pulled-back divisor symbol
//! `evD(e)`. Series in an auxiliary parameter t are expanded with an
//! explicit record of how far the expansion is trusted, so constant
//! terms are either exact or reported as out of reach.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num::Zero;

use crate::error::{Error, Result};
use crate::graphs::BipartiteGraph;
use crate::rat::{rat_i, rat_str, Rat};

/// Identifies an infinity-side root of a type-0 vertex: a marking
/// label, or a node slot (vertex index, slot index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RootId {
    Mark(u32),
    Node(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sym {
    /// Cotangent class of the relative divisor on the ambient factor.
    Psi,
    /// Cotangent class of the infinity end on the rubber factor of the
    /// given type-0 vertex.
    PsiInf(usize),
    /// Cotangent class at a root marking.
    PsiRoot(RootId),
    /// Divisor class pulled back through the evaluation at a root.
    EvD(RootId),
}

impl std::fmt::Display for RootId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootId::Mark(l) => write!(f, "mark{l}"),
            RootId::Node(v, s) => write!(f, "node{v}.{s}"),
        }
    }
}

impl std::fmt::Display for Sym {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sym::Psi => write!(f, "Psi"),
            Sym::PsiInf(v) => write!(f, "PsiInf{v}"),
            Sym::PsiRoot(e) => write!(f, "psi({e})"),
            Sym::EvD(e) => write!(f, "evD({e})"),
        }
    }
}

pub type Monomial = BTreeMap<Sym, u32>;

/// Sparse multivariate polynomial over the rationals.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn one() -> Self {
        Poly::constant(rat_i(1))
    }

    pub fn symbol(s: Sym) -> Self {
        let mut m = Monomial::new();
        m.insert(s, 1);
        let mut p = Poly::default();
        p.terms.insert(m, rat_i(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&rat_i(-1)))
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (s, e) in mb {
                    *m.entry(*s).or_insert(0) += e;
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = e.get() + &c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    /// Every term has this total symbol degree; None for the zero
    /// polynomial or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut deg = None;
        for m in self.terms.keys() {
            let d: u32 = m.values().sum();
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            let coef = rat_str(c);
            if m.is_empty() {
                parts.push(coef);
                continue;
            }
            if coef != "1" {
                factors.push(coef);
            }
            for (s, e) in m {
                if *e == 1 {
                    factors.push(format!("{s}"));
                } else {
                    factors.push(format!("{s}^{e}"));
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

/// Laurent series in t with bounded-above exponents. Coefficients are
/// exact for exponents in `[floor, max_pow]`; when `floor` is `None`
/// the series is exact everywhere (a Laurent polynomial). Below a
/// finite floor the tail is unknown, not zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymLaurent {
    max_pow: i64,
    floor: Option<i64>,
    coeffs: BTreeMap<i64, Poly>,
}

impl SymLaurent {
    /// The exact series with a single term `poly * t^pow`.
    pub fn exact_term(pow: i64, poly: Poly) -> Self {
        let mut coeffs = BTreeMap::new();
        if !poly.is_zero() {
            coeffs.insert(pow, poly);
        }
        SymLaurent { max_pow: pow, floor: None, coeffs }
    }

    pub fn exact_one() -> Self {
        SymLaurent::exact_term(0, Poly::one())
    }

    /// A truncated series: coefficients listed down to `floor`,
    /// unknown below.
    pub fn truncated(max_pow: i64, floor: i64, coeffs: BTreeMap<i64, Poly>) -> Self {
        debug_assert!(coeffs.keys().all(|&k| k >= floor && k <= max_pow));
        SymLaurent { max_pow, floor: Some(floor), coeffs }
    }

    pub fn max_pow(&self) -> i64 {
        self.max_pow
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    /// Exact coefficient of t^pow, or a margin error if the expansion
    /// was not carried deep enough to know it.
    pub fn coefficient(&self, pow: i64) -> Result<Poly> {
        if let Some(fl) = self.floor {
            if pow < fl {
                return Err(Error::WindowMargin(format!(
                    "coefficient of t^{pow} lies below the expansion floor t^{fl}"
                )));
            }
        }
        Ok(self.coeffs.get(&pow).cloned().unwrap_or_else(Poly::zero))
    }

    pub fn mul(&self, other: &SymLaurent) -> SymLaurent {
        let max_pow = self.max_pow + other.max_pow;
        let floor = match (self.floor, other.floor) {
            (None, None) => None,
            (Some(f), None) => Some(f + other.max_pow),
            (None, Some(g)) => Some(g + self.max_pow),
            (Some(f), Some(g)) => Some((f + other.max_pow).max(g + self.max_pow)),
        };
        let mut coeffs: BTreeMap<i64, Poly> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let k = i + j;
                if floor.is_some_and(|fl| k < fl) {
                    continue;
                }
                let prod = a.mul(b);
                if prod.is_zero() {
                    continue;
                }
                match coeffs.entry(k) {
                    Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    Entry::Occupied(mut e) => {
                        let v = e.get().add(&prod);
                        if v.is_zero() {
                            e.remove();
                        } else {
                            *e.get_mut() = v;
                        }
                    }
                }
            }
        }
        SymLaurent { max_pow, floor, coeffs }
    }
}

/// Infinity-side roots (marking and node type) of a type-0 vertex, as
/// (root id, multiplicity d_e = |weight|) pairs; node roots last.
fn inf_roots(g: &BipartiteGraph, v: usize) -> Vec<(RootId, i64)> {
    let vx = &g.zero[v];
    let mut out: Vec<(RootId, i64)> = vx
        .roots_inf_mark
        .iter()
        .map(|(w, l)| (RootId::Mark(*l), -w))
        .collect();
    out.extend(
        vx.roots_inf_node
            .iter()
            .enumerate()
            .map(|(s, w)| (RootId::Node(v, s), -w)),
    );
    out
}

fn node_roots(g: &BipartiteGraph, v: usize) -> Vec<(RootId, i64)> {
    g.zero[v]
        .roots_inf_node
        .iter()
        .enumerate()
        .map(|(s, w)| (RootId::Node(v, s), -w))
        .collect()
}

/// The linear factor d_e psi(e) - evD(e); evD vanishes identically
/// when the divisor is a point.
fn root_factor(g: &BipartiteGraph, e: RootId, d: i64) -> Poly {
    let psi = Poly::symbol(Sym::PsiRoot(e)).scale(&rat_i(d));
    if g.n_amb == 1 {
        psi
    } else {
        psi.sub(&Poly::symbol(Sym::EvD(e)))
    }
}

/// Elementary symmetric polynomial of order k in the root factors of
/// all infinity-side roots of vertex v; zero beyond the root count.
pub fn sigma_k(g: &BipartiteGraph, v: usize, k: usize) -> Poly {
    sigma_all(g, v, k).swap_remove(k)
}

/// sigma_0 .. sigma_cap as one sweep (sigma_j = 0 for j beyond the
/// number of roots).
fn sigma_all(g: &BipartiteGraph, v: usize, cap: usize) -> Vec<Poly> {
    let roots = inf_roots(g, v);
    let mut sig: Vec<Poly> = vec![Poly::one()];
    for (e, d) in &roots {
        let f = root_factor(g, *e, *d);
        let mut next = sig.clone();
        next.push(Poly::zero());
        for j in (1..next.len()).rev() {
            next[j] = next[j].add(&sig[j - 1].mul(&f));
        }
        sig = next;
    }
    sig.resize(cap + 1, Poly::zero());
    sig
}

/// c(l) = Psi_inf^l - Psi_inf^{l-1} sigma_1 + ... + (-1)^l sigma_l.
pub fn c_l(g: &BipartiteGraph, v: usize, l: usize) -> Poly {
    let sig = sigma_all(g, v, l);
    let psi_inf = Poly::symbol(Sym::PsiInf(v));
    let mut out = Poly::zero();
    for (j, s) in sig.iter().enumerate().take(l + 1) {
        let sign = if j % 2 == 0 { rat_i(1) } else { rat_i(-1) };
        out = out.add(&psi_inf.pow((l - j) as u32).mul(s).scale(&sign));
    }
    out
}

/// Series of the type-0 vertex v: numerator sum of c(l) against
/// descending powers of t, divided by one linear factor per node
/// root, expanded at t = infinity. The leading power is
/// rho_minus(v) - 1 with coefficient equal to the product of node
/// multiplicities; `depth` further coefficients are produced below it.
pub fn c_type0(g: &BipartiteGraph, v: usize, depth: usize) -> SymLaurent {
    let rho_inf = g.zero[v].rho_inf() as i64;
    // Numerator: c(l) at t^{rho_inf - 1 - l} for l = 0..=depth.
    let mut num_coeffs = BTreeMap::new();
    for l in 0..=depth {
        let c = c_l(g, v, l);
        if !c.is_zero() {
            num_coeffs.insert(rho_inf - 1 - l as i64, c);
        }
    }
    let mut series = SymLaurent::truncated(rho_inf - 1, rho_inf - 1 - depth as i64, num_coeffs);
    // Each denominator factor (t + evD)/d - psi inverts to
    // sum_j d (d psi - evD)^j t^{-1-j}.
    for (e, d) in node_roots(g, v) {
        let base = root_factor(g, e, d);
        let mut coeffs = BTreeMap::new();
        let mut power = Poly::one();
        for j in 0..=depth {
            let c = power.scale(&rat_i(d));
            if !c.is_zero() {
                coeffs.insert(-1 - j as i64, c);
            }
            power = power.mul(&base);
        }
        series = series.mul(&SymLaurent::truncated(-1, -1 - depth as i64, coeffs));
    }
    series
}

/// Series of the ambient factor, t/(t + Psi) expanded at t = infinity;
/// the convention for a graph with no ambient vertices is the constant
/// series 1.
pub fn c_type_inf(g: &BipartiteGraph, depth: usize) -> SymLaurent {
    if g.inf.is_empty() {
        return SymLaurent::exact_one();
    }
    let mut coeffs = BTreeMap::new();
    let minus_psi = Poly::symbol(Sym::Psi).scale(&rat_i(-1));
    let mut power = Poly::one();
    for j in 0..=depth {
        coeffs.insert(-(j as i64), power.clone());
        power = power.mul(&minus_psi);
    }
    SymLaurent::truncated(0, -(depth as i64), coeffs)
}

/// The exact constant term of the product of all factor series. The
/// expansion depth is chosen so the constant term is provably exact:
/// with M the sum of all leading powers, each factor is expanded M
/// places below its own leading power (and the result is zero outright
/// when M < 0).
pub fn c_g(g: &BipartiteGraph) -> Result<Poly> {
    g.validate()?;
    let leading: i64 = (0..g.zero.len())
        .map(|v| g.zero[v].rho_minus() as i64 - 1)
        .sum();
    // The ambient factor has leading power 0, so M = leading.
    if leading < 0 {
        return Ok(Poly::zero());
    }
    let depth = leading as usize;
    let mut product = c_type_inf(g, depth);
    for v in 0..g.zero.len() {
        product = product.mul(&c_type0(g, v, depth));
    }
    product.coefficient(0)
}
