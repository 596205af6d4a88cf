//! The ring of insertions of the pair (P^n, P^{n-1}).
//!
//! A class is a finite sum of parts [alpha]_i indexed by contact order
//! i: the part at i = 0 is a class on the ambient P^n, parts at i != 0
//! are classes on the divisor P^{n-1}. Indices are truncated to a
//! window |i| <= W; operations that would leave the window error out
//! instead of guessing.

use std::collections::BTreeMap;
use std::fmt;

use num::traits::Zero;

use crate::cohomology::CohClass;
use crate::error::{Error, Result};
use crate::linalg::solve_square;
use crate::rat::{rat_i, rat_parse, rat_str, Rat};

/// Ambient dimension and contact-order window shared by all classes of
/// one computation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PairContext {
    pub n: usize,
    pub window: i64,
}

impl PairContext {
    pub fn new(n: usize, window: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::RingMismatch("ambient dimension must be >= 1".into()));
        }
        if window < 1 {
            return Err(Error::WindowMargin("window must be >= 1".into()));
        }
        Ok(PairContext { n, window })
    }

    /// Dimension of the ring carrying the part at index i.
    pub fn ring_dim(&self, i: i64) -> usize {
        if i == 0 {
            self.n
        } else {
            self.n - 1
        }
    }

    pub fn check_index(&self, i: i64) -> Result<()> {
        if i.abs() > self.window {
            return Err(Error::WindowOverflow { index: i, window: self.window });
        }
        Ok(())
    }

    /// All basis labels (i, k) in deterministic order: i ascending
    /// through the window, k ascending through the ring at i.
    pub fn basis_indices(&self) -> Vec<(i64, usize)> {
        let mut out = Vec::new();
        for i in -self.window..=self.window {
            for k in 0..=self.ring_dim(i) {
                out.push((i, k));
            }
        }
        out
    }

    /// The hyperplane class of the divisor, which is also the class of
    /// the divisor restricted to itself. Zero when the divisor is a
    /// point (n = 1).
    pub fn divisor_on_d(&self) -> CohClass {
        CohClass::monomial(self.n - 1, 1)
    }
}

/// An element of the windowed ring of insertions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InsClass {
    ctx: PairContext,
    parts: BTreeMap<i64, CohClass>,
}

impl InsClass {
    pub fn zero(ctx: PairContext) -> Self {
        InsClass { ctx, parts: BTreeMap::new() }
    }

    /// The basis class at (i, k): [H^k]_0 for i = 0, [h^k]_i otherwise.
    pub fn basis_class(ctx: PairContext, i: i64, k: usize) -> Result<Self> {
        ctx.check_index(i)?;
        let part = CohClass::monomial(ctx.ring_dim(i), k);
        Ok(InsClass::from_part(ctx, i, part))
    }

    pub fn from_part(ctx: PairContext, i: i64, part: CohClass) -> Self {
        let mut c = InsClass::zero(ctx);
        c.add_part(i, part);
        c
    }

    pub fn ctx(&self) -> PairContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part(&self, i: i64) -> CohClass {
        self.parts
            .get(&i)
            .cloned()
            .unwrap_or_else(|| CohClass::zero(self.ctx.ring_dim(i)))
    }

    pub fn parts(&self) -> impl Iterator<Item = (i64, &CohClass)> {
        self.parts.iter().map(|(i, c)| (*i, c))
    }

    fn add_part(&mut self, i: i64, part: CohClass) {
        if part.is_zero() {
            return;
        }
        match self.parts.remove(&i) {
            None => {
                self.parts.insert(i, part);
            }
            Some(old) => {
                let sum = old.add(&part).expect("parts of equal index share a ring");
                if !sum.is_zero() {
                    self.parts.insert(i, sum);
                }
            }
        }
    }

    fn check_ctx(&self, other: &InsClass) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::RingMismatch(format!(
                "pair (n={}, W={}) combined with pair (n={}, W={})",
                self.ctx.n, self.ctx.window, other.ctx.n, other.ctx.window
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &InsClass) -> Result<InsClass> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (i, c) in other.parts() {
            out.add_part(i, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat) -> InsClass {
        if c.is_zero() {
            return InsClass::zero(self.ctx);
        }
        InsClass {
            ctx: self.ctx,
            parts: self.parts.iter().map(|(i, p)| (*i, p.scale(c))).collect(),
        }
    }

    pub fn sub(&self, other: &InsClass) -> Result<InsClass> {
        self.add(&other.scale(&rat_i(-1)))
    }

    /// Re-windows the class. Errors if an existing part falls outside
    /// the new window.
    pub fn embed(&self, window: i64) -> Result<InsClass> {
        let ctx = PairContext::new(self.ctx.n, window)?;
        for (i, _) in self.parts() {
            ctx.check_index(i)?;
        }
        Ok(InsClass { ctx, parts: self.parts.clone() })
    }

    /// The graded pairing: parts at i and -i pair through integration
    /// over the space they live on; everything else pairs to zero.
    pub fn pairing(&self, other: &InsClass) -> Result<Rat> {
        self.check_ctx(other)?;
        let mut out = Rat::zero();
        for (i, a) in self.parts() {
            if let Some(b) = other.parts.get(&-i) {
                out += a.cup(b)?.integrate();
            }
        }
        Ok(out)
    }

    /// The trilinear form. Nonzero only when the three contact orders
    /// sum to zero; the integral then runs over the ambient space (all
    /// indices zero), over the divisor with ambient classes restricted
    /// (exactly one negative index), or over the divisor with an extra
    /// divisor factor (two negative indices).
    pub fn trilinear_a(a: &InsClass, b: &InsClass, c: &InsClass) -> Result<Rat> {
        a.check_ctx(b)?;
        a.check_ctx(c)?;
        let ctx = a.ctx;
        let mut out = Rat::zero();
        for (i, pa) in a.parts() {
            for (j, pb) in b.parts() {
                for (l, pc) in c.parts() {
                    if i + j + l != 0 {
                        continue;
                    }
                    let negs = [i, j, l].iter().filter(|&&x| x < 0).count();
                    if i == 0 && j == 0 && l == 0 {
                        out += pa.cup(pb)?.cup(pc)?.integrate();
                        continue;
                    }
                    let to_d = |idx: i64, p: &CohClass| -> CohClass {
                        if idx == 0 {
                            p.restrict()
                        } else {
                            p.clone()
                        }
                    };
                    let (da, db, dc) = (to_d(i, pa), to_d(j, pb), to_d(l, pc));
                    let mut prod = da.cup(&db)?.cup(&dc)?;
                    match negs {
                        1 => {}
                        2 => prod = prod.cup(&ctx.divisor_on_d())?,
                        _ => unreachable!("indices summing to zero have 1 or 2 negatives"),
                    }
                    out += prod.integrate();
                }
            }
        }
        Ok(out)
    }

    /// The ring product, case by case on part indices. The number of
    /// extra divisor factors on the result is
    /// [i<0] + [j<0] - [i+j<0]; the i + j = 0 case routes through the
    /// Gysin pushforward instead.
    pub fn product(&self, other: &InsClass) -> Result<InsClass> {
        self.check_ctx(other)?;
        let ctx = self.ctx;
        let mut out = InsClass::zero(ctx);
        for (i, a) in self.parts() {
            for (j, b) in other.parts() {
                let (s, part) = part_product(ctx, i, a, j, b)?;
                out.add_part(s, part);
            }
        }
        Ok(out)
    }

    /// Independent route to the same product: expand against the basis
    /// through the trilinear form, Sum_{l,k} A(a, b, T_{l,k}) dual(T_{l,k}).
    pub fn product_via_a(&self, other: &InsClass) -> Result<InsClass> {
        self.check_ctx(other)?;
        let ctx = self.ctx;
        for (i, _) in self.parts() {
            for (j, _) in other.parts() {
                ctx.check_index(i + j)?;
            }
        }
        let mut out = InsClass::zero(ctx);
        for (l, k) in ctx.basis_indices() {
            let t = InsClass::basis_class(ctx, l, k)?;
            let coeff = InsClass::trilinear_a(self, other, &t)?;
            if coeff.is_zero() {
                continue;
            }
            let dual = dual_basis_element(ctx, l, k)?;
            out = out.add(&dual.scale(&coeff))?;
        }
        Ok(out)
    }

    /// Bidegree (deg1, deg2) of a homogeneous class: deg1 is the
    /// contact order, deg2 the Hodge exponent shifted up by one on
    /// negative-order parts. Errors on zero or inhomogeneous classes.
    pub fn bidegree(&self) -> Result<(i64, Rat)> {
        let mut degree: Option<(i64, i64)> = None;
        for (i, p) in self.parts() {
            for (a, coeff) in p.coeffs().iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                let d2 = a as i64 + if i < 0 { 1 } else { 0 };
                match degree {
                    None => degree = Some((i, d2)),
                    Some(d) if d == (i, d2) => {}
                    Some(_) => {
                        return Err(Error::NotMonomial(format!(
                            "inhomogeneous class: {self}"
                        )))
                    }
                }
            }
        }
        match degree {
            Some((d1, d2)) => Ok((d1, rat_i(d2))),
            None => Err(Error::NotMonomial("zero class has no bidegree".into())),
        }
    }

    pub fn render(&self) -> String {
        let mut terms = Vec::new();
        for (i, p) in self.parts() {
            let var = if i == 0 { 'H' } else { 'h' };
            for (a, coeff) in p.coeffs().iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                let base = match a {
                    0 => "1".to_string(),
                    1 => var.to_string(),
                    _ => format!("{var}^{a}"),
                };
                if coeff == &rat_i(1) {
                    terms.push(format!("[{base}]@{i}"));
                } else {
                    terms.push(format!("{}*[{base}]@{i}", rat_str(coeff)));
                }
            }
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

impl fmt::Display for InsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

fn part_product(
    ctx: PairContext,
    i: i64,
    a: &CohClass,
    j: i64,
    b: &CohClass,
) -> Result<(i64, CohClass)> {
    let s = i + j;
    ctx.check_index(s)?;
    if i == 0 && j == 0 {
        return Ok((0, a.cup(b)?));
    }
    if i == 0 {
        return Ok((s, a.restrict().cup(b)?));
    }
    if j == 0 {
        return Ok((s, a.cup(&b.restrict())?));
    }
    if s == 0 {
        return Ok((0, a.cup(b)?.gysin()));
    }
    let divisor_factors =
        (i < 0) as i64 + (j < 0) as i64 - (s < 0) as i64;
    let mut c = a.cup(b)?;
    for _ in 0..divisor_factors {
        c = c.cup(&ctx.divisor_on_d())?;
    }
    Ok((s, c))
}

/// The basis element pairing to 1 against T_{i,k} and to 0 against the
/// rest of the slot; computed by inverting the Gram matrix of the slot
/// pairing, so it works for any basis the pairing is nondegenerate on.
pub fn dual_basis_element(ctx: PairContext, i: i64, k: usize) -> Result<InsClass> {
    ctx.check_index(i)?;
    let m = ctx.ring_dim(i);
    if k > m {
        return Err(Error::NotMonomial(format!(
            "basis exponent {k} exceeds ring dimension {m}"
        )));
    }
    let size = m + 1;
    let mut gram = vec![vec![Rat::zero(); size]; size];
    for kp in 0..size {
        for kq in 0..size {
            let left = InsClass::basis_class(ctx, i, kp)?;
            let right = InsClass::basis_class(ctx, -i, kq)?;
            gram[kp][kq] = left.pairing(&right)?;
        }
    }
    let mut rhs = vec![Rat::zero(); size];
    rhs[k] = rat_i(1);
    let x = solve_square(&gram, &rhs)?;
    let mut out = InsClass::zero(ctx);
    for (kq, coeff) in x.iter().enumerate() {
        if !coeff.is_zero() {
            out = out.add(&InsClass::basis_class(ctx, -i, kq)?.scale(coeff))?;
        }
    }
    Ok(out)
}

/// Parses the expression grammar
/// `expr := term ('+' term)*`,
/// `term := [coef '*'] base '@' int`,
/// `base := 'H^'k | 'H' | 'h^'k | 'h' | '1'`, optionally bracketed,
/// `coef := int | int '/' int`.
/// `H` is only legal at index 0 and `h` only at nonzero indices.
pub fn parse(ctx: PairContext, input: &str) -> Result<InsClass> {
    if input.trim() == "0" {
        return Ok(InsClass::zero(ctx));
    }
    let mut p = Cursor { s: input.as_bytes(), pos: 0 };
    let mut out = InsClass::zero(ctx);
    loop {
        let term = parse_term(ctx, &mut p)?;
        out = out.add(&term)?;
        p.skip_ws();
        if p.eat(b'+') {
            continue;
        }
        break;
    }
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { msg: msg.to_string(), pos: self.pos }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Result<&'a str> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected digits"));
        }
        Ok(std::str::from_utf8(&self.s[start..self.pos]).unwrap())
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = self.eat(b'-');
        let d = self.digits()?;
        let v: i64 = d
            .parse()
            .map_err(|_| self.err("integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    /// `int` or `int/int`, with optional leading minus.
    fn rational(&mut self) -> Result<Rat> {
        let start = self.pos;
        let neg = self.eat(b'-');
        let numer = self.digits()?;
        let text = if self.eat(b'/') {
            let denom = self.digits()?;
            format!("{}{}/{}", if neg { "-" } else { "" }, numer, denom)
        } else {
            format!("{}{}", if neg { "-" } else { "" }, numer)
        };
        rat_parse(&text).ok_or_else(|| Error::Parse {
            msg: "malformed rational".into(),
            pos: start,
        })
    }
}

fn parse_term(ctx: PairContext, p: &mut Cursor) -> Result<InsClass> {
    p.skip_ws();
    let mut coef = rat_i(1);
    // A leading number is a coefficient only when '*' follows;
    // otherwise it must be the base '1'.
    if matches!(p.peek(), Some(b'-') | Some(b'0'..=b'9')) {
        let save = p.pos;
        let r = p.rational()?;
        p.skip_ws();
        if p.eat(b'*') {
            coef = r;
            p.skip_ws();
        } else {
            p.pos = save;
        }
    }
    let bracketed = p.eat(b'[');
    let (var, k) = parse_base(p)?;
    if bracketed && !p.eat(b']') {
        return Err(p.err("expected ']'"));
    }
    if !p.eat(b'@') {
        return Err(p.err("expected '@'"));
    }
    let idx = p.signed_int()?;
    match var {
        Some('H') if idx != 0 => {
            return Err(p.err("'H' is only legal at index 0"));
        }
        Some('h') if idx == 0 => {
            return Err(p.err("'h' is only legal at nonzero indices"));
        }
        _ => {}
    }
    ctx.check_index(idx)?;
    let part = CohClass::monomial(ctx.ring_dim(idx), k);
    Ok(InsClass::from_part(ctx, idx, part).scale(&coef))
}

/// Returns the variable (None for the unit base '1') and the exponent.
fn parse_base(p: &mut Cursor) -> Result<(Option<char>, usize)> {
    match p.peek() {
        Some(b'1') => {
            p.pos += 1;
            Ok((None, 0))
        }
        Some(c @ (b'H' | b'h')) => {
            p.pos += 1;
            let k = if p.eat(b'^') {
                p.digits()?
                    .parse()
                    .map_err(|_| p.err("exponent out of range"))?
            } else {
                1
            };
            Ok((Some(c as char), k))
        }
        _ => Err(p.err("expected base 'H^k', 'h^k' or '1'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_frac;

    fn ctx2() -> PairContext {
        PairContext::new(2, 4).unwrap()
    }

    fn b(ctx: PairContext, i: i64, k: usize) -> InsClass {
        InsClass::basis_class(ctx, i, k).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let c = ctx2();
        assert_eq!(b(c, 0, 1).pairing(&b(c, 0, 1)).unwrap(), rat_i(1));
        assert_eq!(b(c, 1, 0).pairing(&b(c, -1, 1)).unwrap(), rat_i(1));
        assert_eq!(b(c, 1, 0).pairing(&b(c, -1, 0)).unwrap(), rat_i(0));
        assert_eq!(b(c, 1, 0).pairing(&b(c, 1, 1)).unwrap(), rat_i(0));
        assert_eq!(b(c, 0, 1).pairing(&b(c, -1, 0)).unwrap(), rat_i(0));
    }

    #[test]
    fn trilinear_examples() {
        let c = ctx2();
        let a = InsClass::trilinear_a(&b(c, 1, 1), &b(c, -2, 0), &b(c, 1, 0)).unwrap();
        assert_eq!(a, rat_i(1));
        let a = InsClass::trilinear_a(&b(c, -1, 0), &b(c, -1, 0), &b(c, 2, 0)).unwrap();
        assert_eq!(a, rat_i(1));
        let a = InsClass::trilinear_a(&b(c, 0, 1), &b(c, -1, 0), &b(c, 1, 0)).unwrap();
        assert_eq!(a, rat_i(1));
        let a = InsClass::trilinear_a(&b(c, 1, 0), &b(c, 1, 0), &b(c, 1, 0)).unwrap();
        assert_eq!(a, rat_i(0));
    }

    #[test]
    fn product_examples() {
        let c = ctx2();
        // Opposite orders glue through the Gysin map.
        assert_eq!(b(c, 1, 0).product(&b(c, -1, 0)).unwrap(), b(c, 0, 1));
        // Two negatives pick up a divisor factor.
        assert_eq!(b(c, -1, 0).product(&b(c, -1, 0)).unwrap(), b(c, -2, 1));
        // Mixed signs with negative total do not.
        assert_eq!(b(c, 1, 0).product(&b(c, -2, 0)).unwrap(), b(c, -1, 0));
        // Mixed signs with positive total do.
        assert_eq!(b(c, -1, 0).product(&b(c, 2, 0)).unwrap(), b(c, 1, 1));
        // Ambient times divisor class restricts.
        assert_eq!(b(c, 0, 1).product(&b(c, 2, 0)).unwrap(), b(c, 2, 1));
    }

    #[test]
    fn product_on_smallest_pair() {
        let c = PairContext::new(1, 3).unwrap();
        // The divisor is a point, so the two-negative case dies.
        assert!(b(c, -1, 0).product(&b(c, -1, 0)).unwrap().is_zero());
        assert_eq!(b(c, 1, 0).product(&b(c, -1, 0)).unwrap(), b(c, 0, 1));
    }

    #[test]
    fn identity_is_two_sided() {
        let c = ctx2();
        let one = b(c, 0, 0);
        for (i, k) in c.basis_indices() {
            let x = b(c, i, k);
            assert_eq!(one.product(&x).unwrap(), x);
            assert_eq!(x.product(&one).unwrap(), x);
        }
    }

    #[test]
    fn commutativity_exhaustive() {
        for n in 1..=3 {
            let c = PairContext::new(n, 2).unwrap();
            let basis = c.basis_indices();
            for &(i, k) in &basis {
                for &(j, l) in &basis {
                    if (i + j).abs() > c.window {
                        continue;
                    }
                    let ab = b(c, i, k).product(&b(c, j, l)).unwrap();
                    let ba = b(c, j, l).product(&b(c, i, k)).unwrap();
                    assert_eq!(ab, ba, "n={n} ({i},{k})*({j},{l})");
                }
            }
        }
    }

    #[test]
    fn associativity_exhaustive_in_window() {
        for n in 1..=3 {
            let c = PairContext::new(n, 2).unwrap();
            let basis = c.basis_indices();
            for &(i1, k1) in &basis {
                for &(i2, k2) in &basis {
                    for &(i3, k3) in &basis {
                        let w = c.window;
                        if (i1 + i2).abs() > w
                            || (i2 + i3).abs() > w
                            || (i1 + i2 + i3).abs() > w
                        {
                            continue;
                        }
                        let x = b(c, i1, k1);
                        let y = b(c, i2, k2);
                        let z = b(c, i3, k3);
                        let left = x.product(&y).unwrap().product(&z).unwrap();
                        let right = x.product(&y.product(&z).unwrap()).unwrap();
                        assert_eq!(left, right, "n={n} ({i1},{k1})({i2},{k2})({i3},{k3})");
                    }
                }
            }
        }
    }

    #[test]
    fn product_via_trilinear_matches() {
        for n in 1..=3 {
            let c = PairContext::new(n, 2).unwrap();
            let basis = c.basis_indices();
            for &(i, k) in &basis {
                for &(j, l) in &basis {
                    if (i + j).abs() > c.window {
                        continue;
                    }
                    let x = b(c, i, k);
                    let y = b(c, j, l);
                    assert_eq!(
                        x.product(&y).unwrap(),
                        x.product_via_a(&y).unwrap(),
                        "n={n} ({i},{k})*({j},{l})"
                    );
                }
            }
        }
    }

    #[test]
    fn duality_product_pairs_as_trilinear() {
        let c = ctx2();
        let basis = c.basis_indices();
        for &(i1, k1) in &basis {
            for &(i2, k2) in &basis {
                if (i1 + i2).abs() > c.window {
                    continue;
                }
                for &(i3, k3) in &basis {
                    let x = b(c, i1, k1);
                    let y = b(c, i2, k2);
                    let z = b(c, i3, k3);
                    let lhs = x.product(&y).unwrap().pairing(&z).unwrap();
                    let rhs = InsClass::trilinear_a(&x, &y, &z).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn dual_basis_examples() {
        let c = ctx2();
        assert_eq!(dual_basis_element(c, 0, 0).unwrap(), b(c, 0, 2));
        assert_eq!(dual_basis_element(c, 3, 1).unwrap(), b(c, -3, 0));
        let c1 = PairContext::new(1, 3).unwrap();
        assert_eq!(dual_basis_element(c1, 1, 0).unwrap(), b(c1, -1, 0));
    }

    #[test]
    fn dual_basis_is_dual() {
        for n in 1..=3 {
            let c = PairContext::new(n, 2).unwrap();
            for (i, k) in c.basis_indices() {
                let dual = dual_basis_element(c, i, k).unwrap();
                for (j, l) in c.basis_indices() {
                    let expected = if (j, l) == (i, k) { rat_i(1) } else { rat_i(0) };
                    assert_eq!(
                        b(c, j, l).pairing(&dual).unwrap(),
                        expected,
                        "n={n} ({i},{k}) vs ({j},{l})"
                    );
                }
            }
        }
    }

    #[test]
    fn bidegrees() {
        let c = ctx2();
        assert_eq!(b(c, 0, 1).bidegree().unwrap(), (0, rat_i(1)));
        assert_eq!(b(c, -1, 0).bidegree().unwrap(), (-1, rat_i(1)));
        assert_eq!(b(c, 2, 1).bidegree().unwrap(), (2, rat_i(1)));
        assert_eq!(b(c, 0, 0).bidegree().unwrap(), (0, rat_i(0)));
        assert!(b(c, 0, 0).add(&b(c, 1, 0)).unwrap().bidegree().is_err());
        assert!(InsClass::zero(c).bidegree().is_err());
    }

    #[test]
    fn bidegree_additive_under_product() {
        let c = ctx2();
        let basis = c.basis_indices();
        for &(i, k) in &basis {
            for &(j, l) in &basis {
                if (i + j).abs() > c.window {
                    continue;
                }
                let x = b(c, i, k);
                let y = b(c, j, l);
                let p = x.product(&y).unwrap();
                if p.is_zero() {
                    continue;
                }
                let (d1x, d2x) = x.bidegree().unwrap();
                let (d1y, d2y) = y.bidegree().unwrap();
                let (d1p, d2p) = p.bidegree().unwrap();
                assert_eq!(d1p, d1x + d1y);
                assert_eq!(d2p, d2x + d2y);
            }
        }
    }

    #[test]
    fn window_overflow_errors() {
        let c = ctx2();
        assert!(matches!(
            b(c, 4, 0).product(&b(c, 1, 0)),
            Err(Error::WindowOverflow { .. })
        ));
        assert!(matches!(
            InsClass::basis_class(c, 5, 0),
            Err(Error::WindowOverflow { .. })
        ));
        assert!(b(c, 1, 0).embed(1).is_ok());
        assert!(matches!(b(c, 2, 0).embed(1), Err(Error::WindowOverflow { .. })));
    }

    #[test]
    fn ring_mismatch_errors() {
        let c2 = ctx2();
        let c3 = PairContext::new(3, 4).unwrap();
        assert!(b(c2, 0, 0).product(&b(c3, 0, 0)).is_err());
        assert!(b(c2, 0, 0).pairing(&b(c3, 0, 0)).is_err());
    }

    #[test]
    fn parser_accepts_grammar() {
        let c = ctx2();
        assert_eq!(parse(c, "1@1").unwrap(), b(c, 1, 0));
        assert_eq!(parse(c, "H^2@0").unwrap(), b(c, 0, 2));
        assert_eq!(parse(c, "H@0").unwrap(), b(c, 0, 1));
        assert_eq!(parse(c, "[h]@-1").unwrap(), b(c, -1, 1));
        assert_eq!(
            parse(c, "2*h@-3 + 1@1").unwrap(),
            b(c, -3, 1).scale(&rat_i(2)).add(&b(c, 1, 0)).unwrap()
        );
        assert_eq!(
            parse(c, "1/2*H^2@0").unwrap(),
            b(c, 0, 2).scale(&rat_frac(1, 2))
        );
        assert_eq!(
            parse(c, "-3*1@-2").unwrap(),
            b(c, -2, 0).scale(&rat_i(-3))
        );
        // Exponents above the ring dimension denote the zero class.
        assert!(parse(c, "h^5@1").unwrap().is_zero());
    }

    #[test]
    fn parser_rejects_malformed_input() {
        let c = ctx2();
        assert!(matches!(parse(c, "H^1@2"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "h^1@0"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "H^1@@0"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, ""), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "1@"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "x@0"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "1@1 1@2"), Err(Error::Parse { .. })));
        assert!(matches!(parse(c, "1/0*1@0"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse(c, "1@9"),
            Err(Error::WindowOverflow { .. })
        ));
    }

    #[test]
    fn render_parse_roundtrip() {
        let c = ctx2();
        let x = b(c, -2, 1)
            .scale(&rat_frac(-3, 2))
            .add(&b(c, 0, 2))
            .unwrap()
            .add(&b(c, 1, 0).scale(&rat_i(7)))
            .unwrap();
        let shown = x.render();
        assert_eq!(parse(c, &shown).unwrap(), x);
        assert_eq!(InsClass::zero(c).render(), "0");
    }
}
