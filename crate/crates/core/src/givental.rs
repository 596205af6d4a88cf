//! Symplectic loop-space machinery on truncations: the residue pairing
//! on z-series, the grading and divisor operators, the Virasoro-type
//! family l_m with its bracket table, quantization of quadratic
//! Hamiltonians, the explicit quantized operators for m = -1, 0, the
//! genus-zero residual check against an assembled potential, and the
//! cutoff anomaly of the quantized commutator.
//!
//! Truncation discipline: every operator is stored as explicit columns
//! on a finite z-window; a column is present only when the image is
//! exact inside the window. Comparisons and checks run on columns that
//! every participant represents exactly, so truncation can never leak
//! into an assertion.

use std::collections::BTreeMap;

use num::traits::{Signed, Zero};

use crate::cohomology::c1_log_tangent;
use crate::error::{Error, Result};
use crate::insertions::{dual_basis_element, InsClass, PairContext};
use crate::quantum::{InvariantProvider, Query};
use crate::rat::{rat_frac, rat_i, Rat};

type BasisLabel = (i64, usize);
type ZVec = ((i64, usize), i64);

/// A finite z-window of insertion-class coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct ZSeries {
    ctx: PairContext,
    pub zmin: i64,
    pub zmax: i64,
    terms: BTreeMap<i64, InsClass>,
}

impl ZSeries {
    pub fn new(ctx: PairContext, zmin: i64, zmax: i64) -> Result<Self> {
        if zmin > zmax {
            return Err(Error::WindowMargin(format!("empty z-window [{zmin}, {zmax}]")));
        }
        Ok(ZSeries { ctx, zmin, zmax, terms: BTreeMap::new() })
    }

    pub fn ctx(&self) -> PairContext {
        self.ctx
    }

    pub fn add_term(&mut self, e: i64, c: &InsClass) -> Result<()> {
        if c.ctx() != self.ctx {
            return Err(Error::RingMismatch("z-series terms share one context".into()));
        }
        if e < self.zmin || e > self.zmax {
            return Err(Error::WindowMargin(format!(
                "z-exponent {e} outside [{}, {}]",
                self.zmin, self.zmax
            )));
        }
        if c.is_zero() {
            return Ok(());
        }
        let cur = self.coefficient(e);
        let sum = cur.add(c)?;
        if sum.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, sum);
        }
        Ok(())
    }

    pub fn coefficient(&self, e: i64) -> InsClass {
        self.terms.get(&e).cloned().unwrap_or_else(|| InsClass::zero(self.ctx))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &InsClass)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

fn sign_pow(k: i64) -> Rat {
    if k.rem_euclid(2) == 0 {
        rat_i(1)
    } else {
        rat_i(-1)
    }
}

/// The residue pairing: the z^{-1} coefficient of the insertion
/// pairing of f(-z) with g(z), which is the alternating sum over
/// complementary exponents k and -1-k.
pub fn omega(f: &ZSeries, g: &ZSeries) -> Result<Rat> {
    if f.ctx() != g.ctx() {
        return Err(Error::RingMismatch("residue pairing needs one context".into()));
    }
    let mut total = Rat::zero();
    for (k, fk) in f.terms() {
        let j = -1 - k;
        if j < g.zmin || j > g.zmax {
            continue;
        }
        let gj = g.coefficient(j);
        if gj.is_zero() {
            continue;
        }
        total += sign_pow(k) * fk.pairing(&gj)?;
    }
    Ok(total)
}

/// A linear operator on the (window basis) x (z-window) lattice,
/// stored column by column. An absent column means the image is not
/// exactly representable inside the window; present columns are exact.
#[derive(Clone, PartialEq, Debug)]
pub struct EndOp {
    pub ctx: PairContext,
    pub zmin: i64,
    pub zmax: i64,
    cols: BTreeMap<ZVec, Vec<(ZVec, Rat)>>,
}

fn normalize_col(raw: Vec<(ZVec, Rat)>) -> Vec<(ZVec, Rat)> {
    let mut acc: BTreeMap<ZVec, Rat> = BTreeMap::new();
    for (v, c) in raw {
        let e = acc.entry(v).or_insert_with(Rat::zero);
        *e += c;
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl EndOp {
    /// Builds columns from a raw image rule; columns whose raw image
    /// leaves the z-window are dropped (not truncated).
    pub fn from_linear(
        ctx: PairContext,
        zmin: i64,
        zmax: i64,
        f: impl Fn(BasisLabel, i64) -> Vec<(ZVec, Rat)>,
    ) -> Self {
        let mut cols = BTreeMap::new();
        for label in ctx.basis_indices() {
            for z in zmin..=zmax {
                let img = normalize_col(f(label, z));
                if img.iter().all(|((_, ze), _)| *ze >= zmin && *ze <= zmax) {
                    cols.insert((label, z), img);
                }
            }
        }
        EndOp { ctx, zmin, zmax, cols }
    }

    pub fn col(&self, v: ZVec) -> Option<&Vec<(ZVec, Rat)>> {
        self.cols.get(&v)
    }

    pub fn columns(&self) -> impl Iterator<Item = (ZVec, &Vec<(ZVec, Rat)>)> {
        self.cols.iter().map(|(v, c)| (*v, c))
    }

    pub fn apply(&self, f: &ZSeries) -> Result<ZSeries> {
        if f.ctx() != self.ctx {
            return Err(Error::RingMismatch("operator and series share one context".into()));
        }
        let mut img: BTreeMap<ZVec, Rat> = BTreeMap::new();
        for (e, cls) in f.terms() {
            for (i, part) in cls.parts() {
                for (k, coeff) in part.coeffs().iter().enumerate() {
                    if coeff.is_zero() {
                        continue;
                    }
                    let col = self.col(((i, k), e)).ok_or_else(|| {
                        Error::WindowMargin(format!(
                            "image of basis vector ({i}, {k}) z^{e} leaves the window"
                        ))
                    })?;
                    for (w, c) in col {
                        let entry = img.entry(*w).or_insert_with(Rat::zero);
                        *entry += coeff * c;
                    }
                }
            }
        }
        let mut out = ZSeries::new(self.ctx, self.zmin, self.zmax)?;
        for ((label, ze), c) in img {
            if c.is_zero() {
                continue;
            }
            let cls = InsClass::basis_class(self.ctx, label.0, label.1)?.scale(&c);
            out.add_term(ze, &cls)?;
        }
        Ok(out)
    }

    /// Sum; a column is present only when both summands have it.
    pub fn add(&self, other: &EndOp) -> Result<EndOp> {
        self.check_shape(other)?;
        let mut cols = BTreeMap::new();
        for (v, ca) in &self.cols {
            if let Some(cb) = other.cols.get(v) {
                let mut raw = ca.clone();
                raw.extend(cb.iter().cloned());
                cols.insert(*v, normalize_col(raw));
            }
        }
        Ok(EndOp { ctx: self.ctx, zmin: self.zmin, zmax: self.zmax, cols })
    }

    pub fn scale(&self, c: &Rat) -> EndOp {
        let cols = self
            .cols
            .iter()
            .map(|(v, col)| {
                (*v, col.iter().filter_map(|(w, x)| {
                    let y = x * c;
                    if y.is_zero() { None } else { Some((*w, y)) }
                }).collect())
            })
            .collect();
        EndOp { ctx: self.ctx, zmin: self.zmin, zmax: self.zmax, cols }
    }

    pub fn sub(&self, other: &EndOp) -> Result<EndOp> {
        self.add(&other.scale(&rat_i(-1)))
    }

    /// Composition self after other; a column survives only when every
    /// intermediate image vector has a column in self.
    pub fn compose(&self, other: &EndOp) -> Result<EndOp> {
        self.check_shape(other)?;
        let mut cols = BTreeMap::new();
        'outer: for (v, mid) in &other.cols {
            let mut raw = Vec::new();
            for (w, c) in mid {
                let Some(col) = self.cols.get(w) else { continue 'outer };
                for (u, x) in col {
                    raw.push((*u, c * x));
                }
            }
            cols.insert(*v, normalize_col(raw));
        }
        Ok(EndOp { ctx: self.ctx, zmin: self.zmin, zmax: self.zmax, cols })
    }

    /// Keeps the columns whose domain and image both fit in the
    /// narrower window.
    pub fn restrict(&self, zmin: i64, zmax: i64) -> EndOp {
        let mut cols = BTreeMap::new();
        for ((label, z), col) in &self.cols {
            if *z < zmin || *z > zmax {
                continue;
            }
            if col.iter().all(|((_, ze), _)| *ze >= zmin && *ze <= zmax) {
                cols.insert(((*label), *z), col.clone());
            }
        }
        EndOp { ctx: self.ctx, zmin, zmax, cols }
    }

    fn check_shape(&self, other: &EndOp) -> Result<()> {
        if self.ctx != other.ctx || self.zmin != other.zmin || self.zmax != other.zmax {
            return Err(Error::RingMismatch("operators live on different windows".into()));
        }
        Ok(())
    }
}

/// Entry-wise comparison on the columns both operators represent.
/// Returns whether they agree there and how many columns were compared.
pub fn op_agreement(a: &EndOp, b: &EndOp) -> (bool, usize) {
    let mut count = 0;
    let mut equal = true;
    for (v, ca) in a.columns() {
        if let Some(cb) = b.col(v) {
            count += 1;
            if ca != cb {
                equal = false;
            }
        }
    }
    (equal, count)
}

/// The grading eigenvalue: half the ambient dimension minus the Hodge
/// exponent, lowered once more on negative contact orders.
pub fn mu_factor(n: usize, i: i64, k: usize) -> Rat {
    let shift = if i < 0 { 1 } else { 0 };
    rat_frac(n as i64, 2) - rat_i(k as i64 + shift)
}

/// The diagonal grading operator.
pub fn mu_op(ctx: PairContext, zmin: i64, zmax: i64) -> EndOp {
    EndOp::from_linear(ctx, zmin, zmax, |(i, k), z| {
        vec![(((i, k), z), mu_factor(ctx.n, i, k))]
    })
}

fn rho_images(ctx: PairContext) -> Result<BTreeMap<BasisLabel, Vec<(BasisLabel, Rat)>>> {
    let divisor = InsClass::from_part(ctx, 0, c1_log_tangent(ctx.n));
    let mut images = BTreeMap::new();
    for label in ctx.basis_indices() {
        let cls = InsClass::basis_class(ctx, label.0, label.1)?;
        let img = divisor.product(&cls)?;
        let mut out = Vec::new();
        for (i, part) in img.parts() {
            for (k, coeff) in part.coeffs().iter().enumerate() {
                if !coeff.is_zero() {
                    out.push(((i, k), coeff.clone()));
                }
            }
        }
        images.insert(label, out);
    }
    Ok(images)
}

/// Cup product with the log-tangent divisor class, applied at index
/// zero as n times the hyperplane and at nonzero indices as its
/// restriction. Preserves the contact order and the z-exponent.
pub fn rho_op(ctx: PairContext, zmin: i64, zmax: i64) -> Result<EndOp> {
    let images = rho_images(ctx)?;
    Ok(EndOp::from_linear(ctx, zmin, zmax, |label, z| {
        images[&label].iter().map(|(w, c)| ((*w, z), c.clone())).collect()
    }))
}

fn z_shift_op(ctx: PairContext, zmin: i64, zmax: i64, s: i64) -> EndOp {
    EndOp::from_linear(ctx, zmin, zmax, |label, z| vec![((label, z + s), rat_i(1))])
}

fn z_ddz_op(ctx: PairContext, zmin: i64, zmax: i64) -> EndOp {
    EndOp::from_linear(ctx, zmin, zmax, |label, z| vec![((label, z), rat_i(z))])
}

fn const_op(ctx: PairContext, zmin: i64, zmax: i64, c: Rat) -> EndOp {
    EndOp::from_linear(ctx, zmin, zmax, |label, z| vec![((label, z), c.clone())])
}

fn l_zero(ctx: PairContext, zmin: i64, zmax: i64) -> Result<EndOp> {
    let d = z_ddz_op(ctx, zmin, zmax);
    let half = const_op(ctx, zmin, zmax, rat_frac(1, 2));
    let mu = mu_op(ctx, zmin, zmax);
    let rho_over_z = z_shift_op(ctx, zmin, zmax, -1).compose(&rho_op(ctx, zmin, zmax)?)?;
    d.add(&half)?.add(&mu)?.add(&rho_over_z)
}

/// The Virasoro-type operator: z^{-1} for m = -1, the degree operator
/// for m = 0, and l_0 (z l_0)^m above. Built in an internally widened
/// z-window so every intermediate is exact, then restricted.
pub fn l_op(m: i64, ctx: PairContext, zmin: i64, zmax: i64) -> Result<EndOp> {
    if m < -1 {
        return Err(Error::Unsupported(format!("l_{m} is not defined")));
    }
    let ext = m.unsigned_abs() as i64 + 3;
    let (bmin, bmax) = (zmin - ext, zmax + ext);
    let op = if m == -1 {
        z_shift_op(ctx, bmin, bmax, -1)
    } else {
        let l0 = l_zero(ctx, bmin, bmax)?;
        let zl0 = z_shift_op(ctx, bmin, bmax, 1).compose(&l0)?;
        let mut power = EndOp::from_linear(ctx, bmin, bmax, |label, z| vec![((label, z), rat_i(1))]);
        for _ in 0..m {
            power = power.compose(&zl0)?;
        }
        l0.compose(&power)?
    };
    Ok(op.restrict(zmin, zmax))
}

fn pairing_table(ctx: PairContext) -> Result<BTreeMap<(BasisLabel, BasisLabel), Rat>> {
    let mut out = BTreeMap::new();
    let basis = ctx.basis_indices();
    for &a in &basis {
        for &b in &basis {
            let ca = InsClass::basis_class(ctx, a.0, a.1)?;
            let cb = InsClass::basis_class(ctx, b.0, b.1)?;
            let v = ca.pairing(&cb)?;
            if !v.is_zero() {
                out.insert((a, b), v);
            }
        }
    }
    Ok(out)
}

fn omega_vecs(
    table: &BTreeMap<(BasisLabel, BasisLabel), Rat>,
    u: &[(ZVec, Rat)],
    v: &[(ZVec, Rat)],
) -> Rat {
    let mut total = Rat::zero();
    for ((a, za), ca) in u {
        for ((b, zb), cb) in v {
            if za + zb != -1 {
                continue;
            }
            if let Some(p) = table.get(&(*a, *b)) {
                total += sign_pow(*za) * ca * cb * p;
            }
        }
    }
    total
}

/// Largest absolute residual of the infinitesimal-symplectic identity
/// over all basis-vector pairs the operator represents exactly.
pub fn check_symplectic(m: i64, ctx: PairContext, zmin: i64, zmax: i64) -> Result<Rat> {
    let op = l_op(m, ctx, zmin, zmax)?;
    let table = pairing_table(ctx)?;
    let mut worst = Rat::zero();
    let vectors: Vec<ZVec> = op.columns().map(|(v, _)| v).collect();
    for &f in &vectors {
        let af = op.col(f).expect("column listed");
        for &g in &vectors {
            let ag = op.col(g).expect("column listed");
            let fv = [(f, rat_i(1))];
            let gv = [(g, rat_i(1))];
            let r = omega_vecs(&table, af, &gv) + omega_vecs(&table, &fv, ag);
            if r.abs() > worst {
                worst = r.abs();
            }
        }
    }
    Ok(worst)
}

/// The commutator of two Virasoro-type operators on the requested
/// window, computed exactly on a widened window first.
pub fn bracket(m: i64, k: i64, ctx: PairContext, zmin: i64, zmax: i64) -> Result<EndOp> {
    let ext = m.unsigned_abs() as i64 + k.unsigned_abs() as i64 + 3;
    let (bmin, bmax) = (zmin - ext, zmax + ext);
    let lm = l_op(m, ctx, bmin, bmax)?;
    let lk = l_op(k, ctx, bmin, bmax)?;
    let comm = lm.compose(&lk)?.sub(&lk.compose(&lm)?)?;
    Ok(comm.restrict(zmin, zmax))
}

/// Verifies the bracket relation against (k-m) times the expected
/// operator on the common exact columns; returns the verdict and how
/// many columns took part.
pub fn bracket_matches(m: i64, k: i64, ctx: PairContext, zmin: i64, zmax: i64) -> Result<(bool, usize)> {
    let comm = bracket(m, k, ctx, zmin, zmax)?;
    if k == m {
        let count = comm.columns().count();
        let zero = comm.columns().all(|(_, col)| col.is_empty());
        return Ok((zero, count));
    }
    let expected = l_op(m + k, ctx, zmin, zmax)?.scale(&rat_i(k - m));
    let (equal, count) = op_agreement(&comm, &expected);
    if count == 0 {
        return Err(Error::WindowMargin(
            "no common exact columns; widen the z-window".into(),
        ));
    }
    Ok((equal, count))
}

/// One formal variable: descendant level, contact order, Hodge
/// exponent.
pub type GVar = (u32, i64, usize);

/// A Darboux coordinate: position (q) or momentum (p) at one variable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum DarbouxVar {
    Q(GVar),
    P(GVar),
}

/// A quadratic Hamiltonian: rational coefficients on unordered
/// monomials in Darboux coordinates.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct QuadHamiltonian {
    pub terms: BTreeMap<(DarbouxVar, DarbouxVar), Rat>,
}

impl QuadHamiltonian {
    fn add_term(&mut self, x: DarbouxVar, y: DarbouxVar, c: Rat) {
        if c.is_zero() {
            return;
        }
        let key = if x <= y { (x, y) } else { (y, x) };
        let e = self.terms.entry(key).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }
}

fn class_vec(c: &InsClass, z: i64, scale: &Rat) -> Vec<(ZVec, Rat)> {
    let mut out = Vec::new();
    for (i, part) in c.parts() {
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if !coeff.is_zero() {
                out.push((((i, k), z), coeff * scale));
            }
        }
    }
    out
}

fn apply_vec(op: &EndOp, v: &[(ZVec, Rat)]) -> Result<Vec<(ZVec, Rat)>> {
    let mut raw = Vec::new();
    for (w, c) in v {
        let col = op.col(*w).ok_or_else(|| {
            Error::WindowMargin("operator does not represent a needed basis vector".into())
        })?;
        for (u, x) in col {
            raw.push((*u, c * x));
        }
    }
    Ok(normalize_col(raw))
}

/// Expands the quadratic Hamiltonian h(f) = Omega(Af, f)/2 of an
/// infinitesimal symplectic operator in Darboux coordinates: positions
/// along basis classes at z^l, momenta along dual classes at
/// (-z)^{-1-l}, levels up to the given bound.
pub fn darboux_hamiltonian(op: &EndOp, level_max: u32) -> Result<QuadHamiltonian> {
    let ctx = op.ctx;
    let table = pairing_table(ctx)?;
    let basis = ctx.basis_indices();
    let mut qvecs: Vec<(GVar, Vec<(ZVec, Rat)>)> = Vec::new();
    let mut pvecs: Vec<(GVar, Vec<(ZVec, Rat)>)> = Vec::new();
    for l in 0..=level_max {
        for &(i, k) in &basis {
            qvecs.push(((l, i, k), vec![(((i, k), l as i64), rat_i(1))]));
            let dual = dual_basis_element(ctx, i, k)?;
            let sign = sign_pow(l as i64 + 1);
            pvecs.push(((l, i, k), class_vec(&dual, -1 - l as i64, &sign)));
        }
    }
    let images = |vecs: &[(GVar, Vec<(ZVec, Rat)>)]| -> Result<Vec<Vec<(ZVec, Rat)>>> {
        vecs.iter().map(|(_, v)| apply_vec(op, v)).collect()
    };
    let qimg = images(&qvecs)?;
    let pimg = images(&pvecs)?;
    let mut h = QuadHamiltonian::default();
    let half = rat_frac(1, 2);
    for (xi, (x, xv)) in qvecs.iter().enumerate() {
        for (yi, (y, yv)) in qvecs.iter().enumerate().skip(xi) {
            let c = if xi == yi {
                &half * omega_vecs(&table, &qimg[xi], xv)
            } else {
                &half * (omega_vecs(&table, &qimg[xi], yv) + omega_vecs(&table, &qimg[yi], xv))
            };
            h.add_term(DarbouxVar::Q(*x), DarbouxVar::Q(*y), c);
        }
    }
    for (xi, (x, xv)) in qvecs.iter().enumerate() {
        for (yi, (y, yv)) in pvecs.iter().enumerate() {
            let c = &half * (omega_vecs(&table, &qimg[xi], yv) + omega_vecs(&table, &pimg[yi], xv));
            h.add_term(DarbouxVar::Q(*x), DarbouxVar::P(*y), c);
        }
    }
    for (xi, (x, xv)) in pvecs.iter().enumerate() {
        for (yi, (y, yv)) in pvecs.iter().enumerate().skip(xi) {
            let c = if xi == yi {
                &half * omega_vecs(&table, &pimg[xi], xv)
            } else {
                &half * (omega_vecs(&table, &pimg[xi], yv) + omega_vecs(&table, &pimg[yi], xv))
            };
            h.add_term(DarbouxVar::P(*x), DarbouxVar::P(*y), c);
        }
    }
    Ok(h)
}

/// One term of a quantized operator: a rational coefficient, a power
/// of the genus parameter, a monomial in the t-variables and a list of
/// derivatives.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct DiffTerm {
    pub hbar: i8,
    pub tmono: Vec<GVar>,
    pub derivs: Vec<GVar>,
    pub coef: Rat,
}

/// A differential operator in the t-variables with genus-parameter
/// powers in {-1, 0, 1}.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct DiffOperator {
    pub terms: Vec<DiffTerm>,
}

impl DiffOperator {
    fn push(&mut self, hbar: i8, mut tmono: Vec<GVar>, mut derivs: Vec<GVar>, coef: Rat) {
        if coef.is_zero() {
            return;
        }
        tmono.sort_unstable();
        derivs.sort_unstable();
        self.terms.push(DiffTerm { hbar, tmono, derivs, coef });
    }

    fn canonicalize(mut self) -> DiffOperator {
        let mut acc: BTreeMap<(i8, Vec<GVar>, Vec<GVar>), Rat> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let e = acc.entry((t.hbar, t.tmono, t.derivs)).or_insert_with(Rat::zero);
            *e += t.coef;
        }
        DiffOperator {
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|((hbar, tmono, derivs), coef)| DiffTerm { hbar, tmono, derivs, coef })
                .collect(),
        }
    }

    /// The coefficient of an exact term shape, zero when absent.
    pub fn coefficient(&self, hbar: i8, tmono: &[GVar], derivs: &[GVar]) -> Rat {
        let mut tm = tmono.to_vec();
        let mut dv = derivs.to_vec();
        tm.sort_unstable();
        dv.sort_unstable();
        self.terms
            .iter()
            .find(|t| t.hbar == hbar && t.tmono == tm && t.derivs == dv)
            .map(|t| t.coef.clone())
            .unwrap_or_else(Rat::zero)
    }
}

/// Quantization of a quadratic Hamiltonian: position pairs divide by
/// the genus parameter, mixed pairs become first-order derivatives,
/// momentum pairs become second-order derivatives times the parameter.
pub fn quantize(h: &QuadHamiltonian) -> DiffOperator {
    let mut out = DiffOperator::default();
    for ((x, y), c) in &h.terms {
        match (x, y) {
            (DarbouxVar::Q(a), DarbouxVar::Q(b)) => out.push(-1, vec![*a, *b], vec![], c.clone()),
            (DarbouxVar::Q(a), DarbouxVar::P(b)) => out.push(0, vec![*a], vec![*b], c.clone()),
            (DarbouxVar::P(a), DarbouxVar::P(b)) => out.push(1, vec![], vec![*a, *b], c.clone()),
            (DarbouxVar::P(_), DarbouxVar::Q(_)) => unreachable!("keys are sorted"),
        }
    }
    out.canonicalize()
}

const DILATON_VAR: GVar = (1, 0, 0);

/// Rewrites position variables through the dilaton shift q = t - z:
/// every occurrence of the level-one unit variable expands into the
/// t-variable minus one.
pub fn dilaton_shift(op: &DiffOperator) -> DiffOperator {
    let mut out = DiffOperator::default();
    for t in &op.terms {
        let rest: Vec<GVar> = t.tmono.iter().copied().filter(|v| *v != DILATON_VAR).collect();
        let count = t.tmono.len() - rest.len();
        let mut binom = rat_i(1);
        for j in 0..=count {
            // binomial expansion of (t - 1)^count, highest power first
            let mut mono = rest.clone();
            for _ in 0..(count - j) {
                mono.push(DILATON_VAR);
            }
            let sign = sign_pow(j as i64);
            out.push(t.hbar, mono, t.derivs.clone(), &t.coef * &binom * sign);
            binom = binom * rat_i((count - j) as i64) / rat_i(j as i64 + 1);
        }
    }
    out.canonicalize()
}

/// The quantized string operator: minus the unit-direction derivative,
/// the level shift, and half the pairing form on the level-zero
/// variables over the genus parameter.
fn build_string(ctx: PairContext, level_max: u32) -> Result<DiffOperator> {
    let mut op = DiffOperator::default();
    op.push(0, vec![], vec![(0, 0, 0)], rat_i(-1));
    let basis = ctx.basis_indices();
    for l in 0..level_max {
        for &(i, k) in &basis {
            op.push(0, vec![(l + 1, i, k)], vec![(l, i, k)], rat_i(1));
        }
    }
    let table = pairing_table(ctx)?;
    for (ai, &a) in basis.iter().enumerate() {
        for &b in basis.iter().skip(ai) {
            let Some(p) = table.get(&(a, b)) else { continue };
            let c = if a == b { p * rat_frac(1, 2) } else { p.clone() };
            op.push(-1, vec![(0, a.0, a.1), (0, b.0, b.1)], vec![], c);
        }
    }
    Ok(op.canonicalize())
}

/// The quantized degree operator: the dilaton-direction derivative
/// weighted by half of (3 - dim), the level-and-grading scaling, the
/// divisor-class derivative, the divisor shift between adjacent
/// levels, and the divisor-twisted quadratic form over the genus
/// parameter. No constant term is added: at genus zero a constant has
/// no effect on the residual.
fn build_degree(ctx: PairContext, level_max: u32) -> Result<DiffOperator> {
    let n = ctx.n;
    let mut op = DiffOperator::default();
    op.push(0, vec![], vec![(1, 0, 0)], rat_frac(-(3 - n as i64), 2));
    let basis = ctx.basis_indices();
    for l in 0..=level_max {
        for &(i, k) in &basis {
            let c = rat_i(l as i64) + rat_frac(1, 2) - mu_factor(n, i, k);
            op.push(0, vec![(l, i, k)], vec![(l, i, k)], c);
        }
    }
    let divisor = InsClass::from_part(ctx, 0, c1_log_tangent(n));
    for (i, part) in divisor.parts() {
        for (k, coeff) in part.coeffs().iter().enumerate() {
            if !coeff.is_zero() {
                op.push(0, vec![], vec![(0, i, k)], -coeff.clone());
            }
        }
    }
    let rho = rho_images(ctx)?;
    for l in 0..level_max {
        for &(i, k) in &basis {
            for ((i2, k2), c) in &rho[&(i, k)] {
                op.push(0, vec![(l + 1, i, k)], vec![(l, *i2, *k2)], c.clone());
            }
        }
    }
    let table = pairing_table(ctx)?;
    for (ai, &a) in basis.iter().enumerate() {
        for &b in basis.iter().skip(ai) {
            let mut c = Rat::zero();
            for ((i2, k2), r) in &rho[&a] {
                if let Some(p) = table.get(&((*i2, *k2), b)) {
                    c += r * p;
                }
            }
            if a == b {
                c = c * rat_frac(1, 2);
            }
            op.push(-1, vec![(0, a.0, a.1), (0, b.0, b.1)], vec![], c);
        }
    }
    Ok(op.canonicalize())
}

/// The quantized operator for m in {-1, 0}, written in t-variables
/// with levels up to the bound.
pub fn build_l(m: i64, ctx: PairContext, level_max: u32) -> Result<DiffOperator> {
    match m {
        -1 => build_string(ctx, level_max),
        0 => build_degree(ctx, level_max),
        _ => Err(Error::Unsupported(format!(
            "quantized operator for m = {m} is out of scope"
        ))),
    }
}

/// A truncated genus-zero potential: rational coefficients on
/// (q-degree, variable multiset) monomials; None marks a coefficient
/// the provider declined.
#[derive(Clone, PartialEq, Debug)]
pub struct PotentialSeries {
    pub ctx: PairContext,
    pub qmax: u32,
    pub degree_max: usize,
    pub level_max: u32,
    pub coeffs: BTreeMap<(u32, Vec<GVar>), Option<Rat>>,
}

fn multiset_factor(m: &[GVar]) -> Rat {
    let mut prod = rat_i(1);
    let mut idx = 0;
    while idx < m.len() {
        let mut end = idx + 1;
        while end < m.len() && m[end] == m[idx] {
            end += 1;
        }
        for r in 2..=(end - idx) as i64 {
            prod = prod * rat_i(r);
        }
        idx = end;
    }
    prod
}

fn multisets(vars: &[GVar], size: usize) -> Vec<Vec<GVar>> {
    fn rec(vars: &[GVar], start: usize, size: usize, cur: &mut Vec<GVar>, out: &mut Vec<Vec<GVar>>) {
        if size == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..vars.len() {
            cur.push(vars[j]);
            rec(vars, j, size - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, 0, size, &mut Vec::new(), &mut out);
    out
}

/// Fills the potential's truncated coefficient table from a provider:
/// the coefficient of q^d times a variable monomial is the correlator
/// over the monomial's insertions divided by the product of
/// multiplicity factorials. Declined queries are flagged, not guessed.
pub fn assemble_potential(
    p: &dyn InvariantProvider,
    ctx: PairContext,
    qmax: u32,
    degree_max: usize,
    level_max: u32,
) -> Result<PotentialSeries> {
    let mut vars = Vec::new();
    for l in 0..=level_max {
        for (i, k) in ctx.basis_indices() {
            vars.push((l, i, k));
        }
    }
    let mut coeffs = BTreeMap::new();
    for size in 0..=degree_max {
        for m in multisets(&vars, size) {
            let insertions: Vec<(u32, InsClass)> = m
                .iter()
                .map(|(l, i, k)| Ok((*l, InsClass::basis_class(ctx, *i, *k)?)))
                .collect::<Result<_>>()?;
            for d in 0..=qmax {
                let q = Query { degree: d, insertions: insertions.clone() };
                let val = p.invariant(&q)?.map(|v| v / multiset_factor(&m));
                coeffs.insert((d, m.clone()), val);
            }
        }
    }
    Ok(PotentialSeries { ctx, qmax, degree_max, level_max, coeffs })
}

impl PotentialSeries {
    fn in_truncation(&self, m: &[GVar]) -> bool {
        m.len() <= self.degree_max
            && m.iter().all(|(l, i, k)| {
                *l <= self.level_max && i.abs() <= self.ctx.window && *k <= self.ctx.ring_dim(*i)
            })
    }

    /// The coefficient at one monomial; outer None = outside the
    /// truncation, inner None = declined by the provider.
    pub fn coefficient(&self, d: u32, m: &[GVar]) -> Option<Option<Rat>> {
        if d > self.qmax || !self.in_truncation(m) {
            return None;
        }
        let mut key = m.to_vec();
        key.sort_unstable();
        Some(self.coeffs.get(&(d, key)).cloned().flatten())
    }
}

fn mult_of(m: &[GVar], v: GVar) -> i64 {
    m.iter().filter(|x| **x == v).count() as i64
}

fn remove_all(m: &[GVar], sub: &[GVar]) -> Option<Vec<GVar>> {
    let mut out = m.to_vec();
    for v in sub {
        let pos = out.iter().position(|x| x == v)?;
        out.remove(pos);
    }
    Some(out)
}

fn splits(m: &[GVar]) -> Vec<(Vec<GVar>, Vec<GVar>)> {
    let mut out = Vec::new();
    let bits = 1usize << m.len();
    for mask in 0..bits {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (j, v) in m.iter().enumerate() {
            if mask & (1 << j) != 0 {
                a.push(*v);
            } else {
                b.push(*v);
            }
        }
        a.sort_unstable();
        b.sort_unstable();
        out.push((a, b));
    }
    out.sort();
    out.dedup();
    out
}

/// The genus-parameter-inverse part of the conjugated operator acting
/// through the potential: quadratic function terms pass through,
/// first-order terms pick up one derivative of the potential, and
/// second-order terms pick up a product of two first derivatives.
/// Coefficients whose evaluation needs anything outside the
/// truncation, or a flagged potential coefficient, come back None.
pub fn genus0_residual(
    l: &DiffOperator,
    f: &PotentialSeries,
) -> Vec<((u32, Vec<GVar>), Option<Rat>)> {
    let mut candidates: Vec<(u32, Vec<GVar>)> = Vec::new();
    let mut vars = Vec::new();
    for lv in 0..=f.level_max {
        for (i, k) in f.ctx.basis_indices() {
            vars.push((lv, i, k));
        }
    }
    for size in 0..f.degree_max {
        for m in multisets(&vars, size) {
            for d in 0..=f.qmax {
                candidates.push((d, m.clone()));
            }
        }
    }
    let deriv_coeff = |d: u32, m: &[GVar], b: GVar| -> Option<Option<Rat>> {
        // coefficient of the monomial m inside d(F)/d(t_b)
        let mut grown = m.to_vec();
        grown.push(b);
        grown.sort_unstable();
        let inner = f.coefficient(d, &grown)?;
        Some(inner.map(|v| v * rat_i(mult_of(&grown, b))))
    };
    let mut out = Vec::new();
    for (d, m) in candidates {
        let mut total = Rat::zero();
        let mut ok = true;
        for t in &l.terms {
            match t.hbar {
                -1 => {
                    if d == 0 && t.tmono == m {
                        total += t.coef.clone();
                    }
                }
                0 => {
                    let b = t.derivs[0];
                    let Some(rest) = remove_all(&m, &t.tmono) else { continue };
                    match deriv_coeff(d, &rest, b) {
                        None => ok = false,
                        Some(None) => ok = false,
                        Some(Some(v)) => total += &t.coef * &v,
                    }
                }
                1 => {
                    let a = t.derivs[0];
                    let b = t.derivs[1];
                    let Some(rest) = remove_all(&m, &t.tmono) else { continue };
                    for (m1, m2) in splits(&rest) {
                        for d1 in 0..=d {
                            let v1 = match deriv_coeff(d1, &m1, a) {
                                None => {
                                    ok = false;
                                    continue;
                                }
                                Some(None) => {
                                    ok = false;
                                    continue;
                                }
                                Some(Some(v)) => v,
                            };
                            let v2 = match deriv_coeff(d - d1, &m2, b) {
                                None => {
                                    ok = false;
                                    continue;
                                }
                                Some(None) => {
                                    ok = false;
                                    continue;
                                }
                                Some(Some(v)) => v,
                            };
                            total += &t.coef * &(v1 * v2);
                        }
                    }
                }
                _ => unreachable!("genus parameter powers are -1, 0, 1"),
            }
            if !ok {
                break;
            }
        }
        out.push(((d, m), if ok { Some(total) } else { None }));
    }
    out
}

/// The central cocycle of the quantized commutator of the m = -1 and
/// m = 1 operators, with variables cut off at contact orders |i| <= N.
/// Pairs a momentum-pair monomial of one Hamiltonian with the matching
/// position-pair monomial of the other, weighted 2 on the diagonal.
pub fn anomaly(n: usize, cutoff: i64) -> Result<Rat> {
    if cutoff < 1 {
        return Err(Error::Unsupported("cutoff must be at least 1".into()));
    }
    let ctx = PairContext::new(n, cutoff)?;
    let level_max = 1u32;
    let span = level_max as i64 + 4;
    let a = l_op(-1, ctx, -span, span)?;
    let b = l_op(1, ctx, -span, span)?;
    let ha = darboux_hamiltonian(&a, level_max)?;
    let hb = darboux_hamiltonian(&b, level_max)?;
    let collect = |h: &QuadHamiltonian, want_q: bool| -> BTreeMap<(GVar, GVar), Rat> {
        h.terms
            .iter()
            .filter_map(|((x, y), c)| match (x, y, want_q) {
                (DarbouxVar::Q(a), DarbouxVar::Q(b), true) => Some(((*a, *b), c.clone())),
                (DarbouxVar::P(a), DarbouxVar::P(b), false) => Some(((*a, *b), c.clone())),
                _ => None,
            })
            .collect()
    };
    let cocycle = |pp: &BTreeMap<(GVar, GVar), Rat>, qq: &BTreeMap<(GVar, GVar), Rat>| -> Rat {
        let mut total = Rat::zero();
        for (key, cp) in pp {
            if let Some(cq) = qq.get(key) {
                let weight = if key.0 == key.1 { rat_i(2) } else { rat_i(1) };
                total += cp * cq * weight;
            }
        }
        total
    };
    let ppa = collect(&ha, false);
    let qqa = collect(&ha, true);
    let ppb = collect(&hb, false);
    let qqb = collect(&hb, true);
    Ok(cocycle(&ppa, &qqb) - cocycle(&ppb, &qqa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::SmallProvider;

    fn ctx(n: usize, w: i64) -> PairContext {
        PairContext::new(n, w).unwrap()
    }

    fn basis(c: PairContext, i: i64, k: usize) -> InsClass {
        InsClass::basis_class(c, i, k).unwrap()
    }

    fn single(c: PairContext, zmin: i64, zmax: i64, e: i64, cls: &InsClass) -> ZSeries {
        let mut s = ZSeries::new(c, zmin, zmax).unwrap();
        s.add_term(e, cls).unwrap();
        s
    }

    #[test]
    fn residue_pairing_examples() {
        let c1 = ctx(1, 2);
        let f = single(c1, -3, 3, 0, &basis(c1, 1, 0));
        let g = single(c1, -3, 3, -1, &basis(c1, -1, 0));
        assert_eq!(omega(&f, &g).unwrap(), rat_i(1));
        assert_eq!(omega(&g, &f).unwrap(), rat_i(-1));

        let c2 = ctx(2, 2);
        let f = single(c2, -3, 3, 0, &basis(c2, 1, 1));
        let g = single(c2, -3, 3, -1, &basis(c2, -1, 0));
        assert_eq!(omega(&f, &g).unwrap(), rat_i(1));

        let ff = single(c2, -3, 3, 0, &basis(c2, 0, 1));
        assert_eq!(omega(&ff, &ff).unwrap(), rat_i(0));

        let mut h = single(c2, -3, 3, 0, &basis(c2, 0, 0));
        h.add_term(2, &basis(c2, 0, 2)).unwrap();
        let k = single(c2, -3, 3, 1, &basis(c2, 0, 2));
        assert_eq!(omega(&h, &k).unwrap(), rat_i(0));
        assert_eq!(omega(&h, &h).unwrap(), rat_i(0));
    }

    #[test]
    fn grading_and_divisor_operators() {
        let c = ctx(2, 2);
        assert_eq!(mu_factor(2, 0, 0), rat_i(1));
        assert_eq!(mu_factor(2, 0, 2), rat_i(-1));
        assert_eq!(mu_factor(2, -1, 0), rat_i(0));
        assert_eq!(mu_factor(3, 1, 1), rat_frac(1, 2));

        let rho = rho_op(c, -2, 2).unwrap();
        let img = rho.col(((1, 0), 0)).unwrap();
        assert_eq!(img.as_slice(), &[(((1, 1), 0), rat_i(2))]);
        let top = rho.col(((0, 2), 1)).unwrap();
        assert!(top.is_empty());

        let mu = mu_op(c, -2, 2);
        for (v, col) in mu.columns() {
            assert!(col.iter().all(|(w, _)| *w == v));
        }
    }

    #[test]
    fn l_operators_follow_their_definitions() {
        let c = ctx(2, 2);
        let lm1 = l_op(-1, c, -4, 4).unwrap();
        assert_eq!(
            lm1.col(((0, 1), 0)).unwrap().as_slice(),
            &[(((0, 1), -1), rat_i(1))]
        );
        assert!(lm1.col(((0, 1), -4)).is_none());

        let l0 = l_op(0, c, -4, 4).unwrap();
        let img = l0.col(((0, 0), 0)).unwrap();
        assert_eq!(
            img.as_slice(),
            &[
                (((0, 0), 0), rat_frac(3, 2)),
                (((0, 1), -1), rat_i(2)),
            ]
        );

        let l1 = l_op(1, c, -4, 4).unwrap();
        let ext = 6;
        let l0b = l_op(0, c, -4 - ext, 4 + ext).unwrap();
        let z = z_shift_op(c, -4 - ext, 4 + ext, 1);
        let direct = l0b.compose(&z.compose(&l0b).unwrap()).unwrap().restrict(-4, 4);
        let (equal, count) = op_agreement(&l1, &direct);
        assert!(equal);
        assert!(count > 0);
    }

    #[test]
    fn l_operators_are_infinitesimal_symplectic() {
        let c = ctx(2, 2);
        for m in [-1, 0, 1, 2] {
            assert_eq!(check_symplectic(m, c, -4, 4).unwrap(), rat_i(0), "m = {m}");
        }
    }

    #[test]
    fn bracket_table_holds_on_interior_windows() {
        let c = ctx(2, 2);
        for m in [-1i64, 0, 1] {
            for k in [-1i64, 0, 1] {
                let (ok, count) = bracket_matches(m, k, c, -5, 5).unwrap();
                assert!(ok, "bracket ({m}, {k})");
                assert!(count > 0, "bracket ({m}, {k}) compared nothing");
            }
        }
        let err = bracket_matches(0, 1, c, 0, 0);
        assert!(matches!(err, Err(Error::WindowMargin(_))));
    }

    #[test]
    fn quantization_rules_and_dilaton_shift() {
        let a: GVar = (0, 0, 1);
        let b: GVar = (1, 0, 0);
        let mut h = QuadHamiltonian::default();
        h.add_term(DarbouxVar::Q(a), DarbouxVar::Q(b), rat_i(3));
        h.add_term(DarbouxVar::Q(b), DarbouxVar::P(a), rat_i(5));
        h.add_term(DarbouxVar::P(a), DarbouxVar::P(b), rat_i(7));
        let op = quantize(&h);
        assert_eq!(op.coefficient(-1, &[a, b], &[]), rat_i(3));
        assert_eq!(op.coefficient(0, &[b], &[a]), rat_i(5));
        assert_eq!(op.coefficient(1, &[], &[a, b]), rat_i(7));

        let shifted = dilaton_shift(&op);
        assert_eq!(shifted.coefficient(0, &[b], &[a]), rat_i(5));
        assert_eq!(shifted.coefficient(0, &[], &[a]), rat_i(-5));
        assert_eq!(shifted.coefficient(-1, &[a, b], &[]), rat_i(3));
        assert_eq!(shifted.coefficient(-1, &[a], &[]), rat_i(-3));

        let mut sq = QuadHamiltonian::default();
        sq.add_term(DarbouxVar::Q(b), DarbouxVar::Q(b), rat_i(1));
        let sh = dilaton_shift(&quantize(&sq));
        assert_eq!(sh.coefficient(-1, &[b, b], &[]), rat_i(1));
        assert_eq!(sh.coefficient(-1, &[b], &[]), rat_i(-2));
        assert_eq!(sh.coefficient(-1, &[], &[]), rat_i(1));
    }

    #[test]
    fn quantized_string_operator_matches_its_closed_form() {
        let c = ctx(2, 2);
        let lm1 = build_l(-1, c, 2).unwrap();
        let unit: GVar = (0, 0, 0);
        assert_eq!(lm1.coefficient(0, &[], &[unit]), rat_i(-1));
        for l in 0..2u32 {
            for (i, k) in c.basis_indices() {
                assert_eq!(
                    lm1.coefficient(0, &[(l + 1, i, k)], &[(l, i, k)]),
                    rat_i(1),
                    "shift term at level {l}, ({i}, {k})"
                );
            }
        }
        assert_eq!(lm1.coefficient(-1, &[(0, 0, 0), (0, 0, 2)], &[]), rat_i(1));
        assert_eq!(lm1.coefficient(-1, &[(0, 0, 1), (0, 0, 1)], &[]), rat_frac(1, 2));
        assert_eq!(lm1.coefficient(-1, &[(0, 1, 0), (0, -1, 1)], &[]), rat_i(1));
        assert_eq!(lm1.coefficient(-1, &[(0, 1, 1), (0, -1, 0)], &[]), rat_i(1));
        let stray = lm1
            .terms
            .iter()
            .filter(|t| t.hbar != -1 && !(t.hbar == 0 && t.derivs.len() == 1))
            .count();
        assert_eq!(stray, 0);
    }

    #[test]
    fn quantized_degree_operator_matches_its_closed_form() {
        let c = ctx(2, 2);
        let l0 = build_l(0, c, 2).unwrap();
        let unit: GVar = (1, 0, 0);
        assert_eq!(l0.coefficient(0, &[], &[unit]), rat_frac(-1, 2));
        for l in 0..=2u32 {
            for (i, k) in c.basis_indices() {
                let expected = rat_i(l as i64) + rat_frac(1, 2) - mu_factor(2, i, k);
                assert_eq!(
                    l0.coefficient(0, &[(l, i, k)], &[(l, i, k)]),
                    expected,
                    "scaling term at level {l}, ({i}, {k})"
                );
            }
        }
        assert_eq!(l0.coefficient(0, &[], &[(0, 0, 1)]), rat_i(-2));
        for l in 0..2u32 {
            for (i, k) in c.basis_indices() {
                if k + 1 > c.ring_dim(i) {
                    continue;
                }
                assert_eq!(
                    l0.coefficient(0, &[(l + 1, i, k)], &[(l, i, k + 1)]),
                    rat_i(2),
                    "divisor shift at level {l}, ({i}, {k})"
                );
            }
        }
        assert_eq!(l0.coefficient(-1, &[(0, 0, 0), (0, 0, 1)], &[]), rat_i(2));
        assert_eq!(l0.coefficient(-1, &[(0, 1, 0), (0, -1, 0)], &[]), rat_i(2));
    }

    #[test]
    fn potential_assembly_and_genus_zero_residuals() {
        let c = ctx(2, 2);
        let p = SmallProvider::new(2).unwrap();
        let f = assemble_potential(&p, c, 2, 3, 1).unwrap();

        let key = (1u32, vec![(0, 0, 2), (0, 0, 2), (0, 1, 0)]);
        assert_eq!(f.coeffs[&key], Some(rat_frac(1, 2)));
        let flagged = f.coeffs.values().filter(|v| v.is_none()).count();
        assert!(flagged > 0);
        let nonzero = f
            .coeffs
            .values()
            .filter(|v| matches!(v, Some(x) if !x.is_zero()))
            .count();
        assert!(nonzero > 0);

        for m in [-1i64, 0] {
            let op = build_l(m, c, 1).unwrap();
            let res = genus0_residual(&op, &f);
            let tested = res.iter().filter(|(_, v)| v.is_some()).count();
            assert!(tested > 0, "operator {m} tested nothing");
            for ((d, mono), v) in &res {
                if let Some(x) = v {
                    assert!(
                        x.is_zero(),
                        "operator {m} residual at q^{d} {mono:?} = {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn cutoff_anomaly_grows_linearly_and_never_converges() {
        let values: Vec<Rat> = (2..=8).map(|n| anomaly(2, n).unwrap()).collect();
        let diffs: Vec<Rat> = values.windows(2).map(|w| &w[1] - &w[0]).collect();
        assert!(!diffs[0].is_zero());
        for d in &diffs {
            assert_eq!(d, &diffs[0]);
        }
        for w in values.windows(2) {
            assert!(w[1].abs() > w[0].abs());
        }
    }
}
