//! Cohomology of complex projective space with exact rational
//! coefficients, plus the maps tying P^n to a hyperplane P^{n-1}:
//! restriction, the Gysin pushforward and the log-tangent Chern class.

use std::fmt;

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::rat::{rat_i, rat_str, Rat};

/// A class in H^*(P^m; Q) on the monomial basis 1, H, ..., H^m.
///
/// `H^a` for a > m is the zero class, so `monomial` never fails; cup
/// products truncate above the top degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CohClass {
    dim: usize,
    coeffs: Vec<Rat>, // length dim + 1
}

impl CohClass {
    pub fn zero(dim: usize) -> Self {
        CohClass { dim, coeffs: vec![Rat::zero(); dim + 1] }
    }

    pub fn monomial(dim: usize, a: usize) -> Self {
        let mut c = CohClass::zero(dim);
        if a <= dim {
            c.coeffs[a] = rat_i(1);
        }
        c
    }

    pub fn one(dim: usize) -> Self {
        CohClass::monomial(dim, 0)
    }

    pub fn from_coeffs(dim: usize, coeffs: Vec<Rat>) -> Result<Self> {
        if coeffs.len() != dim + 1 {
            return Err(Error::RingMismatch(format!(
                "expected {} coefficients for P^{}, got {}",
                dim + 1,
                dim,
                coeffs.len()
            )));
        }
        Ok(CohClass { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, a: usize) -> Rat {
        self.coeffs.get(a).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_dim(&self, other: &CohClass) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::RingMismatch(format!(
                "P^{} class combined with P^{} class",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CohClass) -> Result<CohClass> {
        self.check_dim(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CohClass { dim: self.dim, coeffs })
    }

    pub fn scale(&self, c: &Rat) -> CohClass {
        CohClass {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Cup product in H^*(P^m); powers above H^m vanish.
    pub fn cup(&self, other: &CohClass) -> Result<CohClass> {
        self.check_dim(other)?;
        let mut out = CohClass::zero(self.dim);
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                if cb.is_zero() || a + b > self.dim {
                    continue;
                }
                out.coeffs[a + b] += ca * cb;
            }
        }
        Ok(out)
    }

    /// Integration over P^m: the coefficient of H^m.
    pub fn integrate(&self) -> Rat {
        self.coeffs[self.dim].clone()
    }

    /// Pullback along the inclusion P^{m-1} -> P^m of a hyperplane:
    /// H^a restricts to h^a, and the top power dies.
    pub fn restrict(&self) -> CohClass {
        assert!(self.dim >= 1, "cannot restrict a class on P^0");
        CohClass {
            dim: self.dim - 1,
            coeffs: self.coeffs[..self.dim].to_vec(),
        }
    }

    /// Gysin pushforward along the same inclusion: h^a maps to H^{a+1}.
    pub fn gysin(&self) -> CohClass {
        let mut coeffs = Vec::with_capacity(self.dim + 2);
        coeffs.push(Rat::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        CohClass { dim: self.dim + 1, coeffs }
    }

    /// Hodge exponent p of a (scalar multiple of a) monomial H^a.
    pub fn hodge_p(&self) -> Result<usize> {
        let nonzero: Vec<usize> = (0..=self.dim)
            .filter(|&a| !self.coeffs[a].is_zero())
            .collect();
        match nonzero.as_slice() {
            [a] => Ok(*a),
            [] => Err(Error::NotMonomial("zero class".into())),
            _ => Err(Error::NotMonomial(self.render('H'))),
        }
    }

    /// Renders with the given variable name, e.g. `3*H^2 + 1`.
    pub fn render(&self, var: char) -> String {
        let mut terms = Vec::new();
        for (a, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let base = match a {
                0 => "1".to_string(),
                1 => var.to_string(),
                _ => format!("{var}^{a}"),
            };
            if a == 0 {
                terms.push(rat_str(c));
            } else if c == &rat_i(1) {
                terms.push(base);
            } else {
                terms.push(format!("{}*{}", rat_str(c), base));
            }
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

impl fmt::Display for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render('H'))
    }
}

/// First Chern class of the log-tangent bundle of (P^n, hyperplane):
/// n times the hyperplane class.
pub fn c1_log_tangent(n: usize) -> CohClass {
    CohClass::monomial(n, 1).scale(&rat_i(n as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cup_truncates_and_integrates() {
        let h = CohClass::monomial(2, 1);
        let h2 = h.cup(&h).unwrap();
        assert_eq!(h2, CohClass::monomial(2, 2));
        assert_eq!(h2.integrate(), rat_i(1));
        assert!(h2.cup(&h).unwrap().is_zero());
        assert_eq!(h.integrate(), rat_i(0));
    }

    #[test]
    fn projection_formula() {
        // integrate_X(gysin(a) cup b) = integrate_D(a cup restrict(b))
        // checked exhaustively on monomials for every pair up to P^4.
        for n in 1usize..=4 {
            for a in 0..n {
                for b in 0..=n {
                    let alpha = CohClass::monomial(n - 1, a);
                    let beta = CohClass::monomial(n, b);
                    let lhs = alpha.gysin().cup(&beta).unwrap().integrate();
                    let rhs = alpha.cup(&beta.restrict()).unwrap().integrate();
                    assert_eq!(lhs, rhs, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn gysin_of_restriction_cups_with_divisor() {
        for n in 1usize..=4 {
            for b in 0..=n {
                let beta = CohClass::monomial(n, b);
                let lhs = beta.restrict().gysin();
                let rhs = beta.cup(&CohClass::monomial(n, 1)).unwrap();
                assert_eq!(lhs, rhs, "n={n} b={b}");
            }
        }
    }

    #[test]
    fn log_tangent_chern() {
        assert_eq!(c1_log_tangent(2), CohClass::monomial(2, 1).scale(&rat_i(2)));
        assert_eq!(c1_log_tangent(1), CohClass::monomial(1, 1));
    }

    #[test]
    fn point_ring() {
        // D = P^0 for the smallest pair: only the unit survives.
        let one = CohClass::one(0);
        assert_eq!(one.integrate(), rat_i(1));
        assert_eq!(one.gysin(), CohClass::monomial(1, 1));
        let h = CohClass::monomial(1, 1);
        assert!(h.restrict().is_zero());
    }

    #[test]
    fn hodge_exponent() {
        assert_eq!(CohClass::monomial(3, 2).hodge_p().unwrap(), 2);
        assert_eq!(CohClass::monomial(3, 2).scale(&rat_i(5)).hodge_p().unwrap(), 2);
        assert!(CohClass::zero(3).hodge_p().is_err());
        let mixed = CohClass::monomial(3, 1).add(&CohClass::monomial(3, 2)).unwrap();
        assert!(mixed.hodge_p().is_err());
    }

    #[test]
    fn render_forms() {
        let c = CohClass::monomial(2, 2)
            .scale(&rat_i(3))
            .add(&CohClass::one(2))
            .unwrap();
        assert_eq!(c.render('H'), "1 + 3*H^2");
        assert_eq!(CohClass::zero(2).render('h'), "0");
    }
}
