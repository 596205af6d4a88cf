//! Small dense exact linear algebra: just enough Gaussian elimination
//! for dual bases and the structure-constant solver.

use num::traits::Zero;

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Solves A x = b for square A by Gaussian elimination with exact
/// pivoting. Errors if A is singular.
pub fn solve_square(a: &[Vec<Rat>], b: &[Rat]) -> Result<Vec<Rat>> {
    let n = a.len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero());
        let pivot = pivot.ok_or_else(|| Error::Inconsistent("singular matrix".into()))?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for c in col..=n {
            m[col][c] = &m[col][c] / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    m[r][c] = &m[r][c] - &f * &m[col][c];
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n].clone()).collect())
}

/// An incremental reduced row basis for a sparse linear system over Q.
///
/// Rows are `(coefficients over unknowns 0..n, constant)` encoding
/// `sum coeff_i x_i = constant`. Feeding rows keeps a reduced basis;
/// afterwards each unknown is either pinned to a value or free.
pub struct RowReducer {
    n: usize,
    /// Reduced rows keyed by leading column: rows[c] has leading 1 at c.
    rows: Vec<Option<(Vec<(usize, Rat)>, Rat)>>,
}

impl RowReducer {
    pub fn new(n: usize) -> Self {
        RowReducer { n, rows: vec![None; n] }
    }

    /// Reduces `row = rhs` against the basis and inserts the remainder.
    /// Errors if the row reduces to `0 = c` with `c != 0`.
    ///
    /// The basis stays in reduced form: every stored row touches its own
    /// pivot column (with coefficient 1) and otherwise only free columns.
    pub fn add_row(&mut self, row: Vec<(usize, Rat)>, rhs: Rat) -> Result<()> {
        let mut row = normalize(row);
        let mut rhs = rhs;
        // Eliminate every pivot column present in the row. Each step
        // removes one pivot entry and introduces only free columns, so
        // this terminates.
        loop {
            let hit = row.iter().find(|(i, _)| self.rows[*i].is_some()).cloned();
            let Some((col, f)) = hit else { break };
            let (base, base_rhs) = self.rows[col].clone().unwrap();
            row = sub_scaled(&row, &base, &f);
            rhs = rhs - &f * &base_rhs;
        }
        if row.is_empty() {
            if rhs.is_zero() {
                return Ok(());
            }
            return Err(Error::Inconsistent("0 = nonzero after reduction".into()));
        }
        let lead = row[0].0;
        let f = row[0].1.clone();
        let scaled: Vec<(usize, Rat)> = row.iter().map(|(i, c)| (*i, c / &f)).collect();
        let scaled_rhs = rhs / &f;
        // Back-substitute the new pivot into rows that mention it.
        for c in 0..self.n {
            if let Some((r, rr)) = self.rows[c].clone() {
                if let Some(pos) = r.iter().position(|(i, _)| *i == lead) {
                    let f2 = r[pos].1.clone();
                    let nr = sub_scaled(&r, &scaled, &f2);
                    let nrr = rr - &f2 * &scaled_rhs;
                    self.rows[c] = Some((nr, nrr));
                }
            }
        }
        self.rows[lead] = Some((scaled, scaled_rhs));
        Ok(())
    }

    /// The value of unknown `i` if it is pinned: it must be a pivot and
    /// its row must not involve any free unknown.
    pub fn value(&self, i: usize) -> Option<Rat> {
        let (row, rhs) = self.rows[i].as_ref()?;
        if row.len() == 1 {
            Some(rhs.clone())
        } else {
            None
        }
    }

    pub fn is_pivot(&self, i: usize) -> bool {
        self.rows[i].is_some()
    }
}

fn normalize(mut row: Vec<(usize, Rat)>) -> Vec<(usize, Rat)> {
    row.sort_by_key(|(i, _)| *i);
    let mut out: Vec<(usize, Rat)> = Vec::with_capacity(row.len());
    for (i, c) in row {
        if let Some(last) = out.last_mut() {
            if last.0 == i {
                last.1 += c;
                continue;
            }
        }
        out.push((i, c));
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

/// row - f * base, both sorted by column.
fn sub_scaled(row: &[(usize, Rat)], base: &[(usize, Rat)], f: &Rat) -> Vec<(usize, Rat)> {
    let mut out = Vec::with_capacity(row.len() + base.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < base.len() {
        if j >= base.len() || (i < row.len() && row[i].0 < base[j].0) {
            out.push(row[i].clone());
            i += 1;
        } else if i >= row.len() || base[j].0 < row[i].0 {
            out.push((base[j].0, -(f * &base[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - f * &base[j].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}
