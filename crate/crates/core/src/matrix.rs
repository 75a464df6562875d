//! Small fixed-size matrices: integer `3×3` for symbols and lifts, rational
//! `3×3` for Hecke elements and coset representatives.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclolinalg::Rat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IMat3(pub [[i64; 3]; 3]);

impl IMat3 {
    pub fn from_rows(rows: [[i64; 3]; 3]) -> Self {
        IMat3(rows)
    }

    pub fn from_cols(cols: [[i64; 3]; 3]) -> Self {
        let mut m = [[0; 3]; 3];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..3 {
                m[i][j] = c[i];
            }
        }
        IMat3(m)
    }

    pub fn identity() -> Self {
        IMat3([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    pub fn col(&self, j: usize) -> [i64; 3] {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn mul(&self, o: &IMat3) -> IMat3 {
        let mut m = [[0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        IMat3(m)
    }

    pub fn det(&self) -> i64 {
        let m = &self.0;
        let d = m[0][0] as i128 * (m[1][1] as i128 * m[2][2] as i128 - m[1][2] as i128 * m[2][1] as i128)
            - m[0][1] as i128 * (m[1][0] as i128 * m[2][2] as i128 - m[1][2] as i128 * m[2][0] as i128)
            + m[0][2] as i128 * (m[1][0] as i128 * m[2][1] as i128 - m[1][1] as i128 * m[2][0] as i128);
        d as i64
    }

    /// Classical adjugate, so that `m · adj(m) = det(m) · 1`.
    pub fn adjugate(&self) -> IMat3 {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        IMat3([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    pub fn to_rat(&self) -> RMat3 {
        RMat3::from_fn(|i, j| Rat::from_integer(BigInt::from(self.0[i][j])))
    }
}

impl fmt::Display for IMat3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .0
            .iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

/// Rational `3×3` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RMat3(pub [[Rat; 3]; 3]);

impl RMat3 {
    pub fn from_fn(f: impl Fn(usize, usize) -> Rat) -> Self {
        RMat3(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn from_ints(rows: [[i64; 3]; 3]) -> Self {
        RMat3::from_fn(|i, j| Rat::from_integer(BigInt::from(rows[i][j])))
    }

    pub fn identity() -> Self {
        RMat3::from_fn(|i, j| if i == j { Rat::one() } else { Rat::zero() })
    }

    pub fn scalar(a: Rat) -> Self {
        RMat3::from_fn(|i, j| if i == j { a.clone() } else { Rat::zero() })
    }

    pub fn diag(a: i64, b: i64, c: i64) -> Self {
        RMat3::from_ints([[a, 0, 0], [0, b, 0], [0, 0, c]])
    }

    /// Elementary matrix `1 + x·E_{ij}` (zero-based indices).
    pub fn elementary(i: usize, j: usize, x: i64) -> Self {
        let mut m = RMat3::identity();
        m.0[i][j] = Rat::from_integer(BigInt::from(x));
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.0[i][j]
    }

    pub fn mul(&self, o: &RMat3) -> RMat3 {
        RMat3::from_fn(|i, j| {
            let mut s = Rat::zero();
            for k in 0..3 {
                if !self.0[i][k].is_zero() && !o.0[k][j].is_zero() {
                    s += &self.0[i][k] * &o.0[k][j];
                }
            }
            s
        })
    }

    pub fn det(&self) -> Rat {
        let m = &self.0;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    pub fn inverse(&self) -> Result<RMat3> {
        let d = self.det();
        if d.is_zero() {
            return Err(Error::Singular);
        }
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| &m[r0][c0] * &m[r1][c1] - &m[r0][c1] * &m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        Ok(RMat3::from_fn(|i, j| &adj[i][j] / &d))
    }

    pub fn transpose(&self) -> RMat3 {
        RMat3::from_fn(|i, j| self.0[j][i].clone())
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().flatten().all(|e| e.is_integer())
    }

    /// Integer matrix, if every entry is an integer fitting in `i64`.
    pub fn to_int(&self) -> Option<IMat3> {
        let mut m = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if !self.0[i][j].is_integer() {
                    return None;
                }
                m[i][j] = self.0[i][j].to_integer().to_i64()?;
            }
        }
        Some(IMat3(m))
    }

    /// Columns scaled to primitive integer vectors (zero columns stay zero).
    pub fn primitive_columns(&self) -> Option<IMat3> {
        let mut cols = [[0i64; 3]; 3];
        for (j, col) in cols.iter_mut().enumerate() {
            let den = (0..3).fold(BigInt::one(), |acc, i| acc.lcm(self.0[i][j].denom()));
            let ints: Vec<BigInt> = (0..3).map(|i| (&self.0[i][j] * Rat::from_integer(den.clone())).to_integer()).collect();
            let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
            for i in 0..3 {
                col[i] = if g.is_zero() { 0 } else { (&ints[i] / &g).to_i64()? };
            }
        }
        Some(IMat3::from_cols(cols))
    }

    /// Parses `"r11,r12,r13;r21,r22,r23;r31,r32,r33"`; entries may be
    /// fractions `a/b`, whitespace is ignored.
    pub fn parse(s: &str) -> Result<RMat3> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let rows: Vec<&str> = cleaned.split(';').collect();
        if rows.len() != 3 {
            return Err(Error::Parse(format!("expected 3 rows in {s:?}")));
        }
        let mut m = RMat3::identity();
        for (i, row) in rows.iter().enumerate() {
            let entries: Vec<&str> = row.split(',').collect();
            if entries.len() != 3 {
                return Err(Error::Parse(format!("expected 3 entries in row {row:?}")));
            }
            for (j, e) in entries.iter().enumerate() {
                m.0[i][j] = parse_rat(e)?;
            }
        }
        Ok(m)
    }

    /// Canonical string form accepted by [`RMat3::parse`].
    pub fn canonical_string(&self) -> String {
        self.0
            .iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn max_abs_entry(&self) -> Rat {
        self.0.iter().flatten().map(|e| e.abs()).max().unwrap_or_else(Rat::zero)
    }
}

impl fmt::Display for RMat3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_string())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_inverts() {
        let m = IMat3::from_rows([[2, 1, 0], [3, 5, 7], [1, -1, 4]]);
        let a = m.adjugate();
        let d = m.det();
        let p = m.mul(&a);
        assert_eq!(p, IMat3::from_rows([[d, 0, 0], [0, d, 0], [0, 0, d]]));
    }

    #[test]
    fn parse_round_trip() {
        let m = RMat3::parse(" 1/3, 0 ,2; 0,1,0 ; -4,0,3/6").unwrap();
        assert_eq!(m.get(2, 2), &Rat::new(1.into(), 2.into()));
        assert_eq!(RMat3::parse(&m.canonical_string()).unwrap(), m);
        assert!(RMat3::parse("1,2;3").is_err());
        assert!(RMat3::parse("1,2,3;4,5,6;7,8,1/0").is_err());
    }

    #[test]
    fn rational_inverse() {
        let m = RMat3::parse("36,1,0;128,4,0;0,0,4").unwrap();
        assert_eq!(m.mul(&m.inverse().unwrap()), RMat3::identity());
        assert_eq!(m.det(), Rat::from_integer(64.into()));
    }

    #[test]
    fn primitive_columns_scale() {
        let m = RMat3::parse("1/2,0,5;1/3,1,10;0,0,15").unwrap();
        let p = m.primitive_columns().unwrap();
        assert_eq!(p.col(0), [3, 2, 0]);
        assert_eq!(p.col(2), [1, 2, 3]);
    }
}
