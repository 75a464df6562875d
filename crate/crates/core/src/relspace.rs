//! The relation model `W(N)`: functions on `P²(Z/N)` satisfying the three
//! Steinberg-type relations at every point. `W(N) ≅ H₃(Γ₀(N), C)`.

use std::io::{BufRead, Write};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cyclolinalg::{kernel_rational_with_stats, ModularKernelStats, Rat, SparseMat};
use crate::error::{Error, Result};
use crate::matrix::parse_rat;
use crate::projspace::{enumerate, Level, PointTable};

/// Which third argument the three-term relation uses.
///
/// The printed form `f(y−x:−x:y)` is not invariant under the unit scaling
/// that defines `P²(Z/N)` and is kept only so the discrepancy can be shown;
/// `Standard` ends in `z`, matching the other two arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ThreeTermVariant {
    #[default]
    Standard,
    Printed,
}

#[derive(Debug, Clone)]
pub struct RelationSystem {
    pub level: Level,
    pub table: PointTable,
    /// Rows ordered by (point index, family); one column per point.
    pub matrix: SparseMat<Rat>,
    pub variant: ThreeTermVariant,
}

/// Arguments of the three relation families at `(x:y:z)`.
pub fn relation_terms(t: [i64; 3], variant: ThreeTermVariant) -> [Vec<(i64, [i64; 3])>; 3] {
    let [x, y, z] = t;
    let last = match variant {
        ThreeTermVariant::Standard => z,
        ThreeTermVariant::Printed => y,
    };
    [
        vec![(1, [x, y, z]), (1, [-y, x, z])],
        vec![(1, [x, y, z]), (-1, [z, x, y])],
        vec![(1, [x, y, z]), (1, [-y, x - y, z]), (1, [y - x, -x, last])],
    ]
}

pub fn build_relations(table: &PointTable) -> Result<RelationSystem> {
    build_relations_with(table, ThreeTermVariant::Standard)
}

pub fn build_relations_with(table: &PointTable, variant: ThreeTermVariant) -> Result<RelationSystem> {
    let level = table.level();
    let mut matrix = SparseMat::new(table.len());
    for p in table.points() {
        let t = p.triple().map(|c| c as i64);
        for family in relation_terms(t, variant) {
            let mut row = Vec::with_capacity(3);
            for (sign, [a, b, c]) in family {
                let idx = table
                    .index_of(a, b, c)
                    .ok_or(Error::NonUnimodular(a, b, c, level.modulus()))?;
                row.push((idx, Rat::from_integer(sign.into())));
            }
            matrix.push_row(row);
        }
    }
    Ok(RelationSystem {
        level,
        table: table.clone(),
        matrix,
        variant,
    })
}

/// Basis of `W(N)` in reduced echelon form (ascending pivots).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBasis {
    pub level: Level,
    pub vectors: Vec<Vec<Rat>>,
    pub dim: usize,
    /// Pivot column of each vector; `vectors[i][pivots[j]] = δ_ij`.
    pub pivots: Vec<usize>,
}

pub fn solve_model(system: &RelationSystem) -> ModelBasis {
    solve_model_with_stats(system).0
}

pub fn solve_model_with_stats(system: &RelationSystem) -> (ModelBasis, ModularKernelStats) {
    let (vectors, stats) = kernel_rational_with_stats(&system.matrix, 0x5eed);
    (ModelBasis::from_echelon(system.level, vectors), stats)
}

pub fn check_membership(v: &[Rat], system: &RelationSystem) -> bool {
    v.len() == system.matrix.cols() && system.matrix.annihilates(v)
}

/// Convenience: enumerate, build and solve.
pub fn model_for_level(n: u64) -> Result<(PointTable, ModelBasis)> {
    let table = enumerate(Level::new(n)?);
    let system = build_relations(&table)?;
    let basis = solve_model(&system);
    Ok((table, basis))
}

const BASIS_FORMAT: &str = "hecke3-basis";

#[derive(Debug, Serialize, Deserialize)]
struct BasisHeader {
    format: String,
    version: u32,
    level: u64,
    dim: usize,
    points: usize,
    sha256: String,
}

impl ModelBasis {
    pub fn from_echelon(level: Level, vectors: Vec<Vec<Rat>>) -> Self {
        let pivots = vectors
            .iter()
            .map(|v| v.iter().position(|x| !x.is_zero()).expect("nonzero basis vector"))
            .collect();
        ModelBasis {
            level,
            dim: vectors.len(),
            vectors,
            pivots,
        }
    }

    pub fn points(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    fn body(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.vectors.iter().enumerate() {
            for (j, x) in v.iter().enumerate() {
                if !x.is_zero() {
                    s.push_str(&format!("{i},{j},{x}\n"));
                }
            }
        }
        s
    }

    /// SHA-256 of the CSV body, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.body().as_bytes()))
    }

    /// JSON header line, then one `vector,point,value` row per nonzero entry.
    pub fn write_artifact<W: Write>(&self, mut w: W, points: usize) -> Result<()> {
        let body = self.body();
        let header = BasisHeader {
            format: BASIS_FORMAT.into(),
            version: crate::FORMAT_VERSION,
            level: self.level.modulus(),
            dim: self.dim,
            points,
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        w.write_all(body.as_bytes())?;
        Ok(())
    }

    /// Reads an artifact, rejecting version or hash mismatches.
    pub fn read_artifact<R: BufRead>(mut r: R) -> Result<ModelBasis> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let header: BasisHeader =
            serde_json::from_str(first.trim()).map_err(|e| Error::Artifact(format!("bad basis header: {e}")))?;
        if header.format != BASIS_FORMAT || header.version != crate::FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported basis artifact {} v{}",
                header.format, header.version
            )));
        }
        let mut body = String::new();
        r.read_to_string(&mut body)?;
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        if digest != header.sha256 {
            return Err(Error::Artifact("basis content hash mismatch".into()));
        }
        let mut vectors = vec![vec![Rat::zero(); header.points]; header.dim];
        for (ln, line) in body.lines().enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Artifact(format!("malformed basis row {ln}")));
            }
            let i: usize = parts[0].parse().map_err(|_| Error::Parse(parts[0].into()))?;
            let j: usize = parts[1].parse().map_err(|_| Error::Parse(parts[1].into()))?;
            if i >= header.dim || j >= header.points {
                return Err(Error::Artifact(format!("basis row {ln} out of range")));
            }
            vectors[i][j] = parse_rat(parts[2])?;
        }
        let level = Level::new(header.level)?;
        Ok(ModelBasis::from_echelon(level, vectors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclolinalg::DenseMat;

    #[test]
    fn row_counts() {
        for (n, rows) in [(1u64, 3usize), (2, 21)] {
            let table = enumerate(Level::new(n).unwrap());
            let sys = build_relations(&table).unwrap();
            assert_eq!(sys.matrix.rows(), rows);
        }
    }

    #[test]
    fn level_one_is_zero() {
        let (_, basis) = model_for_level(1).unwrap();
        assert_eq!(basis.dim, 0);
    }

    #[test]
    fn small_levels_match_dense_oracle() {
        for n in [2u64, 3, 4, 5, 6, 8, 9] {
            let table = enumerate(Level::new(n).unwrap());
            let sys = build_relations(&table).unwrap();
            let basis = solve_model(&sys);
            let dense: DenseMat<Rat> = sys.matrix.to_dense();
            assert_eq!(basis.vectors, dense.kernel(), "level {n}");
            for v in &basis.vectors {
                assert!(check_membership(v, &sys));
            }
        }
    }

    #[test]
    fn perturbation_breaks_membership() {
        let table = enumerate(Level::new(8).unwrap());
        let sys = build_relations(&table).unwrap();
        let basis = solve_model(&sys);
        assert!(check_membership(&vec![Rat::zero(); table.len()], &sys));
        for v in &basis.vectors {
            let mut w = v.clone();
            w[basis.pivots[0]] += Rat::from_integer(1.into());
            assert!(!check_membership(&w, &sys));
        }
    }

    #[test]
    fn artifact_round_trip_and_corruption() {
        let (table, basis) = model_for_level(8).unwrap();
        let mut buf = Vec::new();
        basis.write_artifact(&mut buf, table.len()).unwrap();
        let back = ModelBasis::read_artifact(&buf[..]).unwrap();
        assert_eq!(back, basis);
        let mut text = String::from_utf8(buf).unwrap();
        let pos = text.rfind(",1\n").or_else(|| text.rfind(",-1\n")).unwrap();
        text.insert(pos + 1, '2');
        assert!(ModelBasis::read_artifact(text.as_bytes()).is_err());
    }
}
