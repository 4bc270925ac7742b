//! Seeded fixture generation and the fixture JSON schema.
//!
//! Matrices are stored row-major as nested arrays of `[re, im]` pairs and
//! vectors as flat arrays of pairs. Documents carry `schema_version`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{commutant, is_cyclic, is_separating, AlgebraModel, AlgebraSpec, OperatorSubspace};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, ComplexVector, Complex64};
use crate::tomita::{modular_data, ModularTriple};

pub const FIXTURE_SCHEMA_VERSION: &str = "1";
const MAX_ATTEMPTS: usize = 16;

/// A certified algebra/vector pair together with its modular data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub schema_version: String,
    pub spec: AlgebraSpec,
    pub p_min: f64,
    /// Seed actually used after certification retries.
    pub effective_seed: u64,
    pub algebra: OperatorSubspace,
    pub commutant: OperatorSubspace,
    pub modular: ModularTriple,
}

impl Fixture {
    pub fn dim(&self) -> usize {
        self.algebra.dim_space
    }

    pub fn omega(&self) -> &ComplexVector {
        &self.modular.omega
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Fixture = serde_json::from_str(s)?;
        if f.schema_version != FIXTURE_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema_version {}", f.schema_version)));
        }
        Ok(f)
    }
}

/// Builds a fixture for `spec`. Deterministic in `(spec, p_min)`. If the
/// drawn vector fails cyclic/separating certification the seed is perturbed,
/// up to 16 attempts.
pub fn generate_fixture(spec: &AlgebraSpec, p_min: f64) -> Result<Fixture> {
    spec.model.validate()?;
    let algebra = spec.model.algebra();
    let comm = commutant(&algebra);
    for attempt in 0..MAX_ATTEMPTS {
        let seed = spec.seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = random_vector_for(&spec.model, p_min, &mut rng)?;
        if !(is_cyclic(&algebra, &omega).0 && is_separating(&algebra, &omega).0) {
            continue;
        }
        let modular = match modular_data(&algebra, &omega) {
            Ok(m) => m,
            Err(Error::IllConditioned { .. }) | Err(Error::NotCyclic(_)) | Err(Error::NotSeparating(_)) => continue,
            Err(e) => return Err(e),
        };
        return Ok(Fixture {
            schema_version: FIXTURE_SCHEMA_VERSION.into(),
            spec: spec.clone(),
            p_min,
            effective_seed: seed,
            algebra,
            commutant: comm,
            modular,
        });
    }
    Err(Error::Certification { attempts: MAX_ATTEMPTS })
}

/// Random unit vector whose reduced-density eigenvalues in each block are at
/// least `p_min` (relative to the block weight).
///
/// Block `(n, m)` gets `Σₖ √pₖ (U eₖ) ⊗ (V eₖ)` with Haar-random `U`, `V`;
/// blocks are weighted by a floored Dirichlet draw and a random phase.
pub fn random_vector_for(model: &AlgebraModel, p_min: f64, rng: &mut impl Rng) -> Result<ComplexVector> {
    let blocks = model.blocks();
    let weights = floored_simplex(blocks.len(), p_min, rng)?;
    let mut omega = ComplexVector::zeros(model.dim());
    let mut offset = 0;
    for (&(n, m), &w) in blocks.iter().zip(&weights) {
        let r = n.min(m);
        let schmidt = floored_simplex(r, p_min, rng)?;
        let u = haar_unitary(n, rng);
        let v = haar_unitary(m, rng);
        let phase = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        for (k, &p) in schmidt.iter().enumerate() {
            let amp = phase * (w * p).sqrt();
            for i in 0..n {
                for j in 0..m {
                    omega[offset + i * m + j] += amp * u[(i, k)] * v[(j, k)];
                }
            }
        }
        offset += n * m;
    }
    let norm = omega.norm();
    Ok(omega.unscale(norm))
}

/// Probability vector of length `r` with every entry at least `p_min`.
pub fn floored_simplex(r: usize, p_min: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if r == 0 {
        return Ok(Vec::new());
    }
    if !(p_min > 0.0 && p_min * r as f64 <= 1.0 + 1e-12) {
        return Err(Error::InvalidModel(format!("p_min {p_min} incompatible with {r} coefficients")));
    }
    let draws: Vec<f64> = (0..r).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let free = (1.0 - p_min * r as f64).max(0.0);
    Ok(draws.iter().map(|x| p_min + free * x / total).collect())
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub mod matrix_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{c, ComplexMatrix};

    pub fn to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    }

    pub fn from_rows(rows: Vec<Vec<[f64; 2]>>) -> Result<ComplexMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        from_rows(Vec::deserialize(d)?).map_err(D::Error::custom)
    }
}

pub mod matrix_list_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::matrix_serde::{from_rows, to_rows};
    use crate::linalg::ComplexMatrix;

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ComplexMatrix>, D::Error> {
        let raw: Vec<Vec<Vec<[f64; 2]>>> = Vec::deserialize(d)?;
        raw.into_iter().map(|m| from_rows(m).map_err(D::Error::custom)).collect()
    }
}

pub mod vector_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{c, ComplexVector};

    pub fn serialize<S: Serializer>(v: &ComplexVector, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexVector, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(ComplexVector::from_iterator(raw.len(), raw.iter().map(|p| c(p[0], p[1]))))
    }
}
