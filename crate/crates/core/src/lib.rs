//! Finite-dimensional modular theory: Tomita operators, modular data,
//! modular flow, tidy operators and contour functional calculus for a
//! matrix algebra `A ⊆ M_d(ℂ)` with a cyclic and separating vector `Ω`.

pub mod algebra;
pub mod contour;
pub mod error;
pub mod fixture;
pub mod flow;
pub mod linalg;
pub mod tidy;
pub mod tomita;

pub use algebra::{commutant, AlgebraModel, AlgebraSpec, OperatorSubspace};
pub use error::{Error, RankReport, Result};
pub use fixture::{generate_fixture, Fixture};
pub use linalg::{ComplexMatrix, ComplexVector, Complex64, SpectralDecomposition};
pub use tidy::{TidyEngine, Window};
pub use tomita::{modular_data, ModularTriple};
