pub mod error;
pub mod families;
pub mod fock;
pub mod gaussian;
pub mod grape;
pub mod geometry;
pub mod measurement;
pub mod numerics;
pub mod qfim;
pub mod random;
pub mod scenarios;
pub mod states;
pub mod thermo;
pub mod unitary;

pub use error::{Error, Result};
pub use numerics::{CMatrix, RMatrix, C64};
pub use qfim::{QfimMatrix, SldMethod, SldSet};
pub use states::{DensityMatrix, ParamFamily, PureFamily, SpectralData};
