pub mod basis;
pub mod branches;
pub mod engineered;
pub mod error;
pub mod fock;
pub mod gross;
pub mod model;
pub mod oracle;
pub mod pekar;
pub mod quadratic;
pub mod series;
pub mod sparse;
pub mod validation;

pub use error::{Error, Result};
