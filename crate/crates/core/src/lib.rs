pub mod certifier;
pub mod cli;
pub mod damped;
pub mod error;
pub mod field;
pub mod functionals;
pub mod ground_state;
pub mod initial_data;
pub mod nonlinearity;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Field, Grid, State};
pub use nonlinearity::NonlinearityModel;
