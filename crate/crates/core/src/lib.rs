pub mod error;
pub mod exactq;
pub mod extalg;
pub mod fan;
pub mod gem;
pub mod cohom;
pub mod gmcx;
pub mod ic;
pub mod random;
pub mod selfcheck;

pub use error::{Error, Result};
pub use exactq::{QMatrix, Q};
pub use extalg::{ConeAlgebra, ExtModule, ModHom};
pub use fan::{Cone, Fan, FanSpec};
pub use gem::{GemComplex, GemHom, Sites};
pub use gmcx::{ChainMap, DimTable, GmComplex};
pub use ic::{build_ic, Perversity};
