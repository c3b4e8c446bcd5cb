pub mod error;
pub mod gen;
pub mod io;
pub mod lowband;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod parity;
pub mod reduction;
pub mod rules;
pub mod solver;
