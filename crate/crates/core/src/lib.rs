pub mod blocks;
pub mod budgets;
pub mod composer;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod plot;
pub mod scenario;
pub mod spectral;
pub mod verify;
