pub mod bench;
pub mod derive;
pub mod fit;
pub mod report;
pub mod simulate;
