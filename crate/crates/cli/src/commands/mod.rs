pub mod classify;
pub mod evaluate;
pub mod generate;
pub mod invariants;
pub mod report;
