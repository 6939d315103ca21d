pub mod evaluate;
pub mod index;
pub mod report;
pub mod translate;
