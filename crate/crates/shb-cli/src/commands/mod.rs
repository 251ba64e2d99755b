pub mod avoidance;
pub mod check;
pub mod di;
pub mod run;
pub mod sweep;
