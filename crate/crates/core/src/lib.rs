pub mod cli;
pub mod dual;
pub mod error;
pub mod lp;
pub mod maxplus;
pub mod plan;
pub mod problem;
pub mod report;
pub mod symbolic;
pub mod transfer;
pub mod zero_temp;
