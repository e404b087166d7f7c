pub mod error;
pub mod measures;
pub mod rates;
pub mod solve;
pub mod limits;
pub mod detect;
pub mod attack;
pub mod sim;
pub mod reproduce;
