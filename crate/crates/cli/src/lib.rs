//! Text formats, reports and the command-line front end for
//! `stripemat-core`.

pub mod acceptance;
pub mod commands;
pub mod report;
