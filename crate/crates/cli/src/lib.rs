//! The `popgen` command line and the HTTP service behind the lab pages.

pub mod api;
pub mod commands;
