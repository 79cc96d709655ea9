//! Generators and file formats behind the `d1lc` command-line tool.

pub mod gen;
pub mod io;
