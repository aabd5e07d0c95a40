//! The guide in `book/src`, one module per chapter, so `cargo test` runs
//! every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/parameters.md")]
pub mod parameters {}
#[doc = include_str!("../../../book/src/hamiltonian.md")]
pub mod hamiltonian {}
#[doc = include_str!("../../../book/src/steady-state.md")]
pub mod steady_state {}
#[doc = include_str!("../../../book/src/spectroscopy.md")]
pub mod spectroscopy {}
#[doc = include_str!("../../../book/src/splitting.md")]
pub mod splitting {}
#[doc = include_str!("../../../book/src/sweeps.md")]
pub mod sweeps {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
