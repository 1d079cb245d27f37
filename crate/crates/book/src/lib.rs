// mdbook cannot run listings that depend on a local crate, so every chapter
// is pulled in here as a module doc and `cargo test` runs its code blocks as
// doc-tests. One module per chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/lattice.md")]
pub mod lattice {}
#[doc = include_str!("../../../book/src/srw.md")]
pub mod srw {}
#[doc = include_str!("../../../book/src/torus.md")]
pub mod torus {}
#[doc = include_str!("../../../book/src/wsaw.md")]
pub mod wsaw {}
#[doc = include_str!("../../../book/src/monte-carlo.md")]
pub mod monte_carlo {}
#[doc = include_str!("../../../book/src/lace.md")]
pub mod lace {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
