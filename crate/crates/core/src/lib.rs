pub mod numeric;
pub mod special;
pub mod dsl;
pub mod series;
pub mod corpus;
pub mod cli;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/numbers.md")]
    mod numbers {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/corpus-format.md")]
    mod corpus_format {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
