//! Acceptance checks for `hjs` live in `tests/acceptance.rs`; run them with
//! `cargo test -p hjs-validation --test acceptance`.
