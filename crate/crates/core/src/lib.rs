//! Text-classification and message-analysis toolkit for Telegram threat triage.
//!
//! The library covers the full offline pipeline: parse exported message
//! archives ([`corpus`]), vectorize text with TF-IDF ([`textvec`]), train and
//! compare three classifiers — a feedforward network, a single-timestep LSTM,
//! and a linear SVM ([`models`]) — evaluate them ([`metrics`]), and run
//! lexicon-based sentiment scoring ([`sentiment`]) plus gazetteer entity
//! recognition ([`entities`]) over raw messages. [`pipeline`] ties everything
//! into reproducible experiments behind the `tgtriage` CLI.
//!
//! All training math is 64-bit, hand-rolled, and driven by a seeded SplitMix64
//! generator ([`numerics`]), so identical inputs and seeds give byte-identical
//! results on any platform.

pub mod corpus;
pub mod entities;
pub mod error;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod pipeline;
pub mod sentiment;
pub mod textvec;

pub use error::{Error, Result};
