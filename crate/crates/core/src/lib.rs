//! Neural-collapse analytics without the standard library.
//!
//! The crate measures within-class variability collapse on labeled feature
//! sets (CDNV, CCNV, class-mean geometry), runs few-shot episodes with
//! ridge-regression and nearest-class-mean heads, and evaluates the
//! closed-form transfer bounds together with Monte Carlo checks against them.
//!
//! Everything here is pure computation over `alloc` collections. File
//! formats, JSON reports, parallel drivers and the command line live in the
//! `ncollapse` companion crate.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod embeddings;
pub mod error;
pub mod fewshot;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use embeddings::{ClassGroup, ClassPartition, LabeledEmbeddings};
pub use error::{Error, Result};
pub use metrics::{ClassStats, CdnvReport, Cdnv, GeometryReport};
