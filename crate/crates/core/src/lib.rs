//! Diagnostic Bayesian networks that treat volunteered symptom reports as
//! evidence in their own right.
//!
//! The [`bn`] module holds the network representation and exact inference.
//! [`report`] adds report nodes for open-ended questions, [`learning`] and
//! [`severity`] add shared parameter nodes over reporting style, and
//! [`engine`] drives an interview session on top of a [`kb::KnowledgeBase`].

// `!(x >= lo)` style checks are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bn;
pub mod engine;
pub mod experiments;
pub mod kb;
pub mod learning;
pub mod report;
pub mod severity;
