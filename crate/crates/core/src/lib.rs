//! Reachability analysis for synchronized dynamic pushdown networks:
//! networks of pushdown processes with rendez-vous synchronization and
//! dynamic thread creation.
//!
//! Exact reachability for this model is undecidable, so the analyzer
//! over-approximates the language of execution paths between two
//! regular configuration sets in a finite Kleene domain (bounded word
//! prefixes or suffixes). If the abstraction contains no perfectly
//! synchronized word, the target set is unreachable under rendez-vous
//! semantics; otherwise an abstract counterexample is validated by a
//! bounded concrete search, and the abstraction order is refined.
//!
//! The pipeline: compile the target pattern to a configuration
//! automaton, saturate it backwards into the predecessor automaton,
//! derive label constraints from the saturation rules, solve them
//! demand-driven over the finite domain, intersect with the initial
//! pattern's automaton, and evaluate the abstract path language.

pub mod abstraction;
pub mod automata;
pub mod cegar;
pub mod ingest;
pub mod labelling;
pub mod model;
pub mod presat;
pub mod report;
pub mod testkit;
