//! Discrete puzzle-room state machine, a PCP-to-level compiler, and a
//! witness synthesizer/executor that certifies compiled levels solvable.
//!
//! The pipeline: model a Post Correspondence Problem instance ([`pcp`]),
//! compile it into a complete multi-room level ([`compiler`]) built from
//! checked gadget templates ([`gadgets`]), then certify solvability by
//! synthesizing and executing a witness script ([`witness`]) against the
//! game semantics ([`sim`]).

pub mod compiler;
pub mod gadgets;
pub mod grid;
pub mod level;
pub mod pcp;
pub mod sim;
pub mod witness;

pub use grid::{Cell, Dir, Grid, Tile};
pub use pcp::Parallelism;

/// Accumulated validation findings. Errors make the subject invalid;
/// warnings do not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    errors: Vec<String>,
    warnings: Vec<String>,
}

impl ValidationReport {
    pub fn new() -> ValidationReport {
        ValidationReport::default()
    }

    pub fn push(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn push_warning(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// True when there are no errors (warnings are allowed).
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn errors(&self) -> &[String] {
        &self.errors
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
