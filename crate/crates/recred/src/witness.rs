//! Witness synthesis (placeholder).
