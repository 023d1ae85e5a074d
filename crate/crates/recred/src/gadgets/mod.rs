//! Gadget templates (placeholder).
