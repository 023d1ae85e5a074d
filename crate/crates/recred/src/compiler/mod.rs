//! Level compiler (placeholder).
