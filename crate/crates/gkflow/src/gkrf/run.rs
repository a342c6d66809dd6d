//! Flow driver (placeholder).
