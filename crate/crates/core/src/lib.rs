//! Multi-scale evolutionary search for spiking network architectures.
//!
//! A genome fixes, per layer, a motif and one kernel per motif edge, plus
//! two network-wide genes for skip connections. Genomes decode into
//! spiking networks of leaky integrate-and-fire neurons that are scored
//! without training: distinct inputs should produce distinct firing
//! patterns. A genetic algorithm searches the genome space.

pub mod data;
pub mod evolution;
pub mod fitness;
pub mod genome;
pub mod motif;
pub mod run;
pub mod sim;
