//! Metrics, the cell-growth probe and the synthetic corpus generator.

mod metrics;
mod probe;
mod synth;

pub use metrics::{evaluate, ConfusionMatrix, EvalReport, PerClassF1};
pub use probe::{growth_probe, probe_dag, GrowthProbeResult, ProbeNode, PROBE_BIAS};
pub use synth::{designed_class_prior, generate_synthetic, SyntheticSpec, CLEAR_CLASS_WEIGHTS};
