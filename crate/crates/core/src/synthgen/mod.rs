//! Synthetic traces with exact ground truth.
//!
//! A [`WorkloadSpec`] describes kernels, the objects they touch and how the
//! sampling hardware is configured; [`generate`] emulates the sampled run
//! and returns the trace alongside a [`GroundTruth`] the analysis can be
//! checked against.

mod generate;
mod rng;
mod spec;
mod truth;

pub use self::generate::{generate, HEAP_BASE, HEAP_GAP, LOOP_START, STACK_OFFSET, STACK_SPAN, STATIC_BASE};
pub use self::rng::{is_prime, nearest_prime, SplitMix64};
pub use self::spec::{
    KernelSpec, LatencyPoint, ObjectSpec, ObjectSpecKind, Pattern, SpecError, TargetSpec, WorkloadSpec,
    STACK_TARGET,
};
pub use self::truth::{
    emit_ground_truth, GroundTruth, KernelMetrics, ObjectShare, Totals, TruthAccessRow, TruthPattern, TruthPhase,
    TRUTH_MODE_WEIGHT,
};

/// Bundled workload descriptions.
pub const PRESETS: [(&str, &str); 3] = [
    ("stream", include_str!("../../workloads/stream.wl")),
    ("hpcg", include_str!("../../workloads/hpcg.wl")),
    ("lulesh", include_str!("../../workloads/lulesh.wl")),
];

/// Parses a bundled workload by name.
pub fn preset(name: &str) -> Option<WorkloadSpec> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| WorkloadSpec::parse(text).expect("bundled workloads are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let s = preset(name).unwrap();
            assert!(!s.kernels.is_empty(), "{name}");
        }
        assert!(preset("nope").is_none());
    }
}
