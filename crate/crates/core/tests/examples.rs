mod parse_and_validate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parse_and_validate.rs"));
}

#[test]
fn parse_and_validate_runs() {
    parse_and_validate::run_example().expect("parse_and_validate example should run");
}

mod object_lifetimes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/object_lifetimes.rs"));
}

#[test]
fn object_lifetimes_runs() {
    object_lifetimes::run_example().expect("object_lifetimes example should run");
}

mod fold_region {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fold_region.rs"));
}

#[test]
fn fold_region_runs() {
    fold_region::run_example().expect("fold_region example should run");
}

mod access_table {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/access_table.rs"));
}

#[test]
fn access_table_runs() {
    access_table::run_example().expect("access_table example should run");
}

mod patterns_bandwidth {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/patterns_bandwidth.rs"));
}

#[test]
fn patterns_bandwidth_runs() {
    patterns_bandwidth::run_example().expect("patterns_bandwidth example should run");
}

mod multiplex_counts {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/multiplex_counts.rs"));
}

#[test]
fn multiplex_counts_runs() {
    multiplex_counts::run_example().expect("multiplex_counts example should run");
}

mod folded_report {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/folded_report.rs"));
}

#[test]
fn folded_report_runs() {
    folded_report::run_example().expect("folded_report example should run");
}

mod custom_workload {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/custom_workload.rs"));
}

#[test]
fn custom_workload_runs() {
    custom_workload::run_example().expect("custom_workload example should run");
}
