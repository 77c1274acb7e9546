macro_rules! example {
    ($m:ident, $file:literal) => {
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(verify_families, "verify_families.rs");
example!(curvature_oracle, "curvature_oracle.rs");
example!(holonomy_certificate, "holonomy_certificate.rs");
example!(flat_model_graph, "flat_model_graph.rs");
example!(solve_r31, "solve_r31.rs");
example!(solve_r22, "solve_r22.rs");
example!(potential_roundtrip, "potential_roundtrip.rs");
example!(gl4_naturality, "gl4_naturality.rs");
example!(classify_patterns, "classify_patterns.rs");
example!(parse_fields, "parse_fields.rs");

#[test]
fn examples_run() {
    verify_families::run_example().expect("verify_families");
    curvature_oracle::run_example().expect("curvature_oracle");
    holonomy_certificate::run_example().expect("holonomy_certificate");
    flat_model_graph::run_example().expect("flat_model_graph");
    solve_r31::run_example().expect("solve_r31");
    solve_r22::run_example().expect("solve_r22");
    potential_roundtrip::run_example().expect("potential_roundtrip");
    gl4_naturality::run_example().expect("gl4_naturality");
    classify_patterns::run_example().expect("classify_patterns");
    parse_fields::run_example().expect("parse_fields");
}
