// Ricci-flatness and the span of curvature endomorphisms for the
// linear-cycle metric.

use toric_spin7::diagonal::example_family;
use toric_spin7::riemann::{holonomy_report, MetricChart};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let f = example_family("linear-cycle")?;
    let chart = MetricChart::new(&f.to_matrix())?;
    let points = [[1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 1.5, 2.5], [1.5, 2.5, 1.2, 3.1]];
    let rep = holonomy_report("linear-cycle", &chart, &points, 0.02)?;
    println!("{}", serde_json::to_string_pretty(&rep)?);
    if rep.span_dim != 21 {
        return Err(format!("span dimension {}", rep.span_dim).into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
