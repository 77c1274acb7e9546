// A potential on Λ²ℝ⁴ for the linear-cycle field and its second
// differences.

use toric_spin7::diagonal::example_family;
use toric_spin7::torsion::potential::{potential_construct, Grid4, PotentialOptions, SampledV};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let f = example_family("linear-cycle")?;
    let grid = Grid4::cube(1.0, 2.0, 9)?;
    let sampled = SampledV::from_field(&f.to_matrix(), grid);
    let pf = potential_construct(&sampled, PotentialOptions::default())?;
    println!("round-trip error {:.2e}", pf.roundtrip_error(&sampled));
    println!("symmetry defect  {:.2e}", pf.symmetry_defect());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
