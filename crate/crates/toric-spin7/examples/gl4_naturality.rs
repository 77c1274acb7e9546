// Change of basis of the torus: solutions stay solutions, and scalars
// rescale the residual of a non-solution by a fixed power.

use toric_spin7::diagonal::example_family;
use toric_spin7::poly::{nu, q, Poly};
use toric_spin7::spin7::SymMatrixField;
use toric_spin7::torsion::gl4::{random_invertible, residual_field, scaling_weight};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let v = example_family("triple-product")?.to_matrix();
    for seed in 0..3 {
        let a = random_invertible(seed);
        let w = a.transform(&v);
        let zero = residual_field(&w).upper().iter().all(Poly::is_zero);
        println!("seed {seed}: det {}, transformed field is a solution: {zero}", a.det());
    }
    let bad = SymMatrixField::diag([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()]);
    println!("residual weight under t·Id: {:?}", scaling_weight(&bad, &q(2)));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
