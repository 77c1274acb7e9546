// Closed-form curvature coefficients against a direct solve of dΦ = 0,
// and dω against the elliptic system, over random low-degree fields.

use toric_spin7::poly::Q;
use toric_spin7::torsion::is_divergence_free;
use toric_spin7::torsion::oracle::{
    correspondence_mismatches, formula_deviations, random_field, random_point, solve_z_at, z_formula_at, FieldKind,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let kinds = [FieldKind::Affine, FieldKind::UnitTriangular, FieldKind::Termwise, FieldKind::CurlCurl];
    for (k, kind) in kinds.into_iter().enumerate() {
        let v = random_field(kind, 11 + k as u64);
        let p: Vec<Q> = random_point(k as u64);
        let div_free = is_divergence_free(&v);
        match solve_z_at(&v, &p) {
            Ok(z) => {
                let agree = z == z_formula_at(&v, &p);
                println!("{kind:?}: divergence-free {div_free}, solvable at p, closed form agrees {agree}");
                let devs = formula_deviations(&v, &[p])?;
                println!("  deviations: {}", devs.len());
            }
            Err(e) => println!("{kind:?}: divergence-free {div_free}, {e}"),
        }
        println!("  d(omega) vs L+Q mismatches: {}", correspondence_mismatches(&v).len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
