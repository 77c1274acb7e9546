// Exact torsion-free checks for the three diagonal families.

use toric_spin7::diagonal::{diag_curvature_forms, example_family, reduced_residuals, FAMILY_NAMES};
use toric_spin7::torsion::{curvature_matrices, divergence_residual, oracle_domega, oracle_dphi};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for name in FAMILY_NAMES {
        let f = example_family(name)?;
        let v = f.to_matrix();
        let div_free = divergence_residual(&v).iter().all(|p| p.is_zero());
        let reduced = reduced_residuals(&f).is_zero();
        let dphi = oracle_dphi(&v, &curvature_matrices(&v))?.is_zero();
        let domega = oracle_domega(&v).iter().all(|w| w.is_zero());
        println!("{name}: V = diag({}, {}, {}, {})", f.v[0], f.v[1], f.v[2], f.v[3]);
        println!("  divergence-free {div_free}, reduced system {reduced}, dPhi = 0 {dphi}, d(omega) = 0 {domega}");
        for (l, w) in diag_curvature_forms(&f).iter().enumerate() {
            println!("  d(theta_{l}) = {w}");
        }
        if !(div_free && reduced && dphi && domega) {
            return Err(format!("{name} failed verification").into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
