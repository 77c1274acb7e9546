// The inline field syntax used by the command line.

use toric_spin7::parse::parse_field;
use toric_spin7::torsion::{divergence_residual, is_divergence_free};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for text in ["V=Id", "V=diag(nu1*nu2*nu3, nu2, nu3, nu1)", "V=diag(nu0,1,1,1)", "V=[1, nu2/2, 0, 0, 1, 0, 0, 1, 0, 1]"] {
        let v = parse_field(text)?;
        let div: Vec<String> = divergence_residual(&v).iter().map(|p| p.to_string()).collect();
        println!("{text:40} divergence-free {:5} residual ({})", is_divergence_free(&v), div.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
