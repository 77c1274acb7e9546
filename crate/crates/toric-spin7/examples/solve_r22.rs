// (C + Dν₂)∂²V₀/∂ν₁² + ∂²V₀/∂ν₂² = 0 against a polynomial solution.

use toric_spin7::cli::r22_manufactured;
use toric_spin7::pde_grid::{solve_r22, GridSpec, SorOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let exact = r22_manufactured();
    println!("V0 = {exact}");
    let mut prev: Option<f64> = None;
    for n in [9, 17, 33, 65] {
        let spec = GridSpec::cube(&[1, 2], 1.0, 2.0, n)?;
        let (u, rep) = solve_r22(&spec, 1.0, 1.0, |p| exact.eval_f64(p), &SorOptions::default())?;
        let e = u.interior_max_error(|p| exact.eval_f64(p));
        let ratio = prev.map_or(String::from("-"), |p| format!("{:.3}", p / e));
        println!("n={n:3} sweeps={:4} error={e:.3e} ratio={ratio}", rep.iterations);
        prev = Some(e);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
