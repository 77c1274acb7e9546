// Red-black SOR for ν₂∂²V₀/∂ν₁² + ν₃∂²V₀/∂ν₂² + ν₁∂²V₀/∂ν₃² = 0.

use toric_spin7::diagonal::cubic_v0;
use toric_spin7::pde_grid::{grid_residual_diagonal, solve_r31, GridSpec, SampledDiagonal, SorOptions};
use toric_spin7::poly::{nu, Poly};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = SorOptions::default();
    let triple = &(&nu(1) * &nu(2)) * &nu(3);
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 33)?;
    let (u, rep) = solve_r31(&spec, |p| triple.eval_f64(p), &opts)?;
    println!("triple product, n=33: {} sweeps, max error {:.2e}", rep.iterations, u.interior_max_error(|p| triple.eval_f64(p)));

    let resid = grid_residual_diagonal(&SampledDiagonal::with_v0(u, [&nu(2), &nu(3), &nu(1)]));
    println!("  reduced residual of the solved field {:.2e}", resid.get("l_red_0").map_or(f64::NAN, |r| r.max));

    // ν₁⁴ − 6ν₁ν₂ν₃² is not reproduced by the stencil, so the error shows the order
    let quartic = &nu(1).pow(4) - &(&(&nu(1) * &nu(2)) * &nu(3).pow(2)).scale(&toric_spin7::poly::q(6));
    let cubic = cubic_v0();
    for (name, exact) in [("cubic", &cubic), ("quartic", &quartic)] {
        let errs = [9usize, 17, 33].map(|n| error_at(n, exact, &opts));
        println!("{name}: errors {:.2e} {:.2e} {:.2e}, ratios {:.2} {:.2}", errs[0], errs[1], errs[2], errs[0] / errs[1], errs[1] / errs[2]);
    }
    Ok(())
}

fn error_at(n: usize, exact: &Poly, opts: &SorOptions) -> f64 {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, n).unwrap();
    let (u, _) = solve_r31(&spec, |p| exact.eval_f64(p), opts).unwrap();
    u.interior_max_error(|p| exact.eval_f64(p))
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
