// The two flat models: identities and the image of the singular orbits.

use toric_spin7::flat_models::{model, singular_graph, verify_moment_identities, ModelKind, NuBox};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bx: NuBox = [(-1.0, 1.0); 4];
    for kind in [ModelKind::StabT2, ModelKind::StabS1] {
        let m = model(kind);
        let p = [0.3, -0.2, 0.7, 0.1, -0.5, 0.4, 0.9, -0.6];
        println!("{}: Phi has {} terms", kind.name(), m.phi.nterms());
        println!("  moment identities exact {}, defect at p {:.1e}", m.moment_identities_hold(), verify_moment_identities(&m, &p));
        println!(
            "  brackets {} closed {} invariant {} isotropic {}",
            m.brackets_vanish(),
            m.phi_is_closed(),
            m.phi_is_invariant(),
            m.orbits_are_isotropic()
        );
        let g = singular_graph(&m, &bx);
        println!("{}", serde_json::to_string(&g)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
