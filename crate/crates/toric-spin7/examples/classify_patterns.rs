// Dependence patterns of diagonal fields and the case they reduce to.

use toric_spin7::diagonal::{classify_case, example_family, reducible_example, DependencePattern, FAMILY_NAMES};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for name in FAMILY_NAMES {
        let f = example_family(name)?;
        println!("{name:15} {}", classify_case(&f.pattern()).label());
    }
    println!("{:15} {}", "reducible", classify_case(&reducible_example().pattern()).label());
    let mutual = DependencePattern::from_lists([&[1], &[0], &[], &[]]);
    println!("{:15} {}", "mutual", classify_case(&mutual).label());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
