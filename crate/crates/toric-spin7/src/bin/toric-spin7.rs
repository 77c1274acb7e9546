fn main() {
    std::process::exit(toric_spin7::cli::main_with_args(std::env::args().collect()));
}
