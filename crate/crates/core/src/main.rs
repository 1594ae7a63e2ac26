fn main() {
    std::process::exit(min_energy::cli::main());
}
