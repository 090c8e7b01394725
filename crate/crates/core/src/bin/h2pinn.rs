fn main() {
    std::process::exit(h2pinn::cli::main());
}
