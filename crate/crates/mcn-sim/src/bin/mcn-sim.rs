fn main() {
    std::process::exit(mcn_sim::cli::main());
}
