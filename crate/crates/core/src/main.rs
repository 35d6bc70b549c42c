fn main() {
    std::process::exit(analogy_audit::cli::main());
}
