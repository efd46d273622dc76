fn main() {
    std::process::exit(constancy::cli::main());
}
