fn main() {
    std::process::exit(backaction::cli::main());
}
