fn main() {
    std::process::exit(lids::cli::main());
}
