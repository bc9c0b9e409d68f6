fn main() {
    std::process::exit(qrepeater::cli::main());
}
