fn main() {
    std::process::exit(misdiag::cli::main_entry())
}
