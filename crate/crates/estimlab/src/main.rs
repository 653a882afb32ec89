fn main() {
    std::process::exit(estimlab::cli::main_entry());
}
