fn main() {
    std::process::exit(wres::cli::main_entry());
}
