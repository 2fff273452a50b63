fn main() {
    std::process::exit(setlang::cli::run());
}
