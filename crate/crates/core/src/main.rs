fn main() {
    std::process::exit(freeplate::cli::run(std::env::args_os()));
}
