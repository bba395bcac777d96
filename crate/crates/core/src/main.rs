fn main() {
    std::process::exit(metastab::cli::run(std::env::args_os()));
}
