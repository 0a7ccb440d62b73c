fn main() {
    std::process::exit(memfold::cli::run(std::env::args_os()));
}
