fn main() {
    std::process::exit(ideal_tri::cli::run(std::env::args_os()));
}
