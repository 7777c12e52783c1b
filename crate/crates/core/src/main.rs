fn main() {
    std::process::exit(antires::cli::run(std::env::args_os()));
}
