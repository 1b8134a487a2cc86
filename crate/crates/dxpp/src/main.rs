fn main() {
    std::process::exit(dxpp::cli::run(std::env::args_os()));
}
