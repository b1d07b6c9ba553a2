fn main() {
    std::process::exit(geolab::cli::main_with_args(std::env::args_os()));
}
