fn main() {
    std::process::exit(hardy_radial::cli::main_with_args(std::env::args_os()));
}
