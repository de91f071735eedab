fn main() {
    std::process::exit(rfsearch::cli::main_with_args(std::env::args_os()));
}
