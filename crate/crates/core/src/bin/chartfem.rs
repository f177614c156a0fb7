fn main() {
    std::process::exit(chartfem::cli::main_with_args(std::env::args_os()));
}
