fn main() {
    std::process::exit(sparsefill::cli::main_with_args(std::env::args_os()));
}
