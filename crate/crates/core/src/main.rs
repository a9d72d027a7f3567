fn main() {
    std::process::exit(tumor_sde::cli::main_with_args(std::env::args_os()));
}
