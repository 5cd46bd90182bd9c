fn main() {
    std::process::exit(pdsgd_cli::main_with(std::env::args_os()));
}
