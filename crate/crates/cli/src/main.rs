fn main() {
    std::process::exit(fracsp_cli::main_with_args(std::env::args_os()));
}
