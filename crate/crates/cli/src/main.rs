fn main() {
    std::process::exit(nilflow_cli::main_with_args(std::env::args_os()));
}
