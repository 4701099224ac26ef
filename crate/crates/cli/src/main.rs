fn main() {
    std::process::exit(fk_cli::main_with_args(std::env::args_os()));
}
