fn main() {
    std::process::exit(gridsched_cli::main_with(std::env::args_os()));
}
