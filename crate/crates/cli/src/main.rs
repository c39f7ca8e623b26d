fn main() {
    std::process::exit(spread_cli::main_with(std::env::args_os()));
}
