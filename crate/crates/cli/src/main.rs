fn main() {
    std::process::exit(aggsim_cli::main_with_args(std::env::args_os()));
}
