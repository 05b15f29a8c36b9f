fn main() {
    std::process::exit(quasinorm_cli::main_with_args(std::env::args().collect()));
}
