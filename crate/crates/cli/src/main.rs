fn main() {
    std::process::exit(quasient_cli::run(std::env::args_os()));
}
