fn main() {
    std::process::exit(esterle_cli::run(std::env::args_os()));
}
