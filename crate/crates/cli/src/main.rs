fn main() {
    std::process::exit(spectorus_cli::run(std::env::args_os()));
}
