fn main() {
    std::process::exit(radloc_cli::run(std::env::args_os()));
}
