fn main() {
    std::process::exit(netsync_cli::run(std::env::args_os()));
}
