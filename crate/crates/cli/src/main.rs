fn main() {
    std::process::exit(adrx_cli::run(std::env::args_os()));
}
