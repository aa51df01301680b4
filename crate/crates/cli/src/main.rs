fn main() {
    std::process::exit(osup_cli::run(std::env::args_os()));
}
