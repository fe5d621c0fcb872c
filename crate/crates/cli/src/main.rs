fn main() {
    std::process::exit(suflab_cli::cli_main(std::env::args_os()));
}
