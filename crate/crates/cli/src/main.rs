fn main() {
    std::process::exit(sqg_cli::cli_main(std::env::args_os()));
}
