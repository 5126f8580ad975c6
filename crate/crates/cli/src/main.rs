fn main() {
    std::process::exit(thermosig_cli::cli_main(std::env::args_os()));
}
