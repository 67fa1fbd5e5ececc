fn main() {
    std::process::exit(pmlab_cli::main_with(std::env::args_os()));
}
