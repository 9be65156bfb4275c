fn main() {
    std::process::exit(microlocal::cli::main_with(std::env::args_os()));
}
