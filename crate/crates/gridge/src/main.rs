fn main() {
    std::process::exit(gridge::cli::main(std::env::args_os()));
}
