fn main() {
    std::process::exit(corner_waves::cli::main(std::env::args_os()));
}
