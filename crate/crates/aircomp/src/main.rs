fn main() {
    std::process::exit(aircomp::cli::main(std::env::args_os()));
}
