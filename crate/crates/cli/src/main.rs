fn main() {
    std::process::exit(darboux_bands::run(std::env::args_os()));
}
