fn main() {
    std::process::exit(morse_smale::cli::run(std::env::args_os()));
}
