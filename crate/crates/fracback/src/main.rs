fn main() {
    let code = fracback::cli::main_with(std::env::args_os(), std::env::var(fracback::cli::SEED_ENV).ok());
    std::process::exit(code);
}
