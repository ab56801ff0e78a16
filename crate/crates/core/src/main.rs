fn main() {
    std::process::exit(spectral_scales::cli::run(std::env::args_os()));
}
