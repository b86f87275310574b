fn main() {
    std::process::exit(kernel_spectra::cli::run(std::env::args_os()));
}
