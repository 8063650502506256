fn main() {
    std::process::exit(fftc::cli::run());
}
