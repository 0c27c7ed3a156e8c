fn main() {
    std::process::exit(orthoalign::cli::run(std::env::args_os()));
}
