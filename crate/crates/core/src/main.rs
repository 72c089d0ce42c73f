fn main() {
    std::process::exit(kernel_pricing::cli::run(std::env::args_os()));
}
