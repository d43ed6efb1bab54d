fn main() {
    std::process::exit(vhmpc::cli::run(std::env::args_os()));
}
