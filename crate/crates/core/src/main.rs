fn main() {
    std::process::exit(fsdp::cli::run(std::env::args_os()));
}
