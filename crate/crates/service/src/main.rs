fn main() {
    std::process::exit(geobim_service::cli::run(std::env::args_os()));
}
