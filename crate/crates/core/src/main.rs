fn main() {
    std::process::exit(graphon_gw::cli::run(std::env::args_os()));
}
