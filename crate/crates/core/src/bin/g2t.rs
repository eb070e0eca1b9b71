fn main() {
    std::process::exit(g2t_core::cli::run(std::env::args_os()));
}
