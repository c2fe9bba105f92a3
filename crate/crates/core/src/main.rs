fn main() {
    std::process::exit(tdbr::cli::run(std::env::args_os()));
}
