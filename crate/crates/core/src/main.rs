fn main() {
    std::process::exit(stabtune::cli::run(std::env::args_os()));
}
