fn main() {
    std::process::exit(nnf2sdd::cli::main_with_args(std::env::args_os().collect()));
}
