fn main() {
    std::process::exit(kg_blowup::cli::main_with_args(std::env::args_os()));
}
