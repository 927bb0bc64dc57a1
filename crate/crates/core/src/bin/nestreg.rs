fn main() {
    std::process::exit(nestreg::cli::main(std::env::args_os()));
}
