fn main() {
    std::process::exit(zskip::cli::main_exit());
}
