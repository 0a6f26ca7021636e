fn main() {
    std::process::exit(slwave::run(std::env::args_os()));
}
