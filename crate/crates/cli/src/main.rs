fn main() {
    std::process::exit(lagbonnet::run(std::env::args_os()));
}
