fn main() {
    std::process::exit(gremphase::run(std::env::args_os()));
}
