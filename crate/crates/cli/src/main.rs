fn main() {
    std::process::exit(grushin_lab::run(std::env::args_os()));
}
