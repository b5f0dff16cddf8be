fn main() {
    std::process::exit(merw_lab::run(std::env::args_os()));
}
