fn main() {
    std::process::exit(spikeshrink::cli::main_from(std::env::args_os()));
}
