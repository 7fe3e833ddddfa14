fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(ncollapse::cli::run(&args));
}
