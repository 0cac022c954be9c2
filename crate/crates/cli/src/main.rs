fn main() {
    std::process::exit(threshold_lab_cli::dispatch(std::env::args()));
}
