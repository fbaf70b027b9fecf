fn main() {
    std::process::exit(hgopt_cli::run_cli());
}
