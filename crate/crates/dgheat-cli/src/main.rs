fn main() {
    std::process::exit(dgheat_cli::run());
}
