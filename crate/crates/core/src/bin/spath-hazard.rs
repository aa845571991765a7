fn main() {
    std::process::exit(spath_hazard::cli::main_with_env());
}
