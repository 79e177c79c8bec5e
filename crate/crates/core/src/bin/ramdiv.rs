fn main() {
    std::process::exit(ramdiv::cli::main_with_env());
}
