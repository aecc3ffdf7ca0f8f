fn main() {
    std::process::exit(cogalign::cli::main_exit_code());
}
