fn main() {
    std::process::exit(clinprog_service::cli::main(std::env::args_os()));
}
