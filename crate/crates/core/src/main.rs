fn main() {
    std::process::exit(batchsched::cli::main_with_args(std::env::args_os()));
}
