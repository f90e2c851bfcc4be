fn main() {
    std::process::exit(carlson_core::harness::main_with_args(std::env::args_os()));
}
