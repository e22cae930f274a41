fn main() {
    std::process::exit(skyrme_lab::main_with_args(std::env::args_os()));
}
