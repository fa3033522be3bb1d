fn main() {
    std::process::exit(stack_order::cli::run());
}
