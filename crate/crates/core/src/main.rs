fn main() {
    std::process::exit(ardt_locks::cli::main());
}
