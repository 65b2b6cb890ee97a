fn main() { std::process::exit(oocmat::cli::main()); }
