fn main() {
    let code = deceptive_risk::cli::run_main();
    std::process::exit(code);
}
