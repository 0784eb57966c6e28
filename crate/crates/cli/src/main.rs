fn main() {
    std::process::exit(formation_vi_cli::run(std::env::args_os()));
}
