fn main() {
    std::process::exit(dsrs::cli_main(std::env::args_os()));
}
