fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("WBP_LOG")).format_timestamp_millis().init();
    std::process::exit(wbp_core::cli::run(std::env::args_os()));
}
