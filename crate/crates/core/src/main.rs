fn main() {
    let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .write_style(if no_color { env_logger::WriteStyle::Never } else { env_logger::WriteStyle::Auto })
        .init();
    std::process::exit(qcard::cli::run(std::env::args_os()));
}
