use clap::Parser;

fn main() {
    let cli = cfexplain_service::cli::Cli::parse();
    let code = cfexplain_service::cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
