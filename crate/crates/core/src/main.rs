use clap::Parser;

fn main() {
    let args = glueforge::cli::Args::parse();
    std::process::exit(glueforge::cli::run(args));
}
