use clap::Parser;

fn main() {
    match reval::cli::main_with(reval::cli::Cli::parse()) {
        Ok(done) if done.artifact_on_stdout => eprintln!("{}", done.summary),
        Ok(done) => println!("{}", done.summary),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
