//! Runs a simulation script and prints the transcript.
//!
//! `cargo run -p scicafe-service --example simulate -- crates/service/tests/scripts/rotation.sim`

use scicafe_service::sim::simulate;

fn main() {
    let path = std::env::args().nth(1).expect("usage: simulate <script>");
    let text = std::fs::read_to_string(&path).expect("readable script");
    match simulate(&text) {
        Ok(report) => {
            print!("{}", report.render());
            std::process::exit(if report.passed() { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }
    }
}
