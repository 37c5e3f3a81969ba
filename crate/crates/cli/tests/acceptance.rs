//! Runs every acceptance criterion and prints one verdict line each.

use fracspde_cli::acceptance;

fn main() {
    let dir = std::env::var_os("FRACSPDE_ACCEPTANCE_OUT").map(std::path::PathBuf::from);
    println!(
        "running {} acceptance criteria",
        acceptance::criteria().len()
    );
    let reports = acceptance::run_all(dir.as_deref(), |line| println!("{line}"))
        .expect("acceptance artifacts");
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "{}/{} criteria passed",
        reports.len() - failed.len(),
        reports.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
