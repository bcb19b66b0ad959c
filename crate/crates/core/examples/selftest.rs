//! Run the built-in invariant checks and print one line each.

fn main() {
    let checks = p300_fsc::selftest::run(&Default::default());
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
}
