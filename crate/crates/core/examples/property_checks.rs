// The numerical property suites at reduced sample counts.

use rotmap::checks::{self, Suite};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut failed = 0;
    for suite in Suite::ALL {
        let samples = match suite {
            Suite::Gradcheck => 25,
            Suite::Identities => 1000,
            _ => 100,
        };
        for outcome in checks::run_suite(suite, samples, 11)? {
            println!("{outcome}");
            failed += usize::from(!outcome.passed);
        }
    }
    if failed > 0 {
        return Err(format!("{failed} checks failed").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("property checks");
}
