//! Central tendencies of a few fitted recovery kernels, plus tail points used
//! to truncate convolutions.

use epidelay::gammadist::{GammaParams, DEFAULT_TAIL_MASS};

fn main() -> epidelay::Result<()> {
    let kernels = [
        ("COVID-19, China", 4.7, 4.5),
        ("Alpha, Italy", 2.55, 12.2),
        ("Delta, Italy", 18.7, 0.8),
        ("Omicron, Italy", 2.01, 6.98),
        ("measles (weeks)", 38.16, 0.0485),
        ("typhoid (weeks)", 30.0, 0.036),
    ];
    println!(
        "{:<18}{:>8}{:>8}{:>8}{:>8}{:>10}{:>10}",
        "kernel", "shape", "scale", "mean", "median", "mode", "variance"
    );
    for (name, a, b) in kernels {
        let p = GammaParams::new(a, b)?;
        let s = p.summary()?;
        println!(
            "{name:<18}{a:>8}{b:>8}{:>8.3}{:>8.3}{:>10.4}{:>10.4}",
            s.mean, s.median, s.mode, s.variance
        );
    }

    let p = GammaParams::new(4.7, 4.5)?;
    println!();
    for t in [7.0, 14.0, 21.0, 28.0, 42.0] {
        println!("P(recovered by day {t:>2}) = {:.4}", p.cdf(t)?);
    }
    println!(
        "tail below {DEFAULT_TAIL_MASS:e} after {:.2} days",
        p.truncation_time(DEFAULT_TAIL_MASS)?
    );
    Ok(())
}
