//! Smooths a short dated incidence series and prints Ĵ on a half-day grid.

use epidelay::smoother::KernelSmoother;
use epidelay::timeseries::{parse_csv_str, SeriesLabel};

const INCIDENCE: &str = "\
t,value
2020-01-23,259
2020-01-24,457
2020-01-25,688
2020-01-26,769
2020-01-27,1771
2020-01-28,1459
2020-01-29,1737
2020-01-30,1981
2020-01-31,2099
2020-02-01,2589
";

fn main() -> epidelay::Result<()> {
    let series = parse_csv_str(INCIDENCE, SeriesLabel::Incidence)?;
    for multiplier in [0.5, 1.0, 2.0] {
        let smoother = KernelSmoother::new(series.clone(), multiplier)?;
        println!(
            "bandwidth multiplier {multiplier}: h = {:.4} days",
            smoother.bandwidth()
        );
        for k in 0..=18 {
            let t = 0.5 * k as f64;
            println!("  t = {t:4.1}  J_hat = {:8.1}", smoother.evaluate(t));
        }
    }
    Ok(())
}
