//! Reproduction numbers from recovery and death kernels, and herd-immunity
//! thresholds for familiar values.

use epidelay::epimetrics::{
    basic_reproduction_number, herd_immunity_threshold, EpiContext, TransmissionProfile,
};
use epidelay::gammadist::GammaParams;

fn main() -> epidelay::Result<()> {
    for (disease, r0) in [
        ("measles", 18.0),
        ("smallpox", 6.0),
        ("mumps", 8.0),
        ("rubella", 2.3),
    ] {
        println!(
            "{disease:<9} R0 = {r0:<4} p_c = {:.1}%",
            100.0 * herd_immunity_threshold(r0)?
        );
    }

    let recovery = GammaParams::new(4.7, 4.5)?;
    let death = GammaParams::new(4.95, 2.05)?;
    let p0 = 0.97;
    let ctx = EpiContext::new(1.4e9, 1.4e9, 0.0)?;

    let constant = TransmissionProfile::constant(0.12)?;
    let r0 = basic_reproduction_number(&ctx, &constant, &recovery, &death, p0, 0.01)?;
    println!(
        "\nconstant beta 0.12: R0 = {r0:.3}, HIT = {:.3}",
        herd_immunity_threshold(r0)?
    );

    // infectiousness that fades over the first three weeks
    let fading = TransmissionProfile::tabulated(vec![(0.0, 0.3), (7.0, 0.2), (21.0, 0.05)])?;
    let r0 = basic_reproduction_number(&ctx, &fading, &recovery, &death, p0, 0.01)?;
    println!(
        "fading beta:        R0 = {r0:.3}, HIT = {:.3}",
        herd_immunity_threshold(r0)?
    );

    let latent = EpiContext::new(1.4e9, 1.4e9, 5.0)?;
    let r0 = basic_reproduction_number(&latent, &constant, &recovery, &death, p0, 0.01)?;
    println!("5-day latent period: R0 = {r0:.3}");
    Ok(())
}
