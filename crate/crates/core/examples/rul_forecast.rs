//! Level 5: fit a trend to a noisy health history and forecast when it
//! reaches the failure level, with an uncertainty band.
//!
//! ```text
//! cargo run --example rul_forecast
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cbm::domain::AssetId;
use cbm::prognostics::{estimate_rul, fit_trend, project_health};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.01)?;
    let drift = 0.008;
    let history: Vec<(u64, f64)> = (1..=80)
        .map(|t| (t, (drift * t as f64 + noise.sample(&mut rng)).clamp(0.0, 1.0)))
        .collect();

    let trend = fit_trend(&history, 30)?;
    println!(
        "trend over the last {} points: h = {:.4} + {:.5} t, residual sigma {:.4}",
        trend.window_len, trend.intercept, trend.slope, trend.residual_sigma
    );
    let h_now = trend.fitted_now();
    let est = estimate_rul(AssetId::new("panto-09")?, &trend, h_now, 1.0, 1e-6)?;
    let truth = (1.0 / drift) - 80.0;
    match (est.rul_steps, est.band) {
        (Some(rul), Some(band)) => println!(
            "at t=80 h={h_now:.3}: RUL {rul:.1} steps, band [{:.1}, {:.1}], true {truth:.1}",
            band.lower, band.upper
        ),
        _ => println!("no upward trend, no forecast"),
    }

    println!("projection:");
    for (t, h) in project_health(&trend, 60).iter().step_by(10) {
        println!("  t={t:<4} h={h:.3}");
    }
    Ok(())
}
