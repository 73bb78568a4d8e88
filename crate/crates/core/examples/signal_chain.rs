//! Levels 1 and 2 on their own: a noisy sensor trace is filtered, combined
//! into a virtual channel, transformed to a spectrum and checked against the
//! sensor's operational limits.
//!
//! ```text
//! cargo run --example signal_chain
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cbm::domain::{AssetId, ChannelId, Measurement, Placement, TedsRecord};
use cbm::monitor::check_limits;
use cbm::signal::{ewma, moving_average, spectrum, virtual_channel_str, Series};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.4)?;
    let n = 64;
    // a slow wear ramp plus a vibration at bin 8
    let left: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64;
            10.0 + 0.04 * t + (2.0 * std::f64::consts::PI * 8.0 * t / n as f64).sin() + noise.sample(&mut rng)
        })
        .collect();
    let right: Vec<f64> = left.iter().map(|v| v + 0.3 + noise.sample(&mut rng)).collect();
    let l = Series::new(ChannelId::new("left")?, 0, left);
    let r = Series::new(ChannelId::new("right")?, 0, right);

    let smooth = moving_average(&l, 5)?;
    let ew = ewma(&l, 0.3)?;
    println!(
        "raw last {:.3}, moving average {:.3}, ewma {:.3}",
        l.last().unwrap(),
        smooth.last().unwrap(),
        ew.last().unwrap()
    );

    let mean = virtual_channel_str(ChannelId::new("mean")?, &[&l, &r], "(left + right) / 2")?;
    let diff = virtual_channel_str(ChannelId::new("difference")?, &[&l, &r], "left - right")?;
    println!(
        "virtual mean {:.3}, difference {:.3}",
        mean.last().unwrap(),
        diff.last().unwrap()
    );

    let freq = spectrum(&l)?;
    // real input: bins above n/2 mirror the lower half
    let peak = freq.bins[1..=n / 2]
        .iter()
        .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
        .unwrap();
    println!(
        "spectrum of {} samples peaks at bin {} (magnitude {:.1})",
        freq.n, peak.k, peak.magnitude
    );

    let teds = TedsRecord {
        channel: ChannelId::new("left")?,
        quantity: "flange thickness".into(),
        units: "mm".into(),
        range_min: 0.0,
        range_max: 20.0,
        nominal: 10.0,
        failure_value: 14.0,
        placement: Placement::Wayside,
        lower_limit: None,
        upper_limit: Some(13.0),
    };
    let asset = AssetId::new("wheel-x")?;
    let alerts = l
        .values
        .iter()
        .enumerate()
        .filter_map(|(t, &value)| {
            check_limits(
                &Measurement {
                    asset: asset.clone(),
                    channel: teds.channel.clone(),
                    t: t as u64,
                    value,
                },
                &teds,
            )
        })
        .collect::<Vec<_>>();
    println!(
        "{} of {n} samples exceed the operational limit of 13.0",
        alerts.len()
    );
    if let Some(a) = alerts.first() {
        println!("first alert: t={} observed {:.3} > {}", a.t, a.observed, a.limit);
    }
    Ok(())
}
