//! Writes the bundled example dataset under `data/`.
//!
//! Hourly carbon intensity for ES, NL and DE over 2022 is synthesized from a
//! seasonal level, a solar midday dip and an AR(1) wind/dispatch term, scaled
//! so the annual means land near published 2022 grid averages (ES ~170,
//! NL ~390, DE ~430 gCO2/kWh). These are stand-ins, not measurements; drop real
//! exports with the same header into `data/traces/` to replace them.
//!
//! Also writes six hours of 20 s power samples per node under `data/power/`.
//!
//! cargo run -p maizx-core --example synth_traces -- data

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use chrono::{Duration, TimeZone, Utc};
use maizx_core::ingest::{write_ci_csv, write_power_csv};
use maizx_core::{CarbonIntensitySeries, PowerSeries, Zone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct ZoneProfile {
    zone: &'static str,
    mean: f64,
    winter_swing: f64,
    solar_dip: f64,
    noise: f64,
    persistence: f64,
}

const PROFILES: [ZoneProfile; 3] = [
    ZoneProfile { zone: "ES", mean: 170.0, winter_swing: 0.18, solar_dip: 0.45, noise: 0.16, persistence: 0.93 },
    ZoneProfile { zone: "NL", mean: 390.0, winter_swing: 0.10, solar_dip: 0.25, noise: 0.12, persistence: 0.95 },
    ZoneProfile { zone: "DE", mean: 430.0, winter_swing: 0.12, solar_dip: 0.28, noise: 0.18, persistence: 0.96 },
];

const NODES: [(&str, f64, f64); 3] = [("es-1", 2000.0, 5000.0), ("nl-1", 2000.0, 5000.0), ("de-1", 2000.0, 5000.0)];

fn synth_zone(p: &ZoneProfile, hours: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ar = 0.0;
    let raw: Vec<f64> = (0..hours)
        .map(|h| {
            let day = h as f64 / 24.0;
            let hod = (h % 24) as f64;
            // peaks mid-January, lowest mid-July
            let season = 1.0 + p.winter_swing * (2.0 * PI * (day - 15.0) / 365.0).cos();
            let daylight = 0.5 + 0.5 * (2.0 * PI * (day - 172.0) / 365.0).cos();
            let sun = ((hod - 6.0) / 12.0 * PI).sin().max(0.0);
            let solar = p.solar_dip * sun * (0.55 + 0.45 * daylight);
            ar = p.persistence * ar + (1.0 - p.persistence * p.persistence).sqrt() * rng.gen_range(-1.0..1.0) * 1.7;
            (season - solar + p.noise * ar).max(0.08)
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.iter().map(|v| (v / mean * p.mean * 10.0).round() / 10.0).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "data".into()).into();
    let traces = out.join("traces");
    let power = out.join("power");
    fs::create_dir_all(&traces)?;
    fs::create_dir_all(&power)?;

    let start = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    for p in &PROFILES {
        let values = synth_zone(p, 8760, &mut rng);
        let series = CarbonIntensitySeries::new(Zone::new(p.zone)?, start, values)?;
        let path = traces.join(format!("{}_2022.csv", p.zone.to_lowercase()));
        write_ci_csv(&series, BufWriter::new(File::create(&path)?))?;
        println!("{} mean {:.1} g/kWh -> {}", p.zone, series.mean(), path.display());
    }

    let power_start = start + Duration::hours(24 * 31);
    for (id, idle, max) in NODES {
        let mut u: f64 = 0.4;
        let samples: Vec<f64> = (0..6 * 180)
            .map(|_| {
                u = (u + rng.gen_range(-0.05..0.05)).clamp(0.05, 0.95);
                ((idle + (max - idle) * u) * 10.0).round() / 10.0
            })
            .collect();
        let series = PowerSeries::new(id, power_start, 20, samples)?;
        let path = power.join(format!("{id}.csv"));
        write_power_csv(&series, BufWriter::new(File::create(&path)?))?;
        println!("{id} -> {}", path.display());
    }
    Ok(())
}
