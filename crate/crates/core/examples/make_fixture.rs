//! Writes a synthetic network, OD table and a run of daily weather files.
//!
//! Usage: make_fixture <dir> [first_year] [years]

use std::path::PathBuf;

use chrono::NaiveDate;
use gridshock_core::synthetic::{daily_events, generate, write_events, SyntheticConfig};

fn main() -> gridshock_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let first_year: i32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2031);
    let years: i32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let s = generate(&SyntheticConfig::default())?;
    s.write_csvs(&dir)?;
    let hub = &s.network.nodes()[s.hub];
    for (i, year) in (first_year..first_year + years).enumerate() {
        let start = NaiveDate::from_ymd_opt(year, 5, 1).expect("valid date");
        let events = daily_events(&s.network, (hub.lat, hub.lon), start, 153, i as u64)?;
        write_events(&events, &dir.join("weather"))?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}
