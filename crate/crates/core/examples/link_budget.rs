//! Satellite link terms: free-space loss, noise floor, INR threshold and the
//! receive-gain / elevation map over a few ground points.
//!
//!     cargo run --release --example link_budget

use satcoex::linkbudget::{fspl, look_angles, noise_floor, sat_gain, LinkTerms, SatGeometry};

fn main() {
    let pl = fspl(35_000e3, 6e9);
    let noise = noise_floor(800.0, 100e6);
    println!("free-space loss at 35,000 km, 6 GHz: {pl:.2} dB");
    println!("noise floor at 800 K, 100 MHz: {noise:.2} dBm");
    println!("INR -10.5 dB threshold: {:.2} dBm", noise - 10.5);
    let link = LinkTerms::new(20.0, pl, 3.0);
    println!("alpha (G_s - A_p - A_pol): {:.2} dB", link.alpha_db);

    let geom = SatGeometry::default();
    println!("\n{:>14} {:>9} {:>9} {:>10} {:>8}", "place", "elev deg", "off-nadir", "slant km", "G_s dBi");
    for (name, lat, lon) in [("sub-satellite", 0.0, 5.0), ("Milan", 45.46, 9.19), ("Lagos", 6.5, 3.4), ("Cairo", 30.0, 31.2), ("Oslo", 59.9, 10.7)] {
        let (el, off, slant) = look_angles(lat, lon, &geom);
        println!("{name:>14} {el:9.2} {off:9.2} {:10.0} {:8.2}", slant / 1e3, sat_gain(off, &geom));
    }
}
