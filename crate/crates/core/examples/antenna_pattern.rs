//! Base-station arrays: EIRP per configuration, element and steered-array cuts,
//! and the gain distribution seen by a satellite at 40 deg elevation.
//!
//!     cargo run --release --example antenna_pattern

use satcoex::antenna::{beam_gain, element_gain, gain_pdf, Aod, ArrayConfig, BsClass, ServedUeModel};
use satcoex::geomstats::{AzimuthHistograms, Histogram1D};

fn main() -> satcoex::Result<()> {
    println!("{:>6} {:>6} {:>6} {:>6} {:>10}", "config", "class", "N_V", "N_H", "EIRP dBm");
    for config in [1u8, 2] {
        for class in [BsClass::Macro, BsClass::Micro] {
            let a = ArrayConfig::preset(config, class);
            println!("{:>6} {:>6?} {:>6} {:>6} {:>10.2}", config, class, a.n_v, a.n_h, a.eirp_dbm());
        }
    }

    let cfg = ArrayConfig::preset(1, BsClass::Macro);
    let steer = Aod::new(-10.0, 0.0);
    println!("\nelevation cut at azimuth 0, beam steered to -10 deg:");
    for el in (-90..=90).step_by(15) {
        let t = Aod::new(el as f64, 0.0);
        println!("  {el:>4} deg  element {:7.2} dBi  array {:7.2} dBi", element_gain(t, &cfg), beam_gain(t, steer, 0.0, &cfg)?);
    }

    let geo = AzimuthHistograms::simple(Histogram1D::uniform(5.0, 40.0), Histogram1D::uniform(10.0, 30.0));
    let ue = ServedUeModel::new(BsClass::Macro, 300.0, false);
    let pdf = gain_pdf(Aod::new(40.0, 45.0), &cfg, &ue, &geo, 50_000, 1)?;
    let mean = 10.0 * pdf.mean_linear().log10();
    println!("\ngain toward (40 deg, 45 deg): mean {mean:.2} dBi, max {:.2} dBi", pdf.max_value().unwrap());
    for p in [0.1, 0.5, 0.9] {
        let x = pdf.atoms().scan(0.0, |c, (v, w)| {
            *c += w;
            Some((v, *c))
        });
        let q = x.into_iter().find(|&(_, c)| c >= p).map(|(v, _)| v).unwrap();
        println!("  {:>2.0}th percentile {q:7.2} dBi", p * 100.0);
    }
    Ok(())
}
