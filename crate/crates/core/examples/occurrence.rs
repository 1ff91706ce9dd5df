//! Interference-mode occurrence probabilities: closed form for one street
//! cross-section against explicit ray casting, and street-averaged values
//! against satellite elevation.
//!
//!     cargo run --release --example occurrence

use satcoex::antenna::{BsClass, ServedUeModel};
use satcoex::geomstats::{AzimuthHistograms, Histogram1D};
use satcoex::modes::{mean_occurrence, p_mode, raycast_oracle, CrossSection, InterferenceMode, Placement};

fn main() -> satcoex::Result<()> {
    let geo = AzimuthHistograms::simple(Histogram1D::uniform(0.0, 30.0), Histogram1D::uniform(10.0, 30.0));
    let cs = CrossSection { d1: 5.0, d2: 20.0, h1: 0.0, h2: 0.0, h_bs: 6.0, psi_s: 30.0 };
    println!("street 25 m wide, BS 5 m from the left facade at 6 m, psi_s = 30 deg");
    for mode in InterferenceMode::ALL {
        let exact = p_mode(mode, &cs, |x| geo.height_cdf(x))?;
        let mc = raycast_oracle(mode, |r| CrossSection { h1: geo.sample_height(r), h2: geo.sample_height(r), ..cs }, 200_000, 1);
        println!("  {mode}: image method {exact:.4}, ray casting {mc:.4}");
    }

    let ue = ServedUeModel::new(BsClass::Micro, 75.0, false);
    println!("\nmicro BS, averaged over streets:");
    print!("{:>6}", "psi");
    for m in InterferenceMode::ALL {
        print!("{:>8}", m.to_string());
    }
    println!();
    for psi in [10.0, 20.0, 40.0, 60.0, 80.0] {
        print!("{psi:>6.0}");
        for m in InterferenceMode::ALL {
            print!("{:>8.3}", mean_occurrence(m, &geo, &ue, psi, Placement::SingleStreet, 50_000, 2)?);
        }
        println!();
    }
    Ok(())
}
