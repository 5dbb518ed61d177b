use nonmarkov_qdyn::spectral::{SpectralDensity, SystemParams};

#[test]
fn dbg_modes() {
    let sys = SystemParams::boson(1.0).unwrap();
    for &s in &[0.5f64, 1.0, 3.0] {
        for i in 0..10 {
            let omega_c = 1.0 + 19.0 * i as f64 / 9.0;
            let eta_c = 1.0 / (omega_c * statrs::function::gamma::gamma(s));
            let (mut lo, mut hi) = (0.2 * eta_c, 3.0 * eta_c);
            for it in 0..40 {
                let mid = 0.5 * (lo + hi);
                let j = SpectralDensity::ohmic_family(mid, s, omega_c).unwrap();
                match j.localized_modes(&sys) {
                    Ok(m) => { if m.is_empty() { lo = mid } else { hi = mid } }
                    Err(e) => { println!("FAIL s={s} wc={omega_c} eta={mid} it={it}: {e}"); return; }
                }
            }
            println!("ok s={s} wc={omega_c:.2}: det {:.6} vs {:.6}", 0.5*(lo+hi), eta_c);
        }
    }
}
