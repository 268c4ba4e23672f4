//! Tail probabilities and quantiles. All p-values are clamped to [0, 1].

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

fn clamp(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

pub fn normal_two_sided(z: f64) -> f64 {
    // erfc directly; statrs's normal tail is only good to about 1e-10
    clamp(libm::erfc(z.abs() / std::f64::consts::SQRT_2))
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let d = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    clamp(2.0 * d.sf(t.abs()))
}

pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    clamp(FisherSnedecor::new(d1, d2).expect("df > 0").sf(f))
}

pub fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    FisherSnedecor::new(d1, d2).expect("df > 0").inverse_cdf(p)
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    clamp(ChiSquared::new(df).expect("df > 0").sf(x))
}
