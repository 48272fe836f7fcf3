//! Conversions between cyclic configuration units and internal angular units.
//!
//! Configuration files quote frequencies as `f = ω/2π` in GHz or MHz and
//! coherence times in µs. The simulation works in rad/ns and ns, so
//! `1 GHz` maps to `2π rad/ns` and `1 MHz` to `2π·10⁻³ rad/ns`.

use std::f64::consts::TAU;

/// Cyclic GHz to rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Cyclic MHz to rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// rad/ns to cyclic GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / TAU
}

/// rad/ns to cyclic MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU * 1e3
}

/// µs to ns.
pub fn us(t: f64) -> f64 {
    t * 1e3
}

/// Decay rate `1/T` in 1/ns for a lifetime given in µs. An infinite lifetime
/// gives a zero rate.
pub fn rate_from_us(t_us: f64) -> f64 {
    1.0 / us(t_us)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((to_ghz(ghz(9.5)) - 9.5).abs() < 1e-12);
        assert!((to_mhz(mhz(120.0)) - 120.0).abs() < 1e-12);
        assert!((mhz(1000.0) - ghz(1.0)).abs() < 1e-12);
        assert_eq!(rate_from_us(f64::INFINITY), 0.0);
        assert!((rate_from_us(20.0) - 5e-5).abs() < 1e-18);
    }
}
