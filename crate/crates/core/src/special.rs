//! Small special-function helpers: sine and cosine integrals, used by the
//! algebraic tail corrections of the phonon rate integrals.

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Auxiliary f, g with Si(x) = pi/2 - f cos x - g sin x,
/// Ci(x) = f sin x - g cos x, from the divergent asymptotic series
/// truncated at its smallest term scale. Adequate for x >= 12.
fn aux_fg(x: f64) -> (f64, f64) {
    let x2 = x * x;
    let f = (1.0 - 2.0 / x2 + 24.0 / (x2 * x2) - 720.0 / (x2 * x2 * x2)) / x;
    let g = (1.0 - 6.0 / x2 + 120.0 / (x2 * x2) - 5040.0 / (x2 * x2 * x2)) / x2;
    (f, g)
}

/// Si(x) = Int_0^x sin(t)/t dt for x >= 0.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x < 12.0 {
        // sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
        let mut sum = 0.0;
        let mut pow = x; // x^(2k+1)/(2k+1)!
        let mut sign = 1.0;
        for k in 0..60 {
            let n = (2 * k + 1) as f64;
            sum += sign * pow / n;
            sign = -sign;
            pow *= x * x / ((n + 1.0) * (n + 2.0));
            if pow < 1e-18 * sum.abs().max(1.0) && k > 2 {
                break;
            }
        }
        sum
    } else {
        let (f, g) = aux_fg(x);
        std::f64::consts::FRAC_PI_2 - f * x.cos() - g * x.sin()
    }
}

/// Ci(x) = -Int_x^inf cos(t)/t dt for x > 0.
pub fn cosine_integral(x: f64) -> f64 {
    assert!(x > 0.0, "cosine_integral requires x > 0");
    if x < 12.0 {
        let mut sum = 0.0;
        let mut pow = -x * x / 2.0; // (-1)^k x^(2k)/(2k)! starting at k = 1
        for k in 1..60 {
            let n = (2 * k) as f64;
            sum += pow / n;
            pow *= -x * x / ((n + 1.0) * (n + 2.0));
            if pow.abs() < 1e-18 * sum.abs().max(1.0) && k > 2 {
                break;
            }
        }
        EULER_GAMMA + x.ln() + sum
    } else {
        let (f, g) = aux_fg(x);
        f * x.sin() - g * x.cos()
    }
}
