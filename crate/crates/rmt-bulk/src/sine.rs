//! The sine kernel `K(t) = sin(pi t) / (pi t)`, its derivative and its integral.

use std::f64::consts::PI;

use nalgebra::Complex;

pub fn k_inf(t: f64) -> f64 {
    let z = PI * t;
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `d/dt K(t)`.
pub fn k_inf_deriv(t: f64) -> f64 {
    let z = PI * t;
    if z.abs() < 1e-3 {
        let z2 = z * z;
        PI * z * (-1.0 / 3.0 + z2 / 30.0 - z2 * z2 / 840.0)
    } else {
        PI * (z * z.cos() - z.sin()) / (z * z)
    }
}

/// `int_0^z K(t) dt = Si(pi z) / pi`.
pub fn k_inf_integral(z: f64) -> f64 {
    sine_integral(PI * z) / PI
}

/// `Si(x)`: power series for `|x| <= 4`, continued fraction for `E_1(ix)` beyond.
pub fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    let s = if t == 0.0 {
        0.0
    } else if t <= 4.0 {
        let x2 = t * t;
        let mut term = t;
        let mut sum = t;
        let mut k = 0usize;
        loop {
            let a = (2 * k + 1) as f64;
            term *= -x2 / ((a + 1.0) * (a + 2.0));
            let add = term / (a + 2.0);
            sum += add;
            k += 1;
            if add.abs() < 1e-18 * sum.abs() || k > 60 {
                break;
            }
        }
        sum
    } else {
        // modified Lentz on E_1(i t) = e^{-i t} / (1 + i t - 1/(3 + i t - 4/(5 + i t - ...)))
        let tiny = 1e-300;
        let mut b = Complex::new(1.0, t);
        let mut c = Complex::new(1.0 / tiny, 0.0);
        let mut d = Complex::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += Complex::new(2.0, 0.0);
            d = Complex::new(1.0, 0.0) / (d * a + b);
            c = b + Complex::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del - Complex::new(1.0, 0.0)).norm() < 1e-16 {
                break;
            }
        }
        let e = Complex::new(t.cos(), -t.sin()) * h;
        PI / 2.0 + e.im
    };
    if x < 0.0 {
        -s
    } else {
        s
    }
}
