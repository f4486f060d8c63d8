//! Monotone cubic (Fritsch-Carlson) interpolation on a strictly increasing
//! knot set. Used for the tabulated inverse distribution functions.

pub(crate) struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    /// Build from strictly increasing `xs`; `ys` monotone (either direction)
    /// keeps the interpolant monotone.
    pub(crate) fn new(xs: Vec<f64>, ys: Vec<f64>) -> Pchip {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n, "need at least two knots");
        let mut slopes = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            slopes.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        let mut ds = vec![0.0; n];
        ds[0] = slopes[0];
        ds[n - 1] = slopes[n - 2];
        for i in 1..n - 1 {
            let s0 = slopes[i - 1];
            let s1 = slopes[i];
            if s0 * s1 <= 0.0 {
                ds[i] = 0.0;
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                ds[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
            }
        }
        Pchip { xs, ys, ds }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x * 0.7).tanh()).collect();
        let p = Pchip::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-15);
        }
    }

    #[test]
    fn preserves_monotonicity() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 - (-x).exp()).collect();
        let p = Pchip::new(xs, ys);
        let mut prev = f64::NEG_INFINITY;
        let mut x = 0.0;
        while x < 4.9 {
            let v = p.eval(x);
            assert!(v >= prev);
            prev = v;
            x += 0.013;
        }
    }

    #[test]
    fn accuracy_on_monotone_data() {
        // third-order where the data are monotone, which is how the
        // distribution tables use it
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 / (1.0 + (-x + 5.0).exp())).collect();
        let p = Pchip::new(xs, ys);
        let mut x = 0.1;
        while x < 9.8 {
            let want = 1.0 / (1.0 + (-x + 5.0_f64).exp());
            assert!((p.eval(x) - want).abs() < 2e-5, "at {x}");
            x += 0.037;
        }
    }
}
