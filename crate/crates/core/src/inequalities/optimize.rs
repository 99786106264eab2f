//! Derivative-free maximization over bounded trial parameters.

/// Bounds of one coordinate. `log_scale` searches in `ln x`.
#[derive(Debug, Clone, Copy)]
pub struct Coord {
    pub lo: f64,
    pub hi: f64,
    pub log_scale: bool,
}

impl Coord {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log_scale: false }
    }
    pub fn log(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log_scale: true }
    }
    fn to_internal(self, x: f64) -> f64 {
        if self.log_scale {
            x.ln()
        } else {
            x
        }
    }
    fn to_external(self, y: f64) -> f64 {
        if self.log_scale {
            y.exp()
        } else {
            y
        }
    }
    fn bounds(self) -> (f64, f64) {
        (self.to_internal(self.lo), self.to_internal(self.hi))
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Coordinate-wise golden-section sweeps followed by a compass search polish.
/// Non-finite objective values count as `-∞`.
pub fn maximize(f: impl Fn(&[f64]) -> f64, coords: &[Coord], x0: &[f64], sweeps: usize) -> Optimum {
    let mut evals = 0usize;
    let mut eval = |y: &[f64]| {
        evals += 1;
        let x: Vec<f64> = y.iter().zip(coords).map(|(&v, c)| c.to_external(v)).collect();
        let v = f(&x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut y: Vec<f64> = x0.iter().zip(coords).map(|(&v, c)| c.to_internal(v)).collect();
    let mut best = eval(&y);
    for _ in 0..sweeps {
        for k in 0..coords.len() {
            let (mut a, mut b) = coords[k].bounds();
            let mut probe = y.clone();
            let mut at = |t: f64, p: &mut Vec<f64>| {
                p[k] = t;
                eval(p)
            };
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = at(c, &mut probe);
            let mut fd = at(d, &mut probe);
            while b - a > 1e-6 * (1.0 + a.abs().max(b.abs())) {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = at(c, &mut probe);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = at(d, &mut probe);
                }
            }
            let (t, ft) = if fc >= fd { (c, fc) } else { (d, fd) };
            if ft > best {
                best = ft;
                y[k] = t;
            }
        }
    }
    // compass polish
    let mut step: Vec<f64> = coords.iter().map(|c| 0.05 * (c.bounds().1 - c.bounds().0)).collect();
    for _ in 0..60 {
        let mut improved = false;
        for k in 0..coords.len() {
            let (lo, hi) = coords[k].bounds();
            for sign in [1.0, -1.0] {
                let mut p = y.clone();
                p[k] = (p[k] + sign * step[k]).clamp(lo, hi);
                let v = eval(&p);
                if v > best {
                    best = v;
                    y = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
            if step.iter().zip(coords).all(|(s, c)| *s < 1e-7 * (1.0 + c.bounds().1.abs())) {
                break;
            }
        }
    }
    let x = y.iter().zip(coords).map(|(&v, c)| c.to_external(v)).collect();
    Optimum { x, value: best, evaluations: evals }
}
