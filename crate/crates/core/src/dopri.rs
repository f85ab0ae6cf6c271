//! Dormand-Prince 5(4) stepper with Hairer's fourth-order continuous
//! extension, for small fixed-size systems.

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// error estimate: difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// One accepted step together with its interpolation polynomial.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const D: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    /// Straight-line interpolant between two states.
    pub fn linear(x0: f64, x1: f64, y0: [f64; D], y1: [f64; D]) -> Self {
        let mut rcont = [[0.0; D]; 5];
        for i in 0..D {
            rcont[0][i] = y0[i];
            rcont[1][i] = y1[i] - y0[i];
        }
        Self { x0, h: x1 - x0, rcont }
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    pub fn eval(&self, x: f64) -> [f64; D] {
        let s = (x - self.x0) / self.h;
        let s1 = 1.0 - s;
        let [c1, c2, c3, c4, c5] = &self.rcont;
        std::array::from_fn(|i| c1[i] + s * (c2[i] + s1 * (c3[i] + s * (c4[i] + s1 * c5[i]))))
    }

    /// Derivative of the interpolant with respect to `x`.
    pub fn eval_derivative(&self, x: f64) -> [f64; D] {
        let s = (x - self.x0) / self.h;
        let s1 = 1.0 - s;
        let [_, c2, c3, c4, c5] = &self.rcont;
        std::array::from_fn(|i| {
            let a = c4[i] + s1 * c5[i];
            let b = c3[i] + s * a;
            let db = a - s * c5[i];
            let c = c2[i] + s1 * b;
            let dc = -b + s1 * db;
            (c + s * dc) / self.h
        })
    }
}

/// Accepted grid and dense output of an integration.
#[derive(Debug, Clone)]
pub struct DenseSolution<const D: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; D]>,
    pub steps: Vec<DenseStep<D>>,
}

impl<const D: usize> DenseSolution<D> {
    /// Index of the step whose interval contains `x` (clamped to the ends).
    pub fn locate(&self, x: f64) -> Option<&DenseStep<D>> {
        if self.steps.is_empty() {
            return None;
        }
        let idx = self.steps.partition_point(|st| st.x1() < x);
        Some(&self.steps[idx.min(self.steps.len() - 1)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    Underflow { x: f64, h: f64 },
    TooManySteps { x: f64, steps: usize },
    NonFinite { x: f64 },
}

impl StepFailure {
    pub fn position(&self) -> f64 {
        match *self {
            StepFailure::Underflow { x, .. }
            | StepFailure::TooManySteps { x, .. }
            | StepFailure::NonFinite { x } => x,
        }
    }

    pub fn reason(&self) -> String {
        match self {
            StepFailure::Underflow { h, .. } => format!("step size underflow (h = {h:e})"),
            StepFailure::TooManySteps { steps, .. } => {
                format!("step budget of {steps} steps exhausted")
            }
            StepFailure::NonFinite { .. } => "non-finite state".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    /// Integrates `y' = f(x, y)` from `(x0, y0)` to `x_end > x0`.
    ///
    /// `admissible(y_old, y_new)` may veto a trial step that passed the error
    /// test; the step is then halved.
    pub fn integrate<const D: usize, F, G>(
        &self,
        f: F,
        x0: f64,
        y0: [f64; D],
        x_end: f64,
        mut admissible: G,
    ) -> Result<DenseSolution<D>, StepFailure>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        G: FnMut(&[f64; D], &[f64; D]) -> bool,
    {
        let mut sol = DenseSolution {
            xs: vec![x0],
            ys: vec![y0],
            steps: Vec::new(),
        };
        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);
        if !all_finite(&k1) {
            return Err(StepFailure::NonFinite { x });
        }
        let span = x_end - x0;
        let mut h = self.initial_step(&f, x, &y, &k1, span);
        let mut err_old = 1e-4_f64;
        let mut rejected_last = false;
        let mut n_steps = 0usize;

        while x < x_end {
            if n_steps >= self.max_steps {
                return Err(StepFailure::TooManySteps { x, steps: n_steps });
            }
            n_steps += 1;
            let last = x + 1.01 * h >= x_end;
            if last {
                h = x_end - x;
            }
            if h < self.h_min {
                return Err(StepFailure::Underflow { x, h });
            }

            let stage = |base: &[f64; D], coeffs: &[(f64, &[f64; D])]| -> [f64; D] {
                std::array::from_fn(|i| {
                    base[i] + h * coeffs.iter().map(|(a, k)| a * k[i]).sum::<f64>()
                })
            };
            let k2 = f(x + C2 * h, &stage(&y, &[(A21, &k1)]));
            let k3 = f(x + C3 * h, &stage(&y, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * h, &stage(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                x + C5 * h,
                &stage(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                x + h,
                &stage(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = stage(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let x_new = if last { x_end } else { x + h };
            let k7 = f(x_new, &y_new);

            let finite = all_finite(&y_new) && all_finite(&k7);
            let err = if finite {
                let mut acc = 0.0;
                for i in 0..D {
                    let e = h
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]);
                    let sk = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    acc += (e / sk).powi(2);
                }
                (acc / D as f64).sqrt()
            } else {
                f64::INFINITY
            };

            if err <= 1.0 && admissible(&y, &y_new) {
                let mut rcont = [[0.0; D]; 5];
                for i in 0..D {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - h * k7[i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                sol.steps.push(DenseStep { x0: x, h: x_new - x, rcont });
                sol.xs.push(x_new);
                sol.ys.push(y_new);

                // PI step-size control
                let err = err.max(1e-10);
                let mut fac = SAFETY * err.powf(-0.17) * err_old.powf(0.04);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                err_old = err;
                rejected_last = false;
                x = x_new;
                y = y_new;
                k1 = k7;
                h = (h * fac).min(self.h_max);
            } else {
                if !finite && !x.is_finite() {
                    return Err(StepFailure::NonFinite { x });
                }
                let fac = if err.is_finite() && err > 1.0 {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 0.5)
                } else {
                    0.5
                };
                h *= fac;
                rejected_last = true;
            }
        }
        Ok(sol)
    }

    /// Starting step following Hairer, Norsett & Wanner.
    fn initial_step<const D: usize, F>(
        &self,
        f: &F,
        x: f64,
        y: &[f64; D],
        k1: &[f64; D],
        span: f64,
    ) -> f64
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let sk: [f64; D] = std::array::from_fn(|i| self.atol + self.rtol * y[i].abs());
        let norm = |v: &[f64; D]| -> f64 {
            (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / D as f64).sqrt()
        };
        let dnf = norm(k1);
        let dny = norm(y);
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6 * span
        } else {
            0.01 * dny / dnf
        };
        h = h.min(self.h_max).min(span);
        let y1: [f64; D] = std::array::from_fn(|i| y[i] + h * k1[i]);
        let k2 = f(x + h, &y1);
        if !all_finite(&k2) {
            return (h * 1e-3).max(self.h_min * 2.0);
        }
        let diff: [f64; D] = std::array::from_fn(|i| k2[i] - k1[i]);
        let der2 = norm(&diff) / h;
        let der12 = dnf.max(der2);
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.h_max).min(span)
    }
}

fn all_finite<const D: usize>(v: &[f64; D]) -> bool {
    v.iter().all(|x| x.is_finite())
}
