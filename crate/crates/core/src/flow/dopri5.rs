//! Dormand-Prince 5(4) embedded pair with the quartic dense-output
//! interpolant. Coefficients follow Hairer, Norsett & Wanner, "Solving
//! Ordinary Differential Equations I", DOPRI5.

use super::FieldError;

pub const A21: f64 = 1.0 / 5.0;
pub const A31: f64 = 3.0 / 40.0;
pub const A32: f64 = 9.0 / 40.0;
pub const A41: f64 = 44.0 / 45.0;
pub const A42: f64 = -56.0 / 15.0;
pub const A43: f64 = 32.0 / 9.0;
pub const A51: f64 = 19372.0 / 6561.0;
pub const A52: f64 = -25360.0 / 2187.0;
pub const A53: f64 = 64448.0 / 6561.0;
pub const A54: f64 = -212.0 / 729.0;
pub const A61: f64 = 9017.0 / 3168.0;
pub const A62: f64 = -355.0 / 33.0;
pub const A63: f64 = 46732.0 / 5247.0;
pub const A64: f64 = 49.0 / 176.0;
pub const A65: f64 = -5103.0 / 18656.0;
// fifth-order weights (b2 = b7 = 0)
pub const B1: f64 = 35.0 / 384.0;
pub const B3: f64 = 500.0 / 1113.0;
pub const B4: f64 = 125.0 / 192.0;
pub const B5: f64 = -2187.0 / 6784.0;
pub const B6: f64 = 11.0 / 84.0;
// difference to the embedded fourth-order weights
pub const E1: f64 = 71.0 / 57600.0;
pub const E3: f64 = -71.0 / 16695.0;
pub const E4: f64 = 71.0 / 1920.0;
pub const E5: f64 = -17253.0 / 339200.0;
pub const E6: f64 = 22.0 / 525.0;
pub const E7: f64 = -1.0 / 40.0;
// dense-output weights for the fifth interpolation coefficient
pub const D1: f64 = -12715105075.0 / 11282082432.0;
pub const D3: f64 = 87487479700.0 / 32700410799.0;
pub const D4: f64 = -10690763975.0 / 1880347072.0;
pub const D5: f64 = 701980252875.0 / 199316789632.0;
pub const D6: f64 = -1453857185.0 / 822651844.0;
pub const D7: f64 = 69997945.0 / 29380423.0;

/// One trial step: given `y0` and `k1 = f(y0)`, produce `y1`, the first-same-
/// as-last stage `k7 = f(y1)`, the error vector, and the interior stages
/// needed by the dense output.
pub struct TrialStep<const N: usize> {
    pub y1: [f64; N],
    pub k3: [f64; N],
    pub k4: [f64; N],
    pub k5: [f64; N],
    pub k6: [f64; N],
    pub k7: [f64; N],
    pub err: [f64; N],
}

pub fn trial_step<const N: usize>(
    f: &mut impl FnMut(&[f64; N]) -> Result<[f64; N], FieldError>,
    y0: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<TrialStep<N>, FieldError> {
    let mut y = [0.0; N];

    for i in 0..N {
        y[i] = y0[i] + h * A21 * k1[i];
    }
    let k2 = f(&y)?;
    for i in 0..N {
        y[i] = y0[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    let k3 = f(&y)?;
    for i in 0..N {
        y[i] = y0[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    let k4 = f(&y)?;
    for i in 0..N {
        y[i] = y0[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    let k5 = f(&y)?;
    for i in 0..N {
        y[i] = y0[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    let k6 = f(&y)?;
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    let k7 = f(&y1)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(TrialStep { y1, k3, k4, k5, k6, k7, err })
}

/// Dense-output coefficients for one accepted step. Evaluation at the
/// normalized offset `theta` in [0, 1] reproduces `y0`, `y1` and the end
/// derivatives exactly and is locally fifth-order accurate in between.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1()
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let om = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + om * (self.rcont[2][i] + theta * (self.rcont[3][i] + om * self.rcont[4][i])));
        }
        y
    }

    /// Time derivative of the interpolant.
    pub fn eval_deriv(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let mut dy = [0.0; N];
        for i in 0..N {
            let (r2, r3, r4, r5) = (self.rcont[1][i], self.rcont[2][i], self.rcont[3][i], self.rcont[4][i]);
            // d/dtheta of r2 th + r3 th(1-th) + r4 th^2(1-th) + r5 th^2(1-th)^2
            let d = r2
                + r3 * (1.0 - 2.0 * theta)
                + r4 * (2.0 * theta - 3.0 * theta * theta)
                + r5 * (2.0 * theta - 6.0 * theta * theta + 4.0 * theta * theta * theta);
            dy[i] = d / self.h;
        }
        dy
    }
}

pub fn dense_step<const N: usize>(
    t0: f64,
    h: f64,
    y0: &[f64; N],
    k1: &[f64; N],
    trial: &TrialStep<N>,
) -> DenseStep<N> {
    let mut rcont = [[0.0; N]; 5];
    for i in 0..N {
        let ydiff = trial.y1[i] - y0[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y0[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * trial.k7[i] - bspl;
        rcont[4][i] = h
            * (D1 * k1[i] + D3 * trial.k3[i] + D4 * trial.k4[i] + D5 * trial.k5[i] + D6 * trial.k6[i]
                + D7 * trial.k7[i]);
    }
    DenseStep { t0, h, rcont }
}
