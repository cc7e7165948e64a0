//! Classical fixed-step fourth-order Runge–Kutta.

use nalgebra::SMatrix;

/// A state that lives in a vector space: `self + h · rate`.
pub trait OdeState: Sized {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self;
}

impl<const R: usize, const C: usize> OdeState for SMatrix<f64, R, C> {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        self + rate * h
    }
}

impl OdeState for crate::dynamics::RobotState {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        Self::new(self.q + rate.q * h, self.qdot + rate.qdot * h)
    }
}

impl OdeState for crate::reference::ReferenceState {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        crate::reference::ReferenceState::add_scaled(self, rate, h)
    }
}

pub fn rk4_step<S, F>(x: &S, t: f64, h: f64, mut f: F) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let never = |t: f64, x: &S| -> Result<S, std::convert::Infallible> { Ok(f(t, x)) };
    match try_rk4_step(x, t, h, never) {
        Ok(v) => v,
        Err(e) => match e {},
    }
}

pub fn try_rk4_step<S, E, F>(x: &S, t: f64, h: f64, mut f: F) -> Result<S, E>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S, E>,
{
    let half = 0.5 * h;
    let k1 = f(t, x)?;
    let k2 = f(t + half, &x.add_scaled(&k1, half))?;
    let k3 = f(t + half, &x.add_scaled(&k2, half))?;
    let k4 = f(t + h, &x.add_scaled(&k3, h))?;
    Ok(x.add_scaled(&k1, h / 6.0)
        .add_scaled(&k2, h / 3.0)
        .add_scaled(&k3, h / 3.0)
        .add_scaled(&k4, h / 6.0))
}
