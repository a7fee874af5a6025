use crate::error::Result;
use crate::matrix::CMatrix;

/// A matrix-valued function of time that can be sampled from several threads.
pub trait Trajectory: Sync {
    fn sample(&self, t: f64) -> Result<CMatrix>;
}

/// Adapts a closure into a [`Trajectory`].
pub struct FnTrajectory<F>(pub F);

impl<F> Trajectory for FnTrajectory<F>
where
    F: Fn(f64) -> CMatrix + Sync,
{
    fn sample(&self, t: f64) -> Result<CMatrix> {
        Ok((self.0)(t))
    }
}

impl<T: Trajectory + ?Sized> Trajectory for &T {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        (**self).sample(t)
    }
}

impl<T: Trajectory + ?Sized> Trajectory for Box<T> {
    fn sample(&self, t: f64) -> Result<CMatrix> {
        (**self).sample(t)
    }
}
