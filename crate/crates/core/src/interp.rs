//! Monotone piecewise-cubic Hermite interpolation.
//!
//! Each segment carries its own end slopes so a kink (different left and
//! right derivatives at one node) is represented exactly. Slopes are limited
//! with the Fritsch–Carlson conditions, so monotone data gives a monotone
//! interpolant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Slope at the left and right end of each segment.
    slopes: Vec<(f64, f64)>,
}

impl MonotoneCubic {
    /// Build from nodes and per-segment end slopes (`slopes.len() == x.len() - 1`).
    pub fn with_segment_slopes(x: Vec<f64>, y: Vec<f64>, slopes: Vec<(f64, f64)>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || slopes.len() + 1 != x.len() {
            return Err(Error::invalid("interpolation needs >= 2 nodes and n-1 slope pairs"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("interpolation nodes must be strictly increasing"));
        }
        let slopes = x
            .windows(2)
            .zip(y.windows(2))
            .zip(slopes)
            .map(|((xs, ys), (d0, d1))| limit(ys[1] - ys[0], xs[1] - xs[0], d0, d1))
            .collect();
        Ok(Self { x, y, slopes })
    }

    /// Build from nodes only, with three-point (PCHIP-style) slope estimates.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(Error::invalid("interpolation needs >= 2 nodes"));
        }
        let n = x.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let node_slope = |i: usize| -> f64 {
            if i == 0 {
                secant[0]
            } else if i == n - 1 {
                secant[n - 2]
            } else if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                // harmonic mean of neighbouring secants
                2.0 / (1.0 / secant[i - 1] + 1.0 / secant[i])
            }
        };
        let slopes = (0..n - 1).map(|i| (node_slope(i), node_slope(i + 1))).collect();
        Self::with_segment_slopes(x, y, slopes)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Evaluate; arguments outside the node range are clamped to the end values.
    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= xq) - 1;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = self.slopes[i];
        let h = x1 - x0;
        let s = (xq - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

fn limit(dy: f64, dx: f64, d0: f64, d1: f64) -> (f64, f64) {
    let secant = dy / dx;
    if secant == 0.0 {
        return (0.0, 0.0);
    }
    // Slopes of the wrong sign would create an extremum inside the segment.
    let d0 = if d0 * secant < 0.0 { 0.0 } else { d0 };
    let d1 = if d1 * secant < 0.0 { 0.0 } else { d1 };
    let alpha = d0 / secant;
    let beta = d1 / secant;
    let norm = alpha * alpha + beta * beta;
    if norm > 9.0 {
        let tau = 3.0 / norm.sqrt();
        (tau * alpha * secant, tau * beta * secant)
    } else {
        (d0, d1)
    }
}
