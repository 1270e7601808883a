use serde::{Deserialize, Serialize};

use crate::error::{BecError, Result};

/// One-dimensional interface profile `m(x2)` (Dirac mass or Coriolis parameter).
///
/// A profile interpolates between two asymptotic values as `x2 -> -inf` and
/// `x2 -> +inf`. Evaluation is defined for every real `x2`; tabulated profiles
/// clamp to their end values outside the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// Spatially constant value (no interface).
    Constant { value: f64 },
    /// Step profile `amplitude * sgn(x2)` with the convention `sgn(0) = 0`.
    Sign { amplitude: f64 },
    /// Smooth interface
    /// `(a_plus + a_minus)/2 + (a_plus - a_minus)/2 * tanh(x2 / length_scale)`.
    Tanh {
        asymptote_minus: f64,
        asymptote_plus: f64,
        length_scale: f64,
    },
    /// Piecewise-linear interpolation of `(x2, value)` samples on a strictly
    /// increasing grid; constant extension outside the sampled range.
    Tabulated { x2: Vec<f64>, values: Vec<f64> },
}

/// `ln(cosh(t))` computed without overflow for large `|t|`.
fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Profile {
    /// Validates structural invariants (finite entries, strictly increasing
    /// tabulated grid, positive length scale).
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(BecError::InvalidConfig { reason });
        match self {
            Profile::Constant { value } => {
                if !value.is_finite() {
                    return fail("constant profile value must be finite".into());
                }
            }
            Profile::Sign { amplitude } => {
                if !amplitude.is_finite() || *amplitude == 0.0 {
                    return fail("sign profile amplitude must be finite and nonzero".into());
                }
            }
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                length_scale,
            } => {
                if !asymptote_minus.is_finite() || !asymptote_plus.is_finite() {
                    return fail("tanh profile asymptotes must be finite".into());
                }
                if *length_scale <= 0.0 || !length_scale.is_finite() {
                    return fail("tanh profile length_scale must be positive".into());
                }
            }
            Profile::Tabulated { x2, values } => {
                if x2.len() < 2 {
                    return fail("tabulated profile needs at least two samples".into());
                }
                if x2.len() != values.len() {
                    return fail(format!(
                        "tabulated profile has {} grid points but {} values",
                        x2.len(),
                        values.len()
                    ));
                }
                if x2.iter().chain(values.iter()).any(|v| !v.is_finite()) {
                    return fail("tabulated profile entries must be finite".into());
                }
                if x2.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("tabulated profile grid must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// Evaluates the profile at `x2`.
    pub fn eval(&self, x2: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sign { amplitude } => {
                if x2 > 0.0 {
                    *amplitude
                } else if x2 < 0.0 {
                    -*amplitude
                } else {
                    0.0
                }
            }
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                length_scale,
            } => {
                let mid = 0.5 * (asymptote_plus + asymptote_minus);
                let amp = 0.5 * (asymptote_plus - asymptote_minus);
                mid + amp * (x2 / length_scale).tanh()
            }
            Profile::Tabulated { x2: grid, values } => {
                if x2 <= grid[0] {
                    return values[0];
                }
                if x2 >= grid[grid.len() - 1] {
                    return values[values.len() - 1];
                }
                let hi = grid.partition_point(|&g| g <= x2);
                let lo = hi - 1;
                let t = (x2 - grid[lo]) / (grid[hi] - grid[lo]);
                values[lo] + t * (values[hi] - values[lo])
            }
        }
    }

    /// Derivative of the profile at `x2`.
    ///
    /// The step profile returns 0 (its derivative vanishes away from the jump and
    /// the jump itself is not representable pointwise). Tabulated profiles return
    /// the segment slope, averaging the two adjacent slopes exactly at interior
    /// nodes and 0 outside the table.
    pub fn derivative(&self, x2: f64) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Sign { .. } => 0.0,
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                length_scale,
            } => {
                let amp = 0.5 * (asymptote_plus - asymptote_minus);
                let c = (x2 / length_scale).cosh();
                amp / (length_scale * c * c)
            }
            Profile::Tabulated { x2: grid, values } => {
                let n = grid.len();
                if x2 < grid[0] || x2 > grid[n - 1] {
                    return 0.0;
                }
                let slope = |seg: usize| {
                    (values[seg + 1] - values[seg]) / (grid[seg + 1] - grid[seg])
                };
                // Exactly at an interior node, average the two neighboring slopes.
                if let Some(i) = grid.iter().position(|&g| g == x2) {
                    if i == 0 {
                        return slope(0);
                    }
                    if i == n - 1 {
                        return slope(n - 2);
                    }
                    return 0.5 * (slope(i - 1) + slope(i));
                }
                let hi = grid.partition_point(|&g| g <= x2);
                slope(hi - 1)
            }
        }
    }

    /// Antiderivative `F(x2) = \int_0^{x2} m(t) dt`, exact for every variant
    /// (the tabulated profile is piecewise linear, so trapezoids are exact).
    pub fn antiderivative_from_zero(&self, x2: f64) -> f64 {
        match self {
            Profile::Constant { value } => value * x2,
            Profile::Sign { amplitude } => amplitude * x2.abs(),
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                length_scale,
            } => {
                let mid = 0.5 * (asymptote_plus + asymptote_minus);
                let amp = 0.5 * (asymptote_plus - asymptote_minus);
                mid * x2 + amp * length_scale * ln_cosh(x2 / length_scale)
            }
            Profile::Tabulated { .. } => {
                if x2 == 0.0 {
                    return 0.0;
                }
                let (a, b, sign) = if x2 > 0.0 {
                    (0.0, x2, 1.0)
                } else {
                    (x2, 0.0, -1.0)
                };
                sign * self.integrate_piecewise(a, b)
            }
        }
    }

    /// Integral of a tabulated profile over `[a, b]` with `a <= b`, exact on the
    /// piecewise-linear interpolant with constant extension.
    fn integrate_piecewise(&self, a: f64, b: f64) -> f64 {
        let (grid, _values) = match self {
            Profile::Tabulated { x2, values } => (x2, values),
            _ => unreachable!("integrate_piecewise is only used for tabulated profiles"),
        };
        // Breakpoints: a, b, and every grid node strictly between them.
        let mut total = 0.0;
        let mut left = a;
        let mut left_val = self.eval(a);
        for &g in grid.iter() {
            if g > left && g < b {
                let gv = self.eval(g);
                total += 0.5 * (left_val + gv) * (g - left);
                left = g;
                left_val = gv;
            }
        }
        total += 0.5 * (left_val + self.eval(b)) * (b - left);
        total
    }

    /// Asymptotic value as `x2 -> -inf`.
    pub fn asymptote_minus(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sign { amplitude } => -*amplitude,
            Profile::Tanh {
                asymptote_minus, ..
            } => *asymptote_minus,
            Profile::Tabulated { values, .. } => values[0],
        }
    }

    /// Asymptotic value as `x2 -> +inf`.
    pub fn asymptote_plus(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sign { amplitude } => *amplitude,
            Profile::Tanh { asymptote_plus, .. } => *asymptote_plus,
            Profile::Tabulated { values, .. } => values[values.len() - 1],
        }
    }

    /// Gap scale `min(|m_-|, |m_+|)` set by the smaller asymptotic magnitude.
    pub fn gap_scale(&self) -> f64 {
        self.asymptote_minus().abs().min(self.asymptote_plus().abs())
    }

    /// True when the asymptotic values have strictly opposite signs, i.e. the
    /// profile describes a sign-changing interface.
    pub fn is_interface(&self) -> bool {
        self.asymptote_minus() * self.asymptote_plus() < 0.0
    }

    /// True when the profile is monotone non-decreasing everywhere.
    pub fn is_non_decreasing(&self) -> bool {
        match self {
            Profile::Constant { .. } => true,
            Profile::Sign { amplitude } => *amplitude > 0.0,
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                ..
            } => asymptote_plus >= asymptote_minus,
            Profile::Tabulated { values, .. } => values.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    /// True when the profile is monotone non-increasing everywhere.
    pub fn is_non_increasing(&self) -> bool {
        match self {
            Profile::Constant { .. } => true,
            Profile::Sign { amplitude } => *amplitude < 0.0,
            Profile::Tanh {
                asymptote_minus,
                asymptote_plus,
                ..
            } => asymptote_plus <= asymptote_minus,
            Profile::Tabulated { values, .. } => values.windows(2).all(|w| w[0] >= w[1]),
        }
    }

    /// Parses a two-column CSV (`x2,value` per line) into a tabulated profile.
    ///
    /// Blank lines and lines starting with `#` are skipped; a single non-numeric
    /// header line is tolerated.
    pub fn tabulated_from_csv(text: &str) -> Result<Profile> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(BecError::InvalidConfig {
                    reason: format!("csv line {}: expected two columns", lineno + 1),
                });
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    grid.push(x);
                    values.push(v);
                }
                _ if grid.is_empty() => continue, // tolerate a header line
                _ => {
                    return Err(BecError::InvalidConfig {
                        reason: format!("csv line {}: could not parse numbers", lineno + 1),
                    });
                }
            }
        }
        let profile = Profile::Tabulated { x2: grid, values };
        profile.validate()?;
        Ok(profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn centered_tanh() -> Profile {
        Profile::Tanh {
            asymptote_minus: -1.0,
            asymptote_plus: 1.0,
            length_scale: 1.0,
        }
    }

    #[test]
    fn sign_and_centered_tanh_vanish_at_origin() {
        let s = Profile::Sign { amplitude: 2.0 };
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(centered_tanh().eval(0.0), 0.0);
    }

    #[test]
    fn centered_tanh_matches_plain_tanh() {
        let p = centered_tanh();
        for &x in &[-3.0, -0.7, 0.0, 0.2, 5.0] {
            assert_relative_eq!(p.eval(x), x.tanh(), epsilon = 1e-15);
        }
    }

    #[test]
    fn asymmetric_tanh_hits_asymptotes_and_midpoint() {
        let p = Profile::Tanh {
            asymptote_minus: -0.5,
            asymptote_plus: 3.0,
            length_scale: 2.0,
        };
        assert_relative_eq!(p.eval(-1e3), -0.5, epsilon = 1e-12);
        assert_relative_eq!(p.eval(1e3), 3.0, epsilon = 1e-12);
        assert_relative_eq!(p.eval(0.0), 1.25, epsilon = 1e-15);
        assert_relative_eq!(p.gap_scale(), 0.5);
        assert!(p.is_interface());
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let p = Profile::Tabulated {
            x2: vec![-3.0, 3.0],
            values: vec![-1.0, 1.0],
        };
        p.validate().unwrap();
        assert_relative_eq!(p.eval(0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.eval(1.5), 0.5, epsilon = 1e-15);
        assert_eq!(p.eval(-10.0), -1.0);
        assert_eq!(p.eval(10.0), 1.0);
        assert_eq!(p.asymptote_minus(), -1.0);
        assert_eq!(p.asymptote_plus(), 1.0);
    }

    #[test]
    fn tabulated_validation_rejects_bad_grids() {
        let bad = Profile::Tabulated {
            x2: vec![0.0, 0.0, 1.0],
            values: vec![1.0, 2.0, 3.0],
        };
        assert!(bad.validate().is_err());
        let mismatched = Profile::Tabulated {
            x2: vec![0.0, 1.0],
            values: vec![1.0],
        };
        assert!(mismatched.validate().is_err());
    }

    #[test]
    fn ln_cosh_is_stable_for_large_arguments() {
        // ln(cosh(t)) ~ |t| - ln 2 as |t| -> inf.
        assert_relative_eq!(ln_cosh(800.0), 800.0 - std::f64::consts::LN_2);
        assert_relative_eq!(ln_cosh(-800.0), 800.0 - std::f64::consts::LN_2);
        assert_relative_eq!(ln_cosh(0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(ln_cosh(1.3), 1.3f64.cosh().ln(), epsilon = 1e-14);
    }

    #[test]
    fn antiderivative_matches_fine_riemann_sum() {
        let profiles = [
            Profile::Constant { value: 0.7 },
            Profile::Sign { amplitude: 1.5 },
            centered_tanh(),
            Profile::Tanh {
                asymptote_minus: -0.5,
                asymptote_plus: 2.0,
                length_scale: 3.0,
            },
            Profile::Tabulated {
                x2: vec![-4.0, -1.0, 0.5, 2.0],
                values: vec![-1.0, -0.2, 0.3, 1.0],
            },
        ];
        for p in &profiles {
            for &x in &[-6.0, -1.3, 0.0, 0.4, 7.5] {
                let n = 200_000;
                let mut acc = 0.0;
                let dt = x / n as f64;
                for i in 0..n {
                    let t = (i as f64 + 0.5) * dt;
                    acc += p.eval(t) * dt;
                }
                assert_relative_eq!(
                    p.antiderivative_from_zero(x),
                    acc,
                    epsilon = 1e-6,
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn tanh_derivative_matches_finite_differences() {
        let p = Profile::Tanh {
            asymptote_minus: -0.5,
            asymptote_plus: 2.0,
            length_scale: 3.0,
        };
        for &x in &[-2.0, 0.0, 1.7] {
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert_relative_eq!(p.derivative(x), fd, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn tabulated_derivative_uses_segment_slopes() {
        let p = Profile::Tabulated {
            x2: vec![-3.0, 0.0, 3.0],
            values: vec![-1.0, 0.0, 2.0],
        };
        assert_relative_eq!(p.derivative(-1.5), 1.0 / 3.0);
        assert_relative_eq!(p.derivative(1.5), 2.0 / 3.0);
        // Interior node: average of adjacent slopes.
        assert_relative_eq!(p.derivative(0.0), 0.5);
        assert_eq!(p.derivative(100.0), 0.0);
    }

    #[test]
    fn csv_parsing_round_trips() {
        let text = "# interface ramp\nx2,value\n-3.0, -1.0\n3.0, 1.0\n";
        let p = Profile::tabulated_from_csv(text).unwrap();
        assert_eq!(
            p,
            Profile::Tabulated {
                x2: vec![-3.0, 3.0],
                values: vec![-1.0, 1.0],
            }
        );
        assert!(Profile::tabulated_from_csv("1.0\n").is_err());
    }

    #[test]
    fn serde_round_trip_preserves_profiles() {
        let p = Profile::Tanh {
            asymptote_minus: -1.0,
            asymptote_plus: 1.0,
            length_scale: 5.0,
        };
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"kind\":\"tanh\""));
        let back: Profile = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }
}
