use num_complex::Complex64 as C64;

/// Below this |Δ|·T the moments are summed as a power series.
const SERIES_CUTOFF: f64 = 1.0;

/// Longest frequency list for which quadratic forms use the F×F moment table.
const CLOSED_FORM_LIMIT: usize = 600;

/// Θ_p(Δ) = ∫₀^T t^p e^{iΔt} dt for p = 0, 1, 2.
pub(crate) fn moments(delta: f64, horizon: f64) -> [C64; 3] {
    let x = delta * horizon;
    let mut out = [C64::new(0.0, 0.0); 3];
    if x.abs() < SERIES_CUTOFF {
        // Σ_m (iΔ)^m T^{p+m+1} / (m!(p+m+1))
        for (p, slot) in out.iter_mut().enumerate() {
            let mut term = C64::new(horizon.powi(p as i32 + 1), 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..40 {
                acc += term / (p + m + 1) as f64;
                term *= C64::new(0.0, x) / (m + 1) as f64;
                if term.norm() < 1e-18 * acc.norm() {
                    break;
                }
            }
            *slot = acc;
        }
        return out;
    }
    let e = C64::from_polar(1.0, x);
    let inv = C64::new(0.0, -1.0 / delta);
    out[0] = (e - 1.0) * inv;
    out[1] = (e * horizon - out[0]) * inv;
    out[2] = (e * horizon * horizon - out[1] * 2.0) * inv;
    out
}

/// Rows r(t) = Σ_f (a_f + b_f t) e^{−iν_f t} on [0, T] over a shared
/// frequency list.
#[derive(Clone, Debug)]
pub struct ExpRows {
    pub horizon: f64,
    pub freqs: Vec<f64>,
    /// Constant coefficients, one row per function.
    pub constant: Vec<Vec<C64>>,
    /// Coefficients of t.
    pub linear: Vec<Vec<C64>>,
}

impl ExpRows {
    pub fn len(&self) -> usize {
        self.constant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constant.is_empty()
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.freqs.iter().map(|&nu| C64::from_polar(1.0, -nu * t)).collect()
    }

    pub fn eval(&self, t: f64) -> Vec<C64> {
        let ph = self.phases(t);
        self.constant
            .iter()
            .zip(&self.linear)
            .map(|(a, b)| a.iter().zip(b).zip(&ph).map(|((a, b), e)| (a + b * t) * e).sum())
            .collect()
    }

    /// r′(t), exactly.
    pub fn derivative(&self, t: f64) -> Vec<C64> {
        let ph = self.phases(t);
        self.constant
            .iter()
            .zip(&self.linear)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(&ph)
                    .zip(&self.freqs)
                    .map(|(((a, b), e), &nu)| (b - C64::new(0.0, nu) * (a + b * t)) * e)
                    .sum()
            })
            .collect()
    }

    /// Rows Σ_j w[r][j]·row_j.
    pub fn combine(&self, weights: &[Vec<C64>]) -> ExpRows {
        let f = self.freqs.len();
        let mix = |src: &[Vec<C64>]| -> Vec<Vec<C64>> {
            weights
                .iter()
                .map(|w| {
                    let mut out = vec![C64::new(0.0, 0.0); f];
                    for (wj, row) in w.iter().zip(src) {
                        if *wj != C64::new(0.0, 0.0) {
                            for (o, c) in out.iter_mut().zip(row) {
                                *o += c * wj;
                            }
                        }
                    }
                    out
                })
                .collect()
        };
        ExpRows {
            horizon: self.horizon,
            freqs: self.freqs.clone(),
            constant: mix(&self.constant),
            linear: mix(&self.linear),
        }
    }

    /// ∫₀^T e^{iμt} r(t) dt for every row.
    pub fn moment(&self, mu: f64) -> Vec<C64> {
        let th: Vec<[C64; 3]> = self.freqs.iter().map(|&nu| moments(mu - nu, self.horizon)).collect();
        self.constant
            .iter()
            .zip(&self.linear)
            .map(|(a, b)| a.iter().zip(b).zip(&th).map(|((a, b), m)| a * m[0] + b * m[1]).sum())
            .collect()
    }

    /// ∫₀^T Σ_{r,s} W_rs conj(r(t)) s(t) dt for a real symmetric W (row-major),
    /// or Σ_r W_rr ∫|r|² when `weights` has one entry per row.
    ///
    /// Closed form through the moments for short frequency lists; composite
    /// Gauss–Legendre on the evaluated rows otherwise.
    pub fn quadratic(&self, weights: &[f64]) -> f64 {
        if self.freqs.len() <= CLOSED_FORM_LIMIT {
            self.quadratic_closed(weights)
        } else {
            self.quadratic_numeric(weights)
        }
    }

    pub fn quadratic_numeric(&self, weights: &[f64]) -> f64 {
        let n = self.len();
        let diagonal = weights.len() == n;
        assert!(
            diagonal || weights.len() == n * n,
            "weights must be diagonal or a full matrix"
        );
        let band = self.freqs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let panels = 1 + (2.0 * band * self.horizon / 12.0).ceil() as usize;
        let (gx, gw) = super::gl_nodes(24);
        let width = self.horizon / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = width * (p as f64 + 0.5);
            for (x, w) in gx.iter().zip(&gw) {
                let v = self.eval(mid + 0.5 * width * x);
                let mut acc = 0.0;
                if diagonal {
                    for r in 0..n {
                        acc += weights[r] * v[r].norm_sqr();
                    }
                } else {
                    for r in 0..n {
                        for s in 0..n {
                            acc += weights[r * n + s] * (v[r].conj() * v[s]).re;
                        }
                    }
                }
                total += acc * w * 0.5 * width;
            }
        }
        total
    }

    pub fn quadratic_closed(&self, weights: &[f64]) -> f64 {
        let f = self.freqs.len();
        let mut th = vec![[C64::new(0.0, 0.0); 3]; f * f];
        for (i, &a) in self.freqs.iter().enumerate() {
            for (j, &b) in self.freqs.iter().enumerate() {
                // conj(e^{−iaT}) e^{−ibt} = e^{i(a−b)t}
                th[i * f + j] = moments(a - b, self.horizon);
            }
        }
        let pair = |r: usize, s: usize| -> C64 {
            let (a0, a1) = (&self.constant[r], &self.linear[r]);
            let (b0, b1) = (&self.constant[s], &self.linear[s]);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..f {
                let (ca0, ca1) = (a0[i].conj(), a1[i].conj());
                if ca0 == C64::new(0.0, 0.0) && ca1 == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..f {
                    let m = &th[i * f + j];
                    acc += ca0 * (b0[j] * m[0] + b1[j] * m[1]) + ca1 * (b0[j] * m[1] + b1[j] * m[2]);
                }
            }
            acc
        };
        let n = self.len();
        if weights.len() == n {
            return (0..n)
                .filter(|&r| weights[r] != 0.0)
                .map(|r| weights[r] * pair(r, r).re)
                .sum();
        }
        assert_eq!(weights.len(), n * n, "weights must be diagonal or a full matrix");
        let mut total = 0.0;
        for r in 0..n {
            for s in 0..n {
                let w = weights[r * n + s];
                if w != 0.0 {
                    total += w * pair(r, s).re;
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gl_integral(f: impl Fn(f64) -> C64, a: f64, b: f64, panels: usize) -> C64 {
        // 5-point Gauss–Legendre per panel
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189_1,
            0.478_628_670_499_366_5,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for (x, w) in X.iter().zip(W) {
                acc += f(mid + 0.5 * h * x) * (0.5 * h * w);
            }
        }
        acc
    }

    #[test]
    fn moments_match_quadrature_on_both_branches() {
        for &delta in &[0.0, 1e-9, 0.7, 3.0, 3.5, -40.0, 900.0] {
            let t = 0.3;
            let m = moments(delta, t);
            for p in 0..3 {
                let q = gl_integral(|s| C64::from_polar(s.powi(p as i32), delta * s), 0.0, t, 400);
                assert!((m[p] - q).norm() < 1e-13, "Δ = {delta}, p = {p}: {} vs {q}", m[p]);
            }
        }
    }

    #[test]
    fn derivative_and_norms_agree_with_direct_evaluation() {
        let rows = ExpRows {
            horizon: 0.5,
            freqs: vec![2.0, -7.5, 30.0],
            constant: vec![
                vec![C64::new(1.0, 0.5), C64::new(0.0, -2.0), C64::new(0.3, 0.0)],
                vec![C64::new(0.2, 0.0); 3],
            ],
            linear: vec![
                vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
                vec![C64::new(0.0, 0.0); 3],
            ],
        };
        let h = 1e-5;
        let t = 0.21;
        let (up, dn) = (rows.eval(t + h), rows.eval(t - h));
        for (r, d) in rows.derivative(t).iter().enumerate() {
            let fd = (up[r] - dn[r]) / (2.0 * h);
            assert!((d - fd).norm() < 1e-6 * d.norm().max(1.0));
        }
        let direct = gl_integral(
            |s| C64::new(rows.eval(s).iter().map(|z| z.norm_sqr()).sum(), 0.0),
            0.0,
            0.5,
            200,
        )
        .re;
        assert!((rows.quadratic(&[1.0, 1.0]) - direct).abs() < 1e-12 * direct);
        let w = [1.0, 0.25, 0.25, 2.0];
        let direct = gl_integral(
            |s| {
                let v = rows.eval(s);
                C64::new(
                    v[0].norm_sqr() + 0.5 * (v[0].conj() * v[1]).re + 2.0 * v[1].norm_sqr(),
                    0.0,
                )
            },
            0.0,
            0.5,
            200,
        )
        .re;
        assert!((rows.quadratic(&w) - direct).abs() < 1e-12 * direct);
        assert!((rows.quadratic_numeric(&w) - direct).abs() < 1e-12 * direct);
        let mu = 5.0;
        let m = rows.moment(mu);
        let q = gl_integral(|s| C64::from_polar(1.0, mu * s) * rows.eval(s)[0], 0.0, 0.5, 200);
        assert!((m[0] - q).norm() < 1e-13);
    }
}
