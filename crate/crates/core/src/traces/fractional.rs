//! Quadratic forms of the Gagliardo double integral
//! ∬ (f(y) − f(x))² / (y − x)² restricted to |y − x| ≤ screen, for
//! piecewise-linear f.
//!
//! For a panel pair P = [a,b], Q = [c,d] with Q to the right of P the
//! integral is taken in u = y − x. At fixed u the x-integrand is quadratic,
//! so Simpson's rule is exact, and the remaining u-integrand is a cubic over
//! u² between the breakpoints {c−a, c−b, d−a, d−b}. Segments starting at
//! u = 0 only occur for touching panels, where continuity of the hat
//! functions makes the integrand a polynomial; the others are integrated in
//! ln u.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use crate::mesh::TraceGrid;

/// Screening radius used for components that were originally unbounded.
pub const DEFAULT_SCREEN: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    dofs: [usize; 2],
}

struct Rules {
    poly: Vec<(f64, f64)>,
    log: Vec<(f64, f64)>,
}

impl Rules {
    fn new() -> Rules {
        let zip = |(x, w): (Vec<f64>, Vec<f64>)| x.into_iter().zip(w).collect();
        Rules { poly: zip(gauss_legendre(4)), log: zip(gauss_legendre(8)) }
    }
}

/// Local contribution of one panel pair: up to four merged dofs and the
/// matrix ∬ d dᵀ / u² with d(x, y) = Σ_i (φ_i(y) − φ_i(x)) e_i.
struct Local {
    dofs: [usize; 4],
    n: usize,
    m: [[f64; 4]; 4],
}

impl Local {
    fn slot(&mut self, dof: usize) -> usize {
        match self.dofs[..self.n].iter().position(|&d| d == dof) {
            Some(s) => s,
            None => {
                self.dofs[self.n] = dof;
                self.n += 1;
                self.n - 1
            }
        }
    }
}

fn pair(p: &Panel, q: &Panel, screen: f64, rules: &Rules) -> Option<Local> {
    let (a, b, c, d) = (p.a, p.b, q.a, q.b);
    let u_min = (c - b).max(0.0);
    let u_max = (d - a).min(screen);
    if u_min >= u_max {
        return None;
    }
    let mut local = Local { dofs: [0; 4], n: 0, m: [[0.0; 4]; 4] };
    let s = [
        local.slot(p.dofs[0]),
        local.slot(p.dofs[1]),
        local.slot(q.dofs[0]),
        local.slot(q.dofs[1]),
    ];
    let (hp, hq) = (b - a, d - c);
    let dvec = |x: f64, y: f64| {
        let xi = (x - a) / hp;
        let eta = (y - c) / hq;
        let mut v = [0.0; 4];
        v[s[0]] -= 1.0 - xi;
        v[s[1]] -= xi;
        v[s[2]] += 1.0 - eta;
        v[s[3]] += eta;
        v
    };
    // ∫_x d dᵀ dx at fixed u, exact by Simpson
    let inner = |u: f64, m: &mut [[f64; 4]; 4], w: f64| {
        let lo = a.max(c - u);
        let hi = b.min(d - u);
        if hi <= lo {
            return;
        }
        let len = hi - lo;
        for (x, sw) in [(lo, 1.0), (0.5 * (lo + hi), 4.0), (hi, 1.0)] {
            let v = dvec(x, x + u);
            let f = w * sw * len / 6.0 / (u * u);
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += f * v[i] * v[j];
                }
            }
        }
    };
    let mut breaks = vec![u_min, u_max];
    for t in [c - a, c - b, d - a, d - b] {
        if t > u_min && t < u_max {
            breaks.push(t);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut m = [[0.0; 4]; 4];
    for w in breaks.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u0 <= 0.0 {
            for &(t, wt) in &rules.poly {
                let u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * t;
                inner(u, &mut m, 0.5 * (u1 - u0) * wt);
            }
        } else {
            let (v0, v1) = (u0.ln(), u1.ln());
            let pieces = (v1 - v0).ceil().max(1.0) as usize;
            let dv = (v1 - v0) / pieces as f64;
            for k in 0..pieces {
                let lo = v0 + k as f64 * dv;
                for &(t, wt) in &rules.log {
                    let v = lo + 0.5 * dv * (1.0 + t);
                    let u = v.exp();
                    inner(u, &mut m, 0.5 * dv * wt * u);
                }
            }
        }
    }
    // y > x half only, the mirror pair contributes the same
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e *= 2.0;
        }
    }
    local.m = m;
    Some(local)
}

/// Sums the local matrices of all panel pairs, panels sorted by abscissa.
fn assemble(panels: &[Panel], n: usize, screen: f64) -> DMatrix<f64> {
    let rules = Rules::new();
    let rows: Vec<Vec<Local>> = (0..panels.len())
        .into_par_iter()
        .map(|i| {
            (i..panels.len())
                .filter_map(|j| {
                    pair(&panels[i], &panels[j], screen, &rules)
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for local in rows.iter().flatten() {
        for i in 0..local.n {
            for j in 0..local.n {
                m[(local.dofs[i], local.dofs[j])] += local.m[i][j];
            }
        }
    }
    let mt = m.transpose();
    let mut m = (m + mt) * 0.5;
    for i in 0..n {
        m[(i, i)] = 0.0;
        m[(i, i)] = -m.row(i).sum();
    }
    m
}

fn panels_of(x: &[f64], offset: usize) -> Vec<Panel> {
    x.windows(2)
        .enumerate()
        .map(|(k, w)| Panel { a: w[0], b: w[1], dofs: [offset + k, offset + k + 1] })
        .collect()
}

fn check_abscissae(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument("empty interval".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("abscissae must be strictly increasing".into()));
    }
    Ok(())
}

/// Screened Ḣ^{1/2} semi-norm of a piecewise-linear function on one
/// interval, stored as its Gram matrix over the nodal values.
#[derive(Clone, Debug)]
pub struct ScreenedSeminorm {
    pub screen: f64,
    matrix: DMatrix<f64>,
}

impl ScreenedSeminorm {
    pub fn new(x: &[f64], screen: f64) -> Result<ScreenedSeminorm> {
        check_abscissae(x)?;
        if !(screen > 0.0) {
            return Err(Error::InvalidArgument(format!("screening radius must be positive, got {screen}")));
        }
        let panels = panels_of(x, 0);
        let matrix = assemble(&panels, x.len(), screen);
        Ok(ScreenedSeminorm { screen, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn squared(&self, f: &[f64]) -> f64 {
        quadratic(&self.matrix, f)
    }

    pub fn eval(&self, f: &[f64]) -> f64 {
        self.squared(f).sqrt()
    }
}

/// `fᵀ Q f` written as `−Σ_{i<j} Q_ij (f_i − f_j)²`, valid because the
/// rows of Q sum to zero, and exact on constants.
fn quadratic(m: &DMatrix<f64>, f: &[f64]) -> f64 {
    assert_eq!(m.nrows(), f.len(), "field length does not match the form");
    let mut s = 0.0;
    for j in 0..f.len() {
        let col = m.column(j);
        for i in 0..j {
            let d = f[i] - f[j];
            s -= col[i] * d * d;
        }
    }
    s.max(0.0)
}

/// One-shot evaluation of the screened semi-norm.
pub fn seminorm_screened(x: &[f64], f: &[f64], screen: f64) -> Result<f64> {
    if f.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: f.len() });
    }
    Ok(ScreenedSeminorm::new(x, screen)?.eval(f))
}

/// Unscreened Gagliardo semi-norm over the whole free surface, pairs of
/// points on different components included.
#[derive(Clone, Debug)]
pub struct GagliardoForm {
    matrix: DMatrix<f64>,
}

impl GagliardoForm {
    pub fn new(grid: &TraceGrid) -> GagliardoForm {
        let panels: Vec<Panel> = (0..grid.num_components())
            .flat_map(|j| panels_of(&grid.components[j].x, grid.range(j).start))
            .collect();
        let matrix = assemble(&panels, grid.len(), f64::INFINITY);
        GagliardoForm { matrix }
    }

    pub fn squared(&self, f: &[f64]) -> f64 {
        quadratic(&self.matrix, f)
    }

    pub fn eval(&self, f: &[f64]) -> f64 {
        self.squared(f).sqrt()
    }
}

/// Screening radius of each component: unscreened when the interval is
/// genuinely bounded, `screen` when it is the truncation of a half-line.
pub fn component_screens(grid: &TraceGrid, screen: f64) -> Vec<f64> {
    grid.components
        .iter()
        .map(|c| if c.interval.originally_unbounded { screen } else { f64::INFINITY })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gauss_on;
    use proptest::prelude::*;

    /// Unscreened ∬ over all panel pairs computed independently of the
    /// u-splitting: separated pairs by tensor Gauss, a panel with itself by
    /// its constant integrand, and touching pairs by reducing the degree-0
    /// homogeneous integrand around the shared node to 1D integrals.
    fn oracle(x: &[f64], f: &[f64]) -> f64 {
        let (gx, gw) = gauss_legendre(30);
        let line = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| -> f64 {
            (0..gx.len()).map(|k| gw[k] * g(a + 0.5 * (b - a) * (1.0 + gx[k]))).sum::<f64>() * 0.5 * (b - a)
        };
        let n = x.len() - 1;
        let slope = |i: usize| (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
        let mut total = 0.0;
        for i in 0..n {
            total += slope(i).powi(2) * (x[i + 1] - x[i]).powi(2);
            for j in i + 1..n {
                let pair = if j == i + 1 {
                    // x = b − s, y = b + t with s ∈ [0, A], t ∈ [0, B]
                    let (sp, sq) = (slope(i), slope(j));
                    let (big_a, big_b) = (x[i + 1] - x[i], x[j + 1] - x[j]);
                    let g = |w: f64| ((sp + sq * w) / (1.0 + w)).powi(2);
                    let h = |v: f64| ((sp * v + sq) / (1.0 + v)).powi(2);
                    0.5 * big_a * big_a * line(0.0, big_b / big_a, &g) + 0.5 * big_b * big_b * line(0.0, big_a / big_b, &h)
                } else {
                    let mut acc = 0.0;
                    for (xs, wx) in gauss_on(&(gx.clone(), gw.clone()), x[i], x[i + 1]) {
                        for (ys, wy) in gauss_on(&(gx.clone(), gw.clone()), x[j], x[j + 1]) {
                            let fx = f[i] + slope(i) * (xs - x[i]);
                            let fy = f[j] + slope(j) * (ys - x[j]);
                            acc += wx * wy * ((fy - fx) / (ys - xs)).powi(2);
                        }
                    }
                    acc
                };
                total += 2.0 * pair;
            }
        }
        total
    }

    #[test]
    fn linear_examples() {
        let x: Vec<f64> = (0..=7).map(|k| (k as f64 / 7.0).powf(1.3)).collect();
        let f = x.clone();
        assert!((seminorm_screened(&x, &f, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((seminorm_screened(&x, &f, 5.0).unwrap() - 1.0).abs() < 1e-12);
        let x2: Vec<f64> = (0..=9).map(|k| 2.0 * k as f64 / 9.0).collect();
        let v = seminorm_screened(&x2, &x2, 1.0).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-12, "{v}");
        // band |y − x| ≤ r inside the square of side L has area L² − (L − r)²
        let r = 0.37;
        let v = seminorm_screened(&x2, &x2, r).unwrap();
        assert!((v * v - (4.0 - (2.0 - r) * (2.0 - r))).abs() < 1e-12);
        let c = vec![3.5; x2.len()];
        assert!(seminorm_screened(&x2, &c, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(seminorm_screened(&[0.0], &[1.0], 1.0).is_err());
        assert!(ScreenedSeminorm::new(&[0.0, 1.0], 0.0).is_err());
        assert!(ScreenedSeminorm::new(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn kinked_fields_match_adaptive_oracle() {
        let x = [0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
        for f in [[0.0, 1.0, -0.5, 0.2, 0.9, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]] {
            let q = ScreenedSeminorm::new(&x, 10.0).unwrap().squared(&f);
            let o = oracle(&x, &f);
            assert!((q - o).abs() <= 1e-10 * o, "{q} vs {o}");
        }
    }

    #[test]
    fn matrix_is_symmetric_psd_with_constant_kernel() {
        let x: Vec<f64> = (0..=12).map(|k| (k as f64 / 12.0).powi(2) * 3.0).collect();
        let q = ScreenedSeminorm::new(&x, 0.8).unwrap();
        let m = q.matrix();
        assert!((m - m.transpose()).amax() < 1e-14);
        let ones = vec![1.0; x.len()];
        let row = m * nalgebra::DVector::from_vec(ones);
        assert!(row.amax() < 1e-12 * m.amax());
        let eig = m.clone().symmetric_eigenvalues();
        assert!(eig.min() > -1e-12 * m.amax());
    }

    proptest! {
        #[test]
        fn screen_monotone_and_exact_when_large(vals in proptest::collection::vec(-1.0f64..1.0, 6..12)) {
            let n = vals.len();
            let x: Vec<f64> = (0..n).map(|k| k as f64 * 0.3 + 0.01 * (k * k) as f64).collect();
            let len = x[n - 1] - x[0];
            let small = seminorm_screened(&x, &vals, 0.2).unwrap();
            let mid = seminorm_screened(&x, &vals, 0.6).unwrap();
            let full = seminorm_screened(&x, &vals, len).unwrap();
            let beyond = seminorm_screened(&x, &vals, 3.0 * len).unwrap();
            prop_assert!(small <= mid * (1.0 + 1e-12));
            prop_assert!(mid <= full * (1.0 + 1e-12));
            prop_assert!((full - beyond).abs() <= 1e-12 * beyond.max(1e-300));
            // shifting by a constant leaves the semi-norm unchanged
            let shifted: Vec<f64> = vals.iter().map(|v| v + 4.0).collect();
            let s2 = seminorm_screened(&x, &shifted, 0.6).unwrap();
            prop_assert!((s2 - mid).abs() <= 1e-9 * mid.max(1e-12));
        }
    }

    #[test]
    fn gagliardo_splits_into_blocks_and_cross_terms() {
        let c0 = [0.0, 0.4, 1.0];
        let c1 = [2.0, 2.5, 3.0];
        // cross term for f = 0 on the first and 1 on the second component:
        // 2 ∫₀¹∫₂³ (y − x)⁻² = 2 ln(4/3)
        let grid = crate::traces::tests::two_component_grid(&c0, &c1);
        let g = GagliardoForm::new(&grid);
        let f = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let expect = 2.0 * (4.0f64 / 3.0).ln();
        assert!((g.squared(&f) - expect).abs() < 1e-9, "{} vs {expect}", g.squared(&f));
    }
}
