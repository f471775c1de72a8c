//! Primal-dual path-following on the homogeneous self-dual embedding.
//!
//! The problem is brought to the form
//!
//! ```text
//! minimize c'x  subject to  G x + s = h,  s in K
//! ```
//!
//! with `G = -[vec F_1 .. vec F_n]` and `h = vec F_0`, equilibrated, and
//! solved with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//! The embedding variables `tau`, `kappa` give infeasibility certificates
//! without a phase-one problem.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::cones::{self, dot, Op, Scaling, SQRT2};
use crate::error::ConicError;
use crate::problem::{Cone, ConicProblem};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;

const STEP_FRACTION: f64 = 0.99;
const RUIZ_PASSES: usize = 15;
const REFINE_STEPS: usize = 20;
const BACKTRACK_STEPS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalTrouble,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    /// Primal point (for infeasible/unbounded outcomes, the last iterate).
    pub x: Vec<f64>,
    /// `c . x` in problem units.
    pub objective: f64,
    /// Dual objective `-<F0, Z>` in problem units.
    pub dual_objective: f64,
    /// `|primal - dual| / (1 + |primal|)`, the larger of the value on the
    /// equilibrated problem and in problem units.
    pub gap: f64,
    /// Relative primal residual on the equilibrated problem.
    pub primal_residual: f64,
    /// Relative dual residual on the equilibrated problem.
    pub dual_residual: f64,
    pub iterations: usize,
    pub wall_time: f64,
    /// Stacked slack `F0 + sum x_k F_k`, vectorized per block (PSD blocks in svec form).
    pub slack: Vec<f64>,
    /// Stacked dual variable, same layout as `slack`.
    pub dual: Vec<f64>,
    /// Start offset of each block inside `slack` / `dual`.
    pub block_offsets: Vec<usize>,
}

impl SolveResult {
    /// `<S_b, Z_b>` for block `b`.
    pub fn block_complementarity(&self, b: usize) -> f64 {
        let lo = self.block_offsets[b];
        let hi = self
            .block_offsets
            .get(b + 1)
            .copied()
            .unwrap_or(self.slack.len());
        dot(&self.slack[lo..hi], &self.dual[lo..hi])
    }

    /// Dual block as a dense symmetric matrix (PSD) or column vector.
    pub fn dual_block(&self, cone: Cone, b: usize) -> DMatrix<f64> {
        let lo = self.block_offsets[b];
        let v = &self.dual[lo..lo + cone.vec_len()];
        match cone {
            Cone::Psd(n) => cones::smat(v, n),
            _ => DMatrix::from_column_slice(v.len(), 1, v),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    pub equilibrate: bool,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            equilibrate: true,
            verbose: false,
        }
    }
}

struct BlockData {
    cone: Cone,
    off: usize,
    len: usize,
    vars: Vec<usize>,
    g: DMatrix<f64>,
}

struct Data {
    n: usize,
    m: usize,
    blocks: Vec<BlockData>,
    h: Vec<f64>,
    c: Vec<f64>,
    degree: usize,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
    cost_scale: f64,
}

fn vec_pos(cone: Cone, r: usize, c: usize) -> (usize, f64) {
    match cone {
        Cone::Psd(n) => {
            if r == c {
                (cones::svec_index(n, r, r), 1.0)
            } else {
                (cones::svec_index(n, c.max(r), c.min(r)), SQRT2)
            }
        }
        _ => (r, 1.0),
    }
}

impl Data {
    fn build(p: &ConicProblem, equilibrate: bool) -> Self {
        let mut blocks = Vec::with_capacity(p.blocks.len());
        let mut h = Vec::new();
        let mut off = 0;
        for b in &p.blocks {
            let len = b.cone.vec_len();
            let mut hb = vec![0.0; len];
            for (&(r, c), &v) in &b.constant {
                let (pos, f) = vec_pos(b.cone, r, c);
                hb[pos] += f * v;
            }
            h.extend(hb);
            let vars: Vec<usize> = b.coeffs.keys().copied().collect();
            let mut g = DMatrix::zeros(len, vars.len());
            for (j, var) in vars.iter().enumerate() {
                for (&(r, c), &v) in &b.coeffs[var] {
                    let (pos, f) = vec_pos(b.cone, r, c);
                    g[(pos, j)] -= f * v;
                }
            }
            blocks.push(BlockData {
                cone: b.cone,
                off,
                len,
                vars,
                g,
            });
            off += len;
        }
        let degree = p.blocks.iter().map(|b| b.cone.degree()).sum();
        let mut d = Data {
            n: p.n_vars,
            m: off,
            blocks,
            h,
            c: p.objective.clone(),
            degree,
            col_scale: vec![1.0; p.n_vars],
            row_scale: vec![1.0; off],
            cost_scale: 1.0,
        };
        if equilibrate {
            d.equilibrate();
        }
        d
    }

    /// Ruiz-style scaling: per-column factors on `x`, one positive factor per
    /// SOC/PSD block and per orthant row, so every cone is mapped onto itself.
    fn equilibrate(&mut self) {
        let n = self.n;
        for _ in 0..RUIZ_PASSES {
            let mut colmax = vec![0.0f64; n];
            for b in &self.blocks {
                for (j, &var) in b.vars.iter().enumerate() {
                    let m = b.g.column(j).amax();
                    colmax[var] = colmax[var].max(m);
                }
            }
            let dcol: Vec<f64> = colmax
                .iter()
                .map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 })
                .collect();
            for (k, f) in dcol.iter().enumerate() {
                self.col_scale[k] *= f;
            }
            for b in &mut self.blocks {
                for (j, &var) in b.vars.iter().enumerate() {
                    b.g.column_mut(j).scale_mut(dcol[var]);
                }
                match b.cone {
                    Cone::Nonneg(_) => {
                        for r in 0..b.len {
                            let m = b.g.row(r).amax();
                            if m > 0.0 {
                                let f = 1.0 / m.sqrt();
                                b.g.row_mut(r).scale_mut(f);
                                self.row_scale[b.off + r] *= f;
                            }
                        }
                    }
                    Cone::Psd(size) => {
                        // diagonal congruence D F D: entry (i, j) scales by d_i d_j
                        let pairs = svec_pairs(size);
                        let mut rowmax = vec![0.0f64; size];
                        for (pos, &(i, j)) in pairs.iter().enumerate() {
                            let m = b.g.row(pos).amax();
                            rowmax[i] = rowmax[i].max(m);
                            rowmax[j] = rowmax[j].max(m);
                        }
                        let dr: Vec<f64> = rowmax
                            .iter()
                            .map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 })
                            .collect();
                        for (pos, &(i, j)) in pairs.iter().enumerate() {
                            let f = dr[i] * dr[j];
                            b.g.row_mut(pos).scale_mut(f);
                            self.row_scale[b.off + pos] *= f;
                        }
                    }
                    Cone::Soc(_) => {
                        let m = b.g.amax();
                        if m > 0.0 {
                            let f = 1.0 / m.sqrt();
                            b.g.scale_mut(f);
                            for r in 0..b.len {
                                self.row_scale[b.off + r] *= f;
                            }
                        }
                    }
                }
            }
        }
        for (hv, e) in self.h.iter_mut().zip(&self.row_scale) {
            *hv *= e;
        }
        for (cv, d) in self.c.iter_mut().zip(&self.col_scale) {
            *cv *= d;
        }
        let cmax = self.c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if cmax > 0.0 {
            self.cost_scale = 1.0 / cmax;
            for cv in &mut self.c {
                *cv *= self.cost_scale;
            }
        }
    }

    fn g_mul(&self, x: &[f64], out: &mut [f64]) {
        for b in &self.blocks {
            let o = &mut out[b.off..b.off + b.len];
            o.iter_mut().for_each(|v| *v = 0.0);
            for (j, &var) in b.vars.iter().enumerate() {
                let xv = x[var];
                if xv != 0.0 {
                    for (r, g) in b.g.column(j).iter().enumerate() {
                        o[r] += g * xv;
                    }
                }
            }
        }
    }

    fn gt_mul(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for b in &self.blocks {
            let zb = &z[b.off..b.off + b.len];
            for (j, &var) in b.vars.iter().enumerate() {
                out[var] += dot(b.g.column(j).as_slice(), zb);
            }
        }
    }
}

/// `(row, col)` of every svec position.
fn svec_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for c in 0..n {
        for r in c..n {
            out.push((r, c));
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

struct Kkt<'a> {
    data: &'a Data,
    scalings: &'a [Scaling],
    /// Upper-triangular factor with `R^T R = G^T H^{-1} G + reg I`.
    r: DMatrix<f64>,
}

impl<'a> Kkt<'a> {
    /// Factor the normal matrix through a QR decomposition of the stacked
    /// scaled columns `W^{-T} G`, which avoids squaring their condition number.
    fn new(data: &'a Data, scalings: &'a [Scaling]) -> Option<Self> {
        let n = data.n;
        let m: usize = data.blocks.iter().filter(|b| !b.vars.is_empty()).map(|b| b.len).sum();
        let mut stacked = DMatrix::<f64>::zeros(m + n, n);
        let mut row = 0;
        for (b, sc) in data.blocks.iter().zip(scalings) {
            if b.vars.is_empty() {
                continue;
            }
            let gh = sc.winvt_columns(b.cone, &b.g);
            for (j, &var) in b.vars.iter().enumerate() {
                stacked.view_mut((row, var), (b.len, 1)).copy_from(&gh.column(j));
            }
            row += b.len;
        }
        let dmax = (0..n).map(|j| stacked.column(j).norm_squared()).fold(1.0, f64::max);
        let reg = (1e-15 * dmax).sqrt();
        for j in 0..n {
            stacked[(m + j, j)] = reg;
        }
        let r = stacked.qr().r();
        if (0..n).any(|i| !(r[(i, i)].abs() > 0.0) || !r[(i, i)].is_finite()) {
            return None;
        }
        Some(Self { data, scalings, r })
    }

    fn normal_solve(&self, rhs: &[f64]) -> DVector<f64> {
        let b = DVector::from_column_slice(rhs);
        let y = self.r.tr_solve_upper_triangular(&b).expect("nonsingular factor");
        self.r.solve_upper_triangular(&y).expect("nonsingular factor")
    }

    /// `out = H^{-1} v` with `H = W^T W`.
    fn hinv(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        for (b, sc) in self.data.blocks.iter().zip(self.scalings) {
            let r = b.off..b.off + b.len;
            sc.apply(b.cone, Op::Winvt, &v[r.clone()], &mut tmp[r.clone()]);
            sc.apply(b.cone, Op::Winv, &tmp[r.clone()], &mut out[r]);
        }
    }

    /// Solve `[0 G'; G -H] [x; z] = [rx; rz]`.
    fn solve(&self, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.data;
        let mut t = vec![0.0; d.m];
        self.hinv(rz, &mut t);
        let mut rhs = vec![0.0; d.n];
        d.gt_mul(&t, &mut rhs);
        for (r, v) in rhs.iter_mut().zip(rx) {
            *r += v;
        }
        let mut x = self.normal_solve(&rhs);
        let mut gx = vec![0.0; d.m];
        let mut hg = vec![0.0; d.m];
        let mut back = vec![0.0; d.n];
        for _ in 0..2 {
            d.g_mul(x.as_slice(), &mut gx);
            self.hinv(&gx, &mut hg);
            d.gt_mul(&hg, &mut back);
            let res: Vec<f64> = rhs.iter().zip(&back).map(|(a, b)| a - b).collect();
            if norm(&res) <= 1e-15 * (1.0 + norm(&rhs)) {
                break;
            }
            x += self.normal_solve(&res);
        }
        d.g_mul(x.as_slice(), &mut gx);
        for (g, r) in gx.iter_mut().zip(rz) {
            *g -= r;
        }
        let mut z = vec![0.0; d.m];
        self.hinv(&gx, &mut z);
        (x.as_slice().to_vec(), z)
    }
}

/// One search direction of the embedded Newton system; `st`, `zt` are the
/// scaled slack and dual components `W^{-T} ds`, `W dz`.
struct Direction {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
    st: Vec<f64>,
    zt: Vec<f64>,
}

/// Newton solves at a fixed scaling. Right-hand sides are given as the
/// residuals `d_x, d_z, d_tau` to be driven to zero, plus the scaled
/// complementarity term `u = lambda \ d_s` and `d_kappa`.
struct Newton<'a> {
    d: &'a Data,
    kkt: &'a Kkt<'a>,
    scalings: &'a [Scaling],
    tau: f64,
    kappa: f64,
    x1: Vec<f64>,
    z1: Vec<f64>,
    wz1: Vec<f64>,
    denom: f64,
}

impl<'a> Newton<'a> {
    fn new(d: &'a Data, kkt: &'a Kkt<'a>, scalings: &'a [Scaling], tau: f64, kappa: f64) -> Self {
        let neg_c: Vec<f64> = d.c.iter().map(|v| -v).collect();
        let (x1, z1) = kkt.solve(&neg_c, &d.h);
        // c'x1 + h'z1 = -|W z1|^2; the explicit form keeps the sign exact
        let wz1 = Self::blockwise(d, scalings, Op::W, &z1);
        let denom = -dot(&wz1, &wz1) - kappa / tau;
        Self {
            d,
            kkt,
            scalings,
            tau,
            kappa,
            x1,
            z1,
            wz1,
            denom,
        }
    }

    fn blockwise(d: &Data, scalings: &[Scaling], op: Op, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (b, sc) in d.blocks.iter().zip(scalings) {
            let r = b.off..b.off + b.len;
            sc.apply(b.cone, op, &v[r.clone()], &mut out[r]);
        }
        out
    }

    fn direction(&self, dx: &[f64], dz: &[f64], dt: f64, u: &[f64], dk: f64) -> Direction {
        let d = self.d;
        let wtu = Self::blockwise(d, self.scalings, Op::Wt, u);
        let rhs_x: Vec<f64> = dx.iter().map(|v| -v).collect();
        let rhs_z: Vec<f64> = dz.iter().zip(&wtu).map(|(a, b)| b - a).collect();
        let (x2, z2) = self.kkt.solve(&rhs_x, &rhs_z);
        // c'x2 + h'z2 rewritten through the KKT equations in scaled quantities,
        // which stay bounded while x2 may not
        let wz2 = Self::blockwise(d, self.scalings, Op::W, &z2);
        let cross = dot(&self.x1, &rhs_x) - dot(&self.z1, &rhs_z) - 2.0 * dot(&self.wz1, &wz2);
        let tau = (-dt + dk / self.tau - cross) / self.denom;
        let x: Vec<f64> = x2.iter().zip(&self.x1).map(|(a, b)| a + tau * b).collect();
        let z: Vec<f64> = z2.iter().zip(&self.z1).map(|(a, b)| a + tau * b).collect();
        let zt = Self::blockwise(d, self.scalings, Op::W, &z);
        let st: Vec<f64> = u.iter().zip(&zt).map(|(a, b)| -a - b).collect();
        let s = Self::blockwise(d, self.scalings, Op::Wt, &st);
        let kappa = -(dk + self.kappa * tau) / self.tau;
        Direction {
            x,
            s,
            z,
            tau,
            kappa,
            st,
            zt,
        }
    }

    /// Direction with iterative refinement on the three linear equations;
    /// the complementarity rows hold exactly by construction.
    fn refined(&self, dx: &[f64], dz: &[f64], dt: f64, u: &[f64], dk: f64) -> Direction {
        let d = self.d;
        let mut dir = self.direction(dx, dz, dt, u, dk);
        let zero = vec![0.0; d.m];
        let scale = 1.0 + norm(dx) + norm(dz) + dt.abs();
        let residual = |dir: &Direction| {
            let mut e1 = vec![0.0; d.n];
            d.gt_mul(&dir.z, &mut e1);
            for i in 0..d.n {
                e1[i] += d.c[i] * dir.tau + dx[i];
            }
            let mut e2 = vec![0.0; d.m];
            d.g_mul(&dir.x, &mut e2);
            for i in 0..d.m {
                e2[i] += dir.s[i] - d.h[i] * dir.tau + dz[i];
            }
            let e3 = dir.kappa + dot(&d.c, &dir.x) + dot(&d.h, &dir.z) + dt;
            let size = norm(&e1) + norm(&e2) + e3.abs();
            (e1, e2, e3, size)
        };
        let (mut e1, mut e2, mut e3, mut size) = residual(&dir);
        // Refine while it keeps paying off; near the boundary the factor is a
        // poor preconditioner and several rounds may be needed.
        for _ in 0..REFINE_STEPS {
            if size <= 1e-14 * scale {
                break;
            }
            let c = self.direction(&e1, &e2, e3, &zero, 0.0);
            let mut next = Direction {
                x: dir.x.iter().zip(&c.x).map(|(a, b)| a + b).collect(),
                z: dir.z.iter().zip(&c.z).map(|(a, b)| a + b).collect(),
                s: dir.s.iter().zip(&c.s).map(|(a, b)| a + b).collect(),
                st: dir.st.iter().zip(&c.st).map(|(a, b)| a + b).collect(),
                zt: dir.zt.iter().zip(&c.zt).map(|(a, b)| a + b).collect(),
                tau: dir.tau + c.tau,
                kappa: dir.kappa + c.kappa,
            };
            let (n1, n2, n3, nsize) = residual(&next);
            if !(nsize < size) {
                break;
            }
            std::mem::swap(&mut dir, &mut next);
            let stalled = nsize > 0.5 * size;
            (e1, e2, e3, size) = (n1, n2, n3, nsize);
            if stalled && size <= 1e-10 * scale {
                break;
            }
        }
        dir
    }
}

/// Solve with explicit tolerance and iteration cap.
pub fn solve(p: &ConicProblem, tol: f64, max_iter: usize) -> Result<SolveResult, ConicError> {
    solve_with(
        p,
        &Settings {
            tol,
            max_iter,
            ..Settings::default()
        },
    )
}

pub fn solve_with(p: &ConicProblem, settings: &Settings) -> Result<SolveResult, ConicError> {
    p.validate()?;
    if !(1e-10..=1e-2).contains(&settings.tol) {
        return Err(ConicError::Malformed(format!(
            "tolerance {} outside [1e-10, 1e-2]",
            settings.tol
        )));
    }
    let start = Instant::now();
    let data = Data::build(p, settings.equilibrate);
    let mut state = Ipm::init(&data);
    let status = state.run(&data, settings);
    Ok(state.finish(p, &data, status, start.elapsed().as_secs_f64()))
}

struct Ipm {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
    iterations: usize,
    pres: f64,
    dres: f64,
    gap: f64,
}

impl Ipm {
    fn init(d: &Data) -> Self {
        let (m, n) = (d.m, d.n);
        let ident: Vec<Scaling> = d
            .blocks
            .iter()
            .map(|b| {
                let mut e = vec![0.0; b.len];
                cones::identity(b.cone, &mut e);
                Scaling::new(b.cone, &e, &e).expect("identity is interior").0
            })
            .collect();
        let mut x = vec![0.0; n];
        let mut s = vec![0.0; m];
        let mut z = vec![0.0; m];
        if let Some(kkt) = Kkt::new(d, &ident) {
            // least-squares primal point and least-norm dual point
            let zero_n = vec![0.0; n];
            let (xp, zp) = kkt.solve(&zero_n, &d.h);
            x = xp;
            s = zp.iter().map(|v| -v).collect();
            let neg_c: Vec<f64> = d.c.iter().map(|v| -v).collect();
            let (_, zd) = kkt.solve(&neg_c, &vec![0.0; m]);
            z = zd;
        }
        Self::shift_interior(d, &mut s);
        Self::shift_interior(d, &mut z);
        Self {
            x,
            s,
            z,
            tau: 1.0,
            kappa: 1.0,
            iterations: 0,
            pres: f64::INFINITY,
            dres: f64::INFINITY,
            gap: f64::INFINITY,
        }
    }

    fn shift_interior(d: &Data, v: &mut [f64]) {
        let mut shift = f64::NEG_INFINITY;
        for b in &d.blocks {
            shift = shift.max(cones::interior_shift(b.cone, &v[b.off..b.off + b.len]));
        }
        if d.blocks.is_empty() {
            return;
        }
        if shift >= -1e-8 * norm(v).max(1.0) {
            let mut e = vec![0.0; v.len()];
            for b in &d.blocks {
                cones::identity(b.cone, &mut e[b.off..b.off + b.len]);
            }
            for (vi, ei) in v.iter_mut().zip(&e) {
                *vi += (1.0 + shift) * ei;
            }
        }
    }

    fn run(&mut self, d: &Data, settings: &Settings) -> Status {
        let (m, n) = (d.m, d.n);
        let tol = settings.tol;
        let hnorm = norm(&d.h).max(1.0);
        let cnorm = norm(&d.c).max(1.0);
        let mut rx = vec![0.0; n];
        let mut rz = vec![0.0; m];
        let mut e = vec![0.0; m];
        for b in &d.blocks {
            cones::identity(b.cone, &mut e[b.off..b.off + b.len]);
        }
        loop {
            // residuals
            d.gt_mul(&self.z, &mut rx);
            for (r, c) in rx.iter_mut().zip(&d.c) {
                *r += c * self.tau;
            }
            d.g_mul(&self.x, &mut rz);
            for i in 0..m {
                rz[i] += self.s[i] - d.h[i] * self.tau;
            }
            let cx = dot(&d.c, &self.x);
            let hz = dot(&d.h, &self.z);
            let rt = self.kappa + cx + hz;
            let sz = dot(&self.s, &self.z);

            let pcost = cx / self.tau;
            let dcost = -hz / self.tau;
            self.pres = norm(&rz) / self.tau / hnorm;
            self.dres = norm(&rx) / self.tau / cnorm;
            let scaled_gap = (pcost - dcost).abs() / (1.0 + pcost.abs());
            let unit_gap = (pcost - dcost).abs() / (d.cost_scale + pcost.abs());
            self.gap = scaled_gap.max(unit_gap);
            let comp = sz / (self.tau * self.tau) / (1.0 + pcost.abs());
            if settings.verbose {
                eprintln!(
                    "{:3} pcost {pcost:+.6e} dcost {dcost:+.6e} pres {:.1e} dres {:.1e} gap {:.1e} comp {comp:.1e} tau {:.1e}",
                    self.iterations, self.pres, self.dres, self.gap, self.tau
                );
            }
            if self.pres <= tol && self.dres <= tol && self.gap <= tol && comp <= tol {
                return Status::Optimal;
            }
            if hz < 0.0 {
                let mut gz = vec![0.0; n];
                d.gt_mul(&self.z, &mut gz);
                if norm(&gz) / (-hz) / cnorm <= tol {
                    return Status::Infeasible;
                }
            }
            if cx < 0.0 {
                let mut gxs = vec![0.0; m];
                d.g_mul(&self.x, &mut gxs);
                for i in 0..m {
                    gxs[i] += self.s[i];
                }
                if norm(&gxs) / (-cx) / hnorm <= tol {
                    return Status::Unbounded;
                }
            }
            if self.iterations >= settings.max_iter {
                return Status::MaxIter;
            }
            self.iterations += 1;

            // scaling
            let mut scalings = Vec::with_capacity(d.blocks.len());
            let mut lambda = vec![0.0; m];
            for b in &d.blocks {
                let r = b.off..b.off + b.len;
                match Scaling::new(b.cone, &self.s[r.clone()], &self.z[r.clone()]) {
                    Some((sc, l)) => {
                        lambda[r].copy_from_slice(&l);
                        scalings.push(sc);
                    }
                    None => return Status::NumericalTrouble,
                }
            }
            let Some(kkt) = Kkt::new(d, &scalings) else {
                return Status::NumericalTrouble;
            };
            let newton = Newton::new(d, &kkt, &scalings, self.tau, self.kappa);
            let mu = (sz + self.tau * self.kappa) / (d.degree as f64 + 1.0);

            let mut sigma = 0.0;
            let mut corr_s = vec![0.0; m];
            let mut corr_k = 0.0;
            let mut step = None;
            for pass in 0..2 {
                let f = 1.0 - sigma;
                let mut ds = vec![0.0; m];
                for b in &d.blocks {
                    let r = b.off..b.off + b.len;
                    cones::jordan(b.cone, &lambda[r.clone()], &lambda[r.clone()], &mut ds[r]);
                }
                for i in 0..m {
                    ds[i] += corr_s[i] - sigma * mu * e[i];
                }
                let dk = self.kappa * self.tau + corr_k - sigma * mu;
                let mut u = vec![0.0; m];
                for b in &d.blocks {
                    let r = b.off..b.off + b.len;
                    cones::jordan_div(b.cone, &lambda[r.clone()], &ds[r.clone()], &mut u[r]);
                }
                let rhs_x: Vec<f64> = rx.iter().map(|v| f * v).collect();
                let rhs_z: Vec<f64> = rz.iter().map(|v| f * v).collect();
                let dir = newton.refined(&rhs_x, &rhs_z, f * rt, &u, dk);

                let mut amax = f64::INFINITY;
                for b in &d.blocks {
                    let r = b.off..b.off + b.len;
                    amax = cones::max_step(b.cone, &lambda[r.clone()], &dir.st[r.clone()], amax);
                    amax = cones::max_step(b.cone, &lambda[r.clone()], &dir.zt[r], amax);
                }
                if dir.tau < 0.0 {
                    amax = amax.min(-self.tau / dir.tau);
                }
                if dir.kappa < 0.0 {
                    amax = amax.min(-self.kappa / dir.kappa);
                }
                if pass == 0 {
                    let alpha = amax.min(1.0);
                    sigma = (1.0 - alpha).powi(3).clamp(0.0, 1.0);
                    for b in &d.blocks {
                        let r = b.off..b.off + b.len;
                        cones::jordan(b.cone, &dir.st[r.clone()], &dir.zt[r.clone()], &mut corr_s[r]);
                    }
                    corr_k = dir.kappa * dir.tau;
                } else {
                    step = Some(((STEP_FRACTION * amax).min(1.0), dir));
                }
            }
            let (mut alpha, dir) = step.expect("corrector pass ran");
            let Direction { x: dx, s: ds, z: dz, tau: dtau, kappa: dkappa, .. } = dir;
            // The step is computed in scaled space; back off if rounding puts
            // the unscaled point on the boundary.
            let mut accepted = false;
            for _ in 0..BACKTRACK_STEPS {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    break;
                }
                let s_new: Vec<f64> = self.s.iter().zip(&ds).map(|(a, b)| a + alpha * b).collect();
                let z_new: Vec<f64> = self.z.iter().zip(&dz).map(|(a, b)| a + alpha * b).collect();
                let interior = d.blocks.iter().all(|b| {
                    let r = b.off..b.off + b.len;
                    cones::is_interior(b.cone, &s_new[r.clone()]) && cones::is_interior(b.cone, &z_new[r])
                });
                let tau = self.tau + alpha * dtau;
                let kappa = self.kappa + alpha * dkappa;
                if interior && tau > 0.0 && kappa > 0.0 {
                    for i in 0..n {
                        self.x[i] += alpha * dx[i];
                    }
                    self.s = s_new;
                    self.z = z_new;
                    self.tau = tau;
                    self.kappa = kappa;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || self.x.iter().any(|v| !v.is_finite()) {
                return Status::NumericalTrouble;
            }
        }
    }

    fn finish(&self, p: &ConicProblem, d: &Data, status: Status, wall_time: f64) -> SolveResult {
        // Certificates are rays: report them without dividing by tau.
        let div = match status {
            Status::Infeasible | Status::Unbounded => 1.0,
            _ => self.tau,
        };
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(&d.col_scale)
            .map(|(v, f)| v / div * f)
            .collect();
        let slack: Vec<f64> = self
            .s
            .iter()
            .zip(&d.row_scale)
            .map(|(v, f)| v / div / f)
            .collect();
        let dual: Vec<f64> = self
            .z
            .iter()
            .zip(&d.row_scale)
            .map(|(v, f)| v / div * f / d.cost_scale)
            .collect();
        let objective = p.objective_value(&x);
        let dual_objective = -dot(&d.h, &self.z) / div / d.cost_scale;
        SolveResult {
            status,
            x,
            objective,
            dual_objective,
            gap: self.gap,
            primal_residual: self.pres,
            dual_residual: self.dres,
            iterations: self.iterations,
            wall_time,
            slack,
            dual,
            block_offsets: d.blocks.iter().map(|b| b.off).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Block;

    #[test]
    fn scalar_lower_bound() {
        // minimize x s.t. x - 1 >= 0
        let mut p = ConicProblem::with_anonymous_vars(1);
        p.objective[0] = 1.0;
        let mut b = Block::nonneg(1, "x>=1");
        b.add_coeff_at(0, 0, 1.0);
        b.add_constant_at(0, -1.0);
        p.push(b);
        let r = solve(&p, 1e-9, 100).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-8, "{}", r.x[0]);
    }

    #[test]
    fn infeasible_orthant() {
        // x >= 1 and -x >= 0
        let mut p = ConicProblem::with_anonymous_vars(1);
        p.objective[0] = 1.0;
        let mut b = Block::nonneg(2, "l");
        b.add_coeff_at(0, 0, 1.0);
        b.add_constant_at(0, -1.0);
        b.add_coeff_at(0, 1, -1.0);
        p.push(b);
        let r = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(r.status, Status::Infeasible);
    }

    #[test]
    fn unbounded_orthant() {
        // minimize x s.t. -x >= 0... x <= 0 and no lower bound
        let mut p = ConicProblem::with_anonymous_vars(1);
        p.objective[0] = 1.0;
        let mut b = Block::nonneg(1, "l");
        b.add_coeff_at(0, 0, -1.0);
        p.push(b);
        let r = solve(&p, 1e-8, 100).unwrap();
        assert_eq!(r.status, Status::Unbounded);
    }

    #[test]
    fn rejects_tolerance_out_of_range() {
        let p = ConicProblem::with_anonymous_vars(1);
        assert!(solve(&p, 1e-12, 10).is_err());
        assert!(solve(&p, 0.1, 10).is_err());
    }
}
