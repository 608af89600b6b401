//! Roots `t_n` of `omega(t_n) = (1 + t_n)^n` and the induced sequence
//! `u_n = (1 + t_{n+1})^{n/2}`.
//!
//! `g(t) = ln omega(t) - n ln(1+t)` is strictly decreasing (omega decreases,
//! the power grows), so each equation has at most one root and bisection is
//! safe. Roots are found in log-t space after bracketing by halving; when the
//! root lands on the plateau the closed form `t = d_0^{1/n} - 1` is used
//! instead. Everything is kept in logs until the caller asks for `u_n`
//! itself, which overflows for large `n` long before `log u_n` does.

use crate::majorant::{MajorantError, MajorantOmega};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum EsterleError {
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error("no root for n = {n}: {detail}")]
    NoRoot { n: u32, detail: String },
    #[error("root for n = {n} failed the residual check: {residual} > 10 * {rel_tol}")]
    Unconverged { n: u32, residual: f64, rel_tol: f64 },
    #[error("roots not strictly decreasing: t_{n} = {t} does not lie below t_{n_prev} = {t_prev}")]
    NotDecreasing { n: u32, n_prev: u32, t: f64, t_prev: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Relative residual of the defining equation at `t`:
/// `|omega(t) - (1+t)^n| / (1+t)^n = |exp(g(t)) - 1|`.
fn residual(g: f64) -> f64 {
    g.exp_m1().abs()
}

/// Root of `omega(t) = (1+t)^n` for the constructed majorant, extending the
/// knot list as the bracket descends. The returned root satisfies the
/// residual bound `10 * rel_tol`.
pub fn solve_tn(omega: &mut MajorantOmega, n: u32, rel_tol: f64) -> Result<f64, EsterleError> {
    assert!(n >= 1, "root index starts at 1");
    let (t0, d0) = omega.plateau();
    let nf = f64::from(n);
    let g_plateau = d0.ln() - nf * t0.ln_1p();
    if g_plateau >= 0.0 {
        // root sits on the plateau where omega is the constant d_0
        let root = (d0.ln() / nf).exp_m1();
        if root > omega.seed_base() * (1.0 + 1e-12) {
            return Err(EsterleError::NoRoot {
                n,
                detail: format!(
                    "plateau root {root} lies above the seed base {}",
                    omega.seed_base()
                ),
            });
        }
        return Ok(root);
    }
    // bracket below the plateau: halve until g turns positive
    let mut hi = t0;
    let mut lo = t0;
    loop {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(EsterleError::NoRoot {
                n,
                detail: "bracket descent exhausted precision".into(),
            });
        }
        let g = omega.eval_extending(lo)?.ln() - nf * lo.ln_1p();
        if g == 0.0 {
            return Ok(lo);
        }
        if g > 0.0 {
            break;
        }
        hi = lo;
    }
    let root = bisect_log(
        |t| Ok::<f64, EsterleError>(omega.eval_extending(t)?.ln() - nf * t.ln_1p()),
        lo,
        hi,
    )?;
    let g_root = omega.eval_extending(root)?.ln() - nf * root.ln_1p();
    let res = residual(g_root);
    if res > 10.0 * rel_tol {
        return Err(EsterleError::Unconverged { n, residual: res, rel_tol });
    }
    Ok(root)
}

/// Root of `omega(t) = (1+t)^n` for a synthetic decreasing `omega` given by
/// its log; brackets around `t_hint` by doubling/halving, then bisects.
pub fn solve_tn_fn<F>(log_omega: F, n: u32, t_hint: f64, rel_tol: f64) -> Result<f64, EsterleError>
where
    F: Fn(f64) -> f64,
{
    assert!(n >= 1 && t_hint > 0.0);
    let nf = f64::from(n);
    let g = |t: f64| log_omega(t) - nf * t.ln_1p();
    let (mut lo, mut hi);
    if g(t_hint) > 0.0 {
        // root above the hint
        lo = t_hint;
        hi = t_hint;
        loop {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(EsterleError::NoRoot { n, detail: "no sign change above hint".into() });
            }
            if g(hi) <= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        hi = t_hint;
        lo = t_hint;
        loop {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(EsterleError::NoRoot { n, detail: "no sign change below hint".into() });
            }
            if g(lo) > 0.0 {
                break;
            }
            hi = lo;
        }
    }
    let root = bisect_log(|t| Ok::<f64, EsterleError>(g(t)), lo, hi)?;
    let res = residual(g(root));
    if res > 10.0 * rel_tol {
        return Err(EsterleError::Unconverged { n, residual: res, rel_tol });
    }
    Ok(root)
}

/// Bisection in log t on a bracket with `g(lo) > 0 >= g(hi)`.
fn bisect_log<E, G>(mut g: G, lo: f64, hi: f64) -> Result<f64, E>
where
    G: FnMut(f64) -> Result<f64, E>,
{
    let mut a = lo.ln();
    let mut b = hi.ln();
    for _ in 0..200 {
        if b - a <= 2.0 * f64::EPSILON {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m.exp())?;
        if gm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

#[derive(Clone, Debug)]
pub struct EsterleSequence {
    pub n_max: u32,
    pub rel_tol: f64,
    /// `roots[i]` is `t_{i+1}`; the list reaches `t_{n_max + 1}`.
    pub roots: Vec<f64>,
    /// `log_u[i]` is `log u_{i+1} = ((i+1)/2) * ln(1 + t_{i+2})`.
    pub log_u: Vec<f64>,
    /// `|log u_n - (n / (2n+2)) * ln omega(t_{n+1})|`, one entry per `log_u`.
    pub identity_residual: Vec<f64>,
}

impl EsterleSequence {
    pub fn log_u_n(&self, n: u32) -> f64 {
        self.log_u[(n - 1) as usize]
    }

    pub fn t_n(&self, n: u32) -> f64 {
        self.roots[(n - 1) as usize]
    }

    pub fn max_log_u(&self) -> f64 {
        self.log_u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV rows `n, t_n, log_u_n, u_n, identity_residual`; `u_n` prints as
    /// `inf` once its log passes the overflow threshold.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), EsterleError> {
        writeln!(out, "n,t_n,log_u_n,u_n,identity_residual")?;
        for i in 0..self.log_u.len() {
            let n = i + 1;
            let t_n = self.roots[i];
            let lu = self.log_u[i];
            let res = self.identity_residual[i];
            if lu > 709.0 {
                writeln!(out, "{n},{t_n},{lu},inf,{res}")?;
            } else {
                writeln!(out, "{n},{t_n},{lu},{},{res}", lu.exp())?;
            }
        }
        Ok(())
    }
}

/// Computes `t_1 .. t_{n_max+1}` and the `u_n` logs for `n = 1 .. n_max`,
/// checking that roots strictly decrease and that the closed-form identity
/// `u_n = omega(t_{n+1})^{n/(2n+2)}` holds at each accepted root.
pub fn u_sequence(
    omega: &mut MajorantOmega,
    n_max: u32,
    rel_tol: f64,
) -> Result<EsterleSequence, EsterleError> {
    assert!(n_max >= 1);
    let mut roots = Vec::with_capacity((n_max + 1) as usize);
    for n in 1..=n_max + 1 {
        let t = solve_tn(omega, n, rel_tol)?;
        if let Some(&prev) = roots.last() {
            if !(t < prev) {
                return Err(EsterleError::NotDecreasing { n, n_prev: n - 1, t, t_prev: prev });
            }
        }
        roots.push(t);
    }
    let mut log_u = Vec::with_capacity(n_max as usize);
    let mut identity_residual = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let nf = f64::from(n);
        let t_np1 = roots[n as usize];
        let lu = 0.5 * nf * t_np1.ln_1p();
        let log_omega = omega.eval_extending(t_np1)?.ln();
        let via_identity = nf / (2.0 * nf + 2.0) * log_omega;
        log_u.push(lu);
        identity_residual.push((lu - via_identity).abs());
    }
    Ok(EsterleSequence { n_max, rel_tol, roots, log_u, identity_residual })
}
