//! Convergent and asymptotic series representations for the densities,
//! distribution functions, and density derivatives of the hitting time, the
//! first exit time, and the running supremum, with truncation-error control
//! and automatic selection between the expansion at zero and the expansion
//! at infinity.
//!
//! Every representation is a sum of one or two term families of the shape
//! c_n * x^(e_n), with c_n built from reciprocal Gamma factors. Terms are
//! evaluated in log space. A family is summed until the truncation criterion
//! is met; if the term magnitudes turn around and grow (the expansions at
//! zero are asymptotic rather than convergent for these laws), the partial
//! sum is rolled back to the smallest-term truncation point and the error
//! estimate reports the first omitted term. The estimate also carries a
//! rounding component proportional to the summed term magnitudes, which is
//! what limits accuracy when a representation is evaluated deep inside its
//! cancellation regime.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::closed_form::{density_closed, LawId};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOpts, UpperBound};
use crate::special::{ln_gamma, sin_pi, StableIndex};

/// Which expansion produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    AtZero,
    AtInfinity,
}

/// Representation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepChoice {
    #[default]
    Auto,
    AtZero,
    AtInfinity,
}

/// A series evaluation: value, honest absolute error estimate, which
/// representation was used and how many nonzero terms were summed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub abs_error_est: f64,
    pub rep_used: Rep,
    pub n_terms: u32,
}

/// Truncation controls.
#[derive(Debug, Clone, Copy)]
pub struct SeriesOpts {
    /// Relative term threshold of the stopping rule.
    pub rtol: f64,
    /// Budget of nonzero terms per family.
    pub max_terms: u32,
}

impl Default for SeriesOpts {
    fn default() -> Self {
        SeriesOpts {
            rtol: 1e-12,
            max_terms: 400,
        }
    }
}

// ---------------------------------------------------------------------------
// Term families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fam {
    /// alpha x^(1/a+n-1) / (Gamma(-a n) Gamma(1/a+n))
    Tau1Zero,
    /// -alpha x^(1/a-n-1) / (Gamma(a n) Gamma(1/a-n))
    Tau1InfA,
    /// x^(-n/a-1) / (Gamma(-n/a) n!)
    Tau1InfB,
    /// x^(n-1) / (alpha Gamma(-a n))
    T1ZeroA,
    /// x^(1/a+n-1) / (Gamma(-a n) Gamma(1/a+n))
    T1ZeroB,
    /// x^(1/a-n-1) / (alpha Gamma(a n - 1) Gamma(1+1/a-n))
    T1Inf,
    /// x^(a n - 2) / (Gamma(a n - 1) Gamma(1+1/a-n))
    S1Entire,
    /// x^(-a n - 1) / Gamma(-a n)
    S1InfA,
    /// alpha x^(-a n - 2) / (Gamma(-a n) Gamma(1/a+n))
    S1InfB,
    /// (1/pi) (-1)^(n+1) Gamma(1+n/a) sin(pi n/a) x^(-n/a-1) / n!
    HatTau1,
    /// alpha x^(1/a+n) / (Gamma(-a n) Gamma(1+1/a+n))
    CdfTau1Lower,
    /// alpha x^(1/a-n) / (Gamma(a n) Gamma(1+1/a-n))
    CdfTau1UpperA,
    /// -x^(-n/a) / (Gamma(1-n/a) n!)
    CdfTau1UpperB,
    /// x^n / (alpha n Gamma(-a n))
    CdfT1LowerA,
    /// x^(1/a+n) / (Gamma(-a n) Gamma(1+1/a+n))
    CdfT1LowerB,
}

impl Fam {
    /// Whether the family is an asymptotic (divergent) expansion rather than
    /// a convergent series. The expansions at zero of the hitting and exit
    /// times and at infinity of the supremum carry reciprocal Gammas of
    /// large negative argument, so their coefficients grow factorially and
    /// the terms eventually turn around at every fixed x; the engine then
    /// truncates at the smallest term. The remaining families converge for
    /// every x > 0, and a rising term envelope merely means the peak has not
    /// been passed yet.
    fn is_asymptotic(self) -> bool {
        matches!(
            self,
            Fam::Tau1Zero
                | Fam::T1ZeroA
                | Fam::T1ZeroB
                | Fam::S1InfA
                | Fam::S1InfB
                | Fam::CdfTau1Lower
                | Fam::CdfT1LowerA
                | Fam::CdfT1LowerB
        )
    }

    fn exponent(self, a: &StableIndex, n: u32) -> f64 {
        let al = a.alpha();
        let ia = a.inv_alpha();
        let nf = n as f64;
        match self {
            Fam::Tau1Zero | Fam::T1ZeroB => ia + nf - 1.0,
            Fam::Tau1InfA | Fam::T1Inf => ia - nf - 1.0,
            Fam::Tau1InfB => -nf * ia - 1.0,
            Fam::T1ZeroA => nf - 1.0,
            Fam::S1Entire => al * nf - 2.0,
            Fam::S1InfA => -(al * nf + 1.0),
            Fam::S1InfB => -(al * nf + 2.0),
            Fam::HatTau1 => -nf * ia - 1.0,
            Fam::CdfTau1Lower | Fam::CdfT1LowerB => ia + nf,
            Fam::CdfTau1UpperA => ia - nf,
            Fam::CdfTau1UpperB => -nf * ia,
            Fam::CdfT1LowerA => nf,
        }
    }

    /// Coefficient of x^e as (ln magnitude, sign, ln envelope). The envelope
    /// drops the oscillating sine factors hidden in the reciprocal Gammas of
    /// negative argument, so it is smooth in n and safe for monotonicity
    /// decisions.
    fn coefficient(self, a: &StableIndex, n: u32) -> (f64, f64, f64) {
        let al = a.alpha();
        let ia = a.inv_alpha();
        let nf = n as f64;
        let ln_al = al.ln();
        match self {
            Fam::Tau1Zero | Fam::T1ZeroB => {
                let (l1, s1, e1) = rg(-al * nf);
                let (l2, s2, e2) = rg(ia + nf);
                let extra = if self == Fam::Tau1Zero { ln_al } else { 0.0 };
                (extra + l1 + l2, s1 * s2, extra + e1 + e2)
            }
            Fam::Tau1InfA => {
                let (l1, s1, e1) = rg(al * nf);
                let (l2, s2, e2) = rg(ia - nf);
                (ln_al + l1 + l2, -s1 * s2, ln_al + e1 + e2)
            }
            Fam::Tau1InfB => {
                let (l1, s1, e1) = rg(-nf * ia);
                let lf = ln_gamma(nf + 1.0);
                (l1 - lf, s1, e1 - lf)
            }
            Fam::T1ZeroA => {
                let (l1, s1, e1) = rg(-al * nf);
                (l1 - ln_al, s1, e1 - ln_al)
            }
            Fam::T1Inf => {
                let (l1, s1, e1) = rg(al * nf - 1.0);
                let (l2, s2, e2) = rg(1.0 + ia - nf);
                (l1 + l2 - ln_al, s1 * s2, e1 + e2 - ln_al)
            }
            Fam::S1Entire => {
                let (l1, s1, e1) = rg(al * nf - 1.0);
                let (l2, s2, e2) = rg(1.0 + ia - nf);
                (l1 + l2, s1 * s2, e1 + e2)
            }
            Fam::S1InfA => {
                let (l1, s1, e1) = rg(-al * nf);
                (l1, s1, e1)
            }
            Fam::S1InfB => {
                let (l1, s1, e1) = rg(-al * nf);
                let (l2, s2, e2) = rg(ia + nf);
                (ln_al + l1 + l2, s1 * s2, ln_al + e1 + e2)
            }
            Fam::HatTau1 => {
                let s = sin_pi(nf * ia);
                let lf = ln_gamma(nf + 1.0);
                let lg = ln_gamma(1.0 + nf * ia);
                let env = lg - lf - PI.ln();
                if s == 0.0 {
                    (f64::NEG_INFINITY, 0.0, env)
                } else {
                    let parity = if n % 2 == 1 { 1.0 } else { -1.0 };
                    (env + s.abs().ln(), parity * s.signum(), env)
                }
            }
            Fam::CdfTau1Lower | Fam::CdfT1LowerB => {
                let (l1, s1, e1) = rg(-al * nf);
                let (l2, s2, e2) = rg(1.0 + ia + nf);
                let extra = if self == Fam::CdfTau1Lower { ln_al } else { 0.0 };
                (extra + l1 + l2, s1 * s2, extra + e1 + e2)
            }
            Fam::CdfTau1UpperA => {
                let (l1, s1, e1) = rg(al * nf);
                let (l2, s2, e2) = rg(1.0 + ia - nf);
                (ln_al + l1 + l2, s1 * s2, ln_al + e1 + e2)
            }
            Fam::CdfTau1UpperB => {
                let (l1, s1, e1) = rg(1.0 - nf * ia);
                let lf = ln_gamma(nf + 1.0);
                (l1 - lf, -s1, e1 - lf)
            }
            Fam::CdfT1LowerA => {
                let (l1, s1, e1) = rg(-al * nf);
                let ln_n = (nf).ln();
                (l1 - ln_al - ln_n, s1, e1 - ln_al - ln_n)
            }
        }
    }
}

/// (ln |1/Gamma(x)|, sign, ln envelope): the envelope replaces the |sin pi x|
/// factor of the reflection formula by 1.
fn rg(x: f64) -> (f64, f64, f64) {
    if x >= 0.5 {
        let l = -ln_gamma(x);
        (l, 1.0, l)
    } else {
        let env = ln_gamma(1.0 - x) - PI.ln();
        let s = sin_pi(x);
        if s == 0.0 {
            (f64::NEG_INFINITY, 0.0, env)
        } else {
            (env + s.abs().ln(), s.signum(), env)
        }
    }
}

/// Falling factorial e (e-1) ... (e-p+1); 1 when p = 0.
fn falling_factorial(e: f64, p: u32) -> f64 {
    let mut ff = 1.0;
    for j in 0..p {
        ff *= e - j as f64;
    }
    ff
}

/// n-th term of a family at x (> 0), differentiated p times, as
/// (term, ln envelope magnitude).
fn fam_term(fam: Fam, a: &StableIndex, ln_x: f64, p: u32, n: u32) -> (f64, f64) {
    let e = fam.exponent(a, n);
    let (lc, sc, le) = fam.coefficient(a, n);
    let ff = falling_factorial(e, p);
    if sc == 0.0 || ff == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let lff = ff.abs().ln();
    let ln_mag = lc + lff + (e - p as f64) * ln_x;
    let env = le + lff + (e - p as f64) * ln_x;
    (sc * ff.signum() * ln_mag.exp(), env)
}

// ---------------------------------------------------------------------------
// Family summation with truncation control
// ---------------------------------------------------------------------------

struct FamilySum {
    value: f64,
    err_trunc: f64,
    err_round: f64,
    n_included: u32,
    converged: bool,
}

/// Per-term rounding bound: terms are built from log-Gamma pieces of
/// magnitude up to ~a n ln(a n), each carrying a relative error near machine
/// epsilon that the final exp turns into a relative term error.
#[inline]
fn term_round_bound(al: f64, n: u32, at: f64) -> f64 {
    let z = al * n as f64;
    1e-15 * (8.0 + z * (2.0 + z).ln()) * at
}

fn sum_family(fam: Fam, a: &StableIndex, ln_x: f64, p: u32, opts: &SeriesOpts) -> FamilySum {
    let asymptotic = fam.is_asymptotic();
    let al = a.alpha();
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut round_sum = 0.0_f64;
    let mut included = 0u32;
    let mut prev_env: Option<f64> = None;
    let mut ok_streak = 0u32;
    let mut grow_streak = 0u32;
    // snapshot at the running envelope minimum (optimal truncation point)
    let mut best = (0.0_f64, 0.0_f64, 0u32); // (sum, round_sum, included)
    let mut min_env = f64::INFINITY;
    let mut omitted_after_min: Option<f64> = None;

    let mut n = 1u32;
    let mut nonzero = 0u32;
    while nonzero < opts.max_terms && n < 8 * opts.max_terms {
        let (t, env) = fam_term(fam, a, ln_x, p, n);
        let term_n = n;
        n += 1;
        if t == 0.0 {
            continue;
        }
        nonzero += 1;
        if !t.is_finite() {
            // term magnitude beyond the floating range
            return if asymptotic {
                FamilySum {
                    value: best.0,
                    err_trunc: f64::INFINITY,
                    err_round: best.1,
                    n_included: best.2.max(1),
                    converged: true,
                }
            } else {
                // a convergent sum whose peak overflows is pure cancellation
                FamilySum {
                    value: sum,
                    err_trunc: f64::INFINITY,
                    err_round: round_sum,
                    n_included: included.max(1),
                    converged: true,
                }
            };
        }
        let at = t.abs();
        let y = t - comp;
        let s2 = sum + y;
        comp = (s2 - sum) - y;
        sum = s2;
        round_sum += term_round_bound(al, term_n, at);
        included += 1;

        if env <= min_env {
            min_env = env;
            best = (sum, round_sum, included);
            omitted_after_min = None;
        } else if omitted_after_min.is_none() {
            omitted_after_min = Some(env);
        }

        let decreasing = prev_env.map_or(true, |pe| env <= pe);
        if at <= opts.rtol * sum.abs() && decreasing {
            ok_streak += 1;
            if ok_streak >= 2 {
                return FamilySum {
                    value: sum,
                    err_trunc: 10.0 * env.exp(),
                    err_round: round_sum,
                    n_included: included,
                    converged: true,
                };
            }
        } else {
            ok_streak = 0;
        }
        if asymptotic && !decreasing && at > opts.rtol * sum.abs() {
            grow_streak += 1;
            if grow_streak >= 3 {
                let omitted = omitted_after_min.unwrap_or(min_env);
                return FamilySum {
                    value: best.0,
                    err_trunc: 10.0 * omitted.exp(),
                    err_round: best.1,
                    n_included: best.2.max(1),
                    converged: true,
                };
            }
        } else if asymptotic {
            grow_streak = 0;
        }
        prev_env = Some(env);
    }
    FamilySum {
        value: sum,
        err_trunc: prev_env.map_or(0.0, |e| 10.0 * e.exp()),
        err_round: round_sum,
        n_included: included,
        converged: false,
    }
}

fn eval_families(
    what: &'static str,
    fams: &[Fam],
    a: &StableIndex,
    x: f64,
    p: u32,
    rep: Rep,
    opts: &SeriesOpts,
) -> Result<SeriesValue> {
    if x == 0.0 {
        return eval_at_zero_limit(what, fams, a, p, rep);
    }
    let (sv, converged) = eval_families_core(fams, a, x, p, rep, opts);
    if !converged {
        return Err(Error::NonConvergence {
            what,
            x,
            max_terms: opts.max_terms,
        });
    }
    Ok(sv)
}

/// Like `eval_families` but returns the budget-truncated partial sum with
/// its (large) honest error estimate instead of failing.
fn eval_families_core(
    fams: &[Fam],
    a: &StableIndex,
    x: f64,
    p: u32,
    rep: Rep,
    opts: &SeriesOpts,
) -> (SeriesValue, bool) {
    let ln_x = x.ln();
    let mut value = 0.0;
    let mut err = 0.0;
    let mut n_terms = 0u32;
    let mut converged = true;
    for &f in fams {
        let fs = sum_family(f, a, ln_x, p, opts);
        converged &= fs.converged;
        value += fs.value;
        err += fs.err_trunc + fs.err_round;
        n_terms += fs.n_included;
    }
    (
        SeriesValue {
            value,
            abs_error_est: err,
            rep_used: rep,
            n_terms: n_terms.max(1),
        },
        converged,
    )
}

/// Best-effort density by the series representations alone: never fails on
/// x > 0 and never runs auxiliary quadrature, at the cost of a possibly
/// large (honest) error estimate inside the representation hole. Used where
/// moderate accuracy suffices and evaluation count is large.
pub(crate) fn series_density_lenient(law: LawId, a: &StableIndex, x: f64) -> SeriesValue {
    let opts = SeriesOpts::default();
    let r = pick_rep(law, a, x, 0, RepChoice::Auto);
    let (sv, converged) = eval_families_core(density_fams(law, r), a, x, 0, r, &opts);
    if converged {
        return sv;
    }
    let other = match r {
        Rep::AtZero => Rep::AtInfinity,
        Rep::AtInfinity => Rep::AtZero,
    };
    let (sv2, _) = eval_families_core(density_fams(law, other), a, x, 0, other, &opts);
    if sv2.abs_error_est < sv.abs_error_est {
        sv2
    } else {
        sv
    }
}

/// Best-effort first derivative for the sign scans: budget exhaustion is
/// reported through the error estimate rather than an error.
pub(crate) fn density_deriv_lenient(law: LawId, a: &StableIndex, x: f64) -> SeriesValue {
    let opts = SeriesOpts::default();
    let r = pick_rep(law, a, x, 1, RepChoice::Auto);
    let (sv, converged) = eval_families_core(density_fams(law, r), a, x, 1, r, &opts);
    if converged {
        return sv;
    }
    let other = match r {
        Rep::AtZero => Rep::AtInfinity,
        Rep::AtInfinity => Rep::AtZero,
    };
    let (sv2, _) = eval_families_core(density_fams(law, other), a, x, 1, other, &opts);
    if sv2.abs_error_est < sv.abs_error_est {
        sv2
    } else {
        sv
    }
}

/// Value at x = 0 of the p-fold derivative: terms with exponent e < p must
/// vanish for the limit to be finite; the terms with e = p contribute p!
/// times their coefficient.
fn eval_at_zero_limit(
    what: &'static str,
    fams: &[Fam],
    a: &StableIndex,
    p: u32,
    rep: Rep,
) -> Result<SeriesValue> {
    let mut value = 0.0;
    for &f in fams {
        for n in 1..=(p + 2) {
            let e = f.exponent(a, n);
            if e > p as f64 + 0.5 {
                break;
            }
            let (lc, sc, _) = f.coefficient(a, n);
            if sc == 0.0 {
                continue;
            }
            if e < p as f64 - 1e-12 {
                let ff = falling_factorial(e, p);
                if ff != 0.0 {
                    return Err(Error::Domain {
                        op: what,
                        msg: format!("representation is not finite at x = 0 (exponent {e} < {p})"),
                    });
                }
                continue;
            }
            if (e - p as f64).abs() < 1e-12 {
                value += sc * (lc + ln_gamma(p as f64 + 1.0)).exp();
            }
        }
    }
    Ok(SeriesValue {
        value,
        abs_error_est: 4.0 * f64::EPSILON * value.abs(),
        rep_used: rep,
        n_terms: 1,
    })
}

fn density_fams(law: LawId, rep: Rep) -> &'static [Fam] {
    match (law, rep) {
        (LawId::Tau1, Rep::AtZero) => &[Fam::Tau1Zero],
        (LawId::Tau1, Rep::AtInfinity) => &[Fam::Tau1InfA, Fam::Tau1InfB],
        (LawId::T1, Rep::AtZero) => &[Fam::T1ZeroA, Fam::T1ZeroB],
        (LawId::T1, Rep::AtInfinity) => &[Fam::T1Inf],
        (LawId::S1, Rep::AtZero) => &[Fam::S1Entire],
        (LawId::S1, Rep::AtInfinity) => &[Fam::S1InfA, Fam::S1InfB],
        _ => unreachable!("no series families for this law"),
    }
}

// ---------------------------------------------------------------------------
// Representation selection
// ---------------------------------------------------------------------------

/// Predicted achievable absolute error of a representation at x, from the
/// term envelopes alone.
///
/// For an asymptotic family the floor is the smallest term (optimal
/// truncation). For a convergent family it is the rounding level set by the
/// largest term, plus the last envelope when the series cannot reach the
/// stopping rule inside the term budget.
fn predicted_error(law: LawId, rep: Rep, a: &StableIndex, x: f64, p: u32) -> f64 {
    let ln_x = x.ln();
    let budget = SeriesOpts::default().max_terms;
    let mut total = 0.0_f64;
    for &f in density_fams(law, rep) {
        let asymptotic = f.is_asymptotic();
        let mut min_env = f64::INFINITY;
        let mut max_env = f64::NEG_INFINITY;
        let mut last_env = f64::NEG_INFINITY;
        let mut peak_n = 1u32;
        let mut rising = 0u32;
        let mut turned = false;
        for n in 1..=budget {
            let e = f.exponent(a, n);
            let (_, sc, le) = f.coefficient(a, n);
            let ff = falling_factorial(e, p);
            if sc == 0.0 || ff == 0.0 {
                continue;
            }
            let env = le + ff.abs().ln() + (e - p as f64) * ln_x;
            if env > min_env {
                rising += 1;
                if asymptotic && rising >= 3 {
                    turned = true;
                    break;
                }
            } else {
                rising = 0;
            }
            min_env = min_env.min(env);
            if env > max_env {
                max_env = env;
                peak_n = n;
            }
            last_env = env;
            // converged far below every achievable tolerance
            if !asymptotic && env < max_env - 60.0 && env < -40.0 {
                turned = true;
                break;
            }
        }
        let round_floor = 8.0 * term_round_bound(a.alpha(), peak_n, max_env.exp());
        total += if asymptotic {
            if turned {
                min_env.exp() + round_floor
            } else {
                // still decaying at the budget end: treat like convergence
                // down to the last term
                last_env.exp() + round_floor
            }
        } else if turned {
            round_floor
        } else {
            // budget ran out before the tail was spent
            last_env.exp() + round_floor
        };
    }
    total
}

type CrossoverKey = (u8, u32, u64);

fn crossover_cache() -> &'static RwLock<HashMap<CrossoverKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CrossoverKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Abscissa below which the expansion at zero has the smaller predicted
/// error. Cached per (law, p, alpha).
fn crossover_x(law: LawId, a: &StableIndex, p: u32) -> f64 {
    let key: CrossoverKey = (law as u8, p, a.alpha().to_bits());
    if let Some(&x) = crossover_cache().read().expect("cache lock").get(&key) {
        return x;
    }
    let better_zero =
        |x: f64| predicted_error(law, Rep::AtZero, a, x, p) <= predicted_error(law, Rep::AtInfinity, a, x, p);
    let mut lo = 1e-8_f64;
    let mut hi = 1e8_f64;
    if !better_zero(lo) {
        lo = 0.0; // expansion at infinity wins everywhere we care about
        hi = 1e-8;
    } else if better_zero(hi) {
        lo = 1e8;
        hi = 2e8;
    } else {
        for _ in 0..80 {
            let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
            if better_zero(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let x = 0.5 * (lo + hi);
    crossover_cache()
        .write()
        .expect("cache lock")
        .entry(key)
        .or_insert(x);
    x
}

fn pick_rep(law: LawId, a: &StableIndex, x: f64, p: u32, choice: RepChoice) -> Rep {
    match choice {
        RepChoice::AtZero => Rep::AtZero,
        RepChoice::AtInfinity => Rep::AtInfinity,
        RepChoice::Auto => {
            if x <= crossover_x(law, a, p) {
                Rep::AtZero
            } else {
                Rep::AtInfinity
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Factorization fallback
//
// In double precision the two expansions of the exit-time density leave a
// window around the crossover where neither reaches a useful accuracy: the
// expansion at zero has already hit its asymptotic floor while the expansion
// at infinity either exceeds the term budget or drowns in cancellation (the
// hitting time has a much narrower window of the same kind). Inside that
// window the automatic mode evaluates the density through the product
// identity instead: the law is an independent product of a factor law with
// closed-form density and the downward passage time, so
// f(x) = int f_factor(x/y) f_hat(y) dy/y to quadrature accuracy.
// ---------------------------------------------------------------------------

/// Predicted-error level above which the automatic mode abandons both
/// series representations.
const HOLE_TOL: f64 = 1e-9;

fn hole_cache() -> &'static RwLock<HashMap<(u8, u64), Option<(f64, f64)>>> {
    static CACHE: OnceLock<RwLock<HashMap<(u8, u64), Option<(f64, f64)>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The x-interval (possibly empty) where both density representations have
/// predicted error above `HOLE_TOL`. The predicted error of the expansion at
/// zero increases with x and that of the expansion at infinity decreases, so
/// the region is an interval around the crossover.
fn hole_interval(law: LawId, a: &StableIndex) -> Option<(f64, f64)> {
    let key = (law as u8, a.alpha().to_bits());
    if let Some(h) = hole_cache().read().expect("hole lock").get(&key) {
        return *h;
    }
    let xc = crossover_x(law, a, 0);
    let pz = |x: f64| predicted_error(law, Rep::AtZero, a, x, 0);
    let pi_ = |x: f64| predicted_error(law, Rep::AtInfinity, a, x, 0);
    let hole = if pz(xc).min(pi_(xc)) <= HOLE_TOL {
        None
    } else {
        // left edge: where the expansion at zero crosses the threshold
        let (mut lo, mut hi) = (1e-8_f64, xc);
        for _ in 0..60 {
            let mid = ((lo.ln() + hi.ln()) * 0.5).exp();
            if pz(mid) <= HOLE_TOL {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let left = lo;
        // right edge: where the expansion at infinity drops below it
        let (mut lo, mut hi) = (xc, 1e8_f64);
        for _ in 0..60 {
            let mid = ((lo.ln() + hi.ln()) * 0.5).exp();
            if pi_(mid) > HOLE_TOL {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((left, hi))
    };
    hole_cache()
        .write()
        .expect("hole lock")
        .entry(key)
        .or_insert(hole);
    hole
}

/// Density through the multiplicative identity with the downward passage
/// time, accurate wherever the factor density and the one-sided stable
/// series are (the whole hole window).
///
/// The error estimate carries, beyond the quadrature term, a bound for the
/// rounding noise the one-sided series leaks just above its left-tail
/// cutoff, where its peak term runs e^(+E) against a value of e^(-E).
fn density_by_factorization(law: LawId, a: &StableIndex, x: f64, rep: Rep) -> Result<SeriesValue> {
    let ia = a.inv_alpha();
    let factor = match law {
        LawId::Tau1 => LawId::UAlpha,
        LawId::T1 => LawId::TAlpha,
        _ => {
            return Err(Error::UnsupportedLaw {
                law,
                op: "density_by_factorization",
            })
        }
    };
    // the one-sided stable factor vanishes below its left-tail cutoff
    let beta = ia;
    let m = 1.0 / (a.alpha() - 1.0);
    let cut = 18.0_f64;
    let c_tail = (1.0 - beta) * beta.powf(m * beta);
    let y_cut = (c_tail / cut).powf(1.0 / m);
    let tail = match law {
        LawId::Tau1 => 2.0 + 2.0 * ia,
        _ => 2.0 + ia,
    };
    let integrand = |y: f64| -> f64 {
        let fy = hattau1_density(a, y, &SeriesOpts::default())
            .map(|sv| sv.value)
            .unwrap_or(0.0);
        if fy == 0.0 {
            return 0.0;
        }
        density_closed(factor, a, x / y).unwrap_or(0.0) * fy / y
    };
    let lenient_fallback = || {
        let mut sv = series_density_lenient(law, a, x);
        sv.rep_used = rep;
        sv
    };
    let q = match integrate(
        integrand,
        0.8 * y_cut,
        UpperBound::AlgebraicTail { exponent: tail },
        &QuadOpts {
            tol: 3e-9,
            max_intervals: 2500,
        },
    ) {
        Ok(q) => q,
        Err(_) => return Ok(lenient_fallback()),
    };
    // integrated rounding noise of the one-sided series over its
    // cancellation zone, dominated by the cutoff end
    let w_max = density_closed(factor, a, x / y_cut).unwrap_or(1.0).max(0.1) / y_cut;
    let noise = 3e-12 * 1.5 * cut.exp() * w_max * y_cut / (m * cut);
    Ok(SeriesValue {
        value: q.value,
        abs_error_est: q.err_est + noise + 1e-9 * q.value.abs(),
        rep_used: rep,
        n_terms: 1,
    })
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

fn check_x(op: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain {
            op,
            msg: format!("x = {x} outside [0, inf)"),
        });
    }
    Ok(())
}

/// Density of the requested law by its series representation.
///
/// `RepChoice::Auto` selects the representation with the smaller predicted
/// error; for the running supremum it routes through the exit-time density
/// via the change of variables f_S(x) = alpha x^-(alpha+1) f_T(x^-alpha).
pub fn series_density(law: LawId, a: &StableIndex, x: f64, rep: RepChoice) -> Result<SeriesValue> {
    series_density_opt(law, a, x, rep, &SeriesOpts::default())
}

pub fn series_density_opt(
    law: LawId,
    a: &StableIndex,
    x: f64,
    rep: RepChoice,
    opts: &SeriesOpts,
) -> Result<SeriesValue> {
    check_x("series_density", x)?;
    match law {
        LawId::Tau1 | LawId::T1 => {
            let r = pick_rep(law, a, x, 0, rep);
            if rep == RepChoice::Auto && x > 0.0 {
                if let Some((lo, hi)) = hole_interval(law, a) {
                    if x >= lo && x <= hi {
                        return density_by_factorization(law, a, x, r);
                    }
                }
            }
            match eval_families("series_density", density_fams(law, r), a, x, 0, r, opts) {
                Err(Error::NonConvergence { .. }) if rep == RepChoice::Auto && x > 0.0 => {
                    density_by_factorization(law, a, x, r)
                }
                other => other,
            }
        }
        LawId::S1 => match rep {
            RepChoice::Auto => {
                if x == 0.0 {
                    return Err(Error::Domain {
                        op: "series_density",
                        msg: "supremum density is unbounded at x = 0".into(),
                    });
                }
                let al = a.alpha();
                let y = x.powf(-al);
                let inner = series_density_opt(LawId::T1, a, y, RepChoice::Auto, opts)?;
                let jac = al * x.powf(-(al + 1.0));
                Ok(SeriesValue {
                    value: jac * inner.value,
                    abs_error_est: jac * inner.abs_error_est,
                    rep_used: match inner.rep_used {
                        Rep::AtZero => Rep::AtInfinity,
                        Rep::AtInfinity => Rep::AtZero,
                    },
                    n_terms: inner.n_terms,
                })
            }
            RepChoice::AtZero => {
                eval_families("series_density", density_fams(law, Rep::AtZero), a, x, 0, Rep::AtZero, opts)
            }
            RepChoice::AtInfinity => eval_families(
                "series_density",
                density_fams(law, Rep::AtInfinity),
                a,
                x,
                0,
                Rep::AtInfinity,
                opts,
            ),
        },
        _ => Err(Error::UnsupportedLaw {
            law,
            op: "series_density",
        }),
    }
}

/// Distribution function of the hitting time: P[tau <= x] (`lower`) or
/// P[tau >= x] (`upper`). Both the direct series for the requested tail and
/// one minus the series for the opposite tail are evaluated, and the route
/// with the smaller error estimate wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfTail {
    Lower,
    Upper,
}

pub fn series_cdf_tau1(a: &StableIndex, x: f64, tail: CdfTail) -> Result<SeriesValue> {
    series_cdf_tau1_opt(a, x, tail, &SeriesOpts::default())
}

pub fn series_cdf_tau1_opt(
    a: &StableIndex,
    x: f64,
    tail: CdfTail,
    opts: &SeriesOpts,
) -> Result<SeriesValue> {
    check_x("series_cdf_tau1", x)?;
    let lower = eval_families(
        "series_cdf_tau1",
        &[Fam::CdfTau1Lower],
        a,
        x,
        0,
        Rep::AtZero,
        opts,
    )?;
    let upper = if x == 0.0 {
        SeriesValue {
            value: 1.0,
            abs_error_est: 0.0,
            rep_used: Rep::AtInfinity,
            n_terms: 1,
        }
    } else {
        eval_families(
            "series_cdf_tau1",
            &[Fam::CdfTau1UpperA, Fam::CdfTau1UpperB],
            a,
            x,
            0,
            Rep::AtInfinity,
            opts,
        )?
    };
    let (direct, other) = match tail {
        CdfTail::Lower => (lower, upper),
        CdfTail::Upper => (upper, lower),
    };
    if direct.abs_error_est <= other.abs_error_est + f64::EPSILON {
        Ok(direct)
    } else {
        Ok(SeriesValue {
            value: 1.0 - other.value,
            abs_error_est: other.abs_error_est + f64::EPSILON,
            rep_used: other.rep_used,
            n_terms: other.n_terms,
        })
    }
}

/// p-th derivative of the hitting-time density, 1 <= p <= 6.
pub fn series_density_deriv_tau1(
    a: &StableIndex,
    x: f64,
    p: u32,
    rep: RepChoice,
) -> Result<SeriesValue> {
    series_density_deriv_tau1_opt(a, x, p, rep, &SeriesOpts::default())
}

pub fn series_density_deriv_tau1_opt(
    a: &StableIndex,
    x: f64,
    p: u32,
    rep: RepChoice,
    opts: &SeriesOpts,
) -> Result<SeriesValue> {
    if !(1..=6).contains(&p) {
        return Err(Error::Domain {
            op: "series_density_deriv_tau1",
            msg: format!("derivative order p = {p} outside 1..=6"),
        });
    }
    check_x("series_density_deriv_tau1", x)?;
    let r = pick_rep(LawId::Tau1, a, x, p, rep);
    eval_families(
        "series_density_deriv_tau1",
        density_fams(LawId::Tau1, r),
        a,
        x,
        p,
        r,
        opts,
    )
}

/// First derivative of the exit-time density (used by the unimodality scan).
pub(crate) fn t1_density_deriv(a: &StableIndex, x: f64, rep: RepChoice) -> Result<SeriesValue> {
    check_x("t1_density_deriv", x)?;
    let r = pick_rep(LawId::T1, a, x, 1, rep);
    eval_families(
        "t1_density_deriv",
        density_fams(LawId::T1, r),
        a,
        x,
        1,
        r,
        &SeriesOpts::default(),
    )
}

// ---------------------------------------------------------------------------
// One-sided stable density of index 1/alpha (the downward passage time)
// ---------------------------------------------------------------------------

/// Exponent of the stretched-exponential left tail of the one-sided stable
/// density: -ln f(x) ~ tail_exponent(a, x) as x -> 0+.
pub(crate) fn hattau1_left_tail_exponent(a: &StableIndex, x: f64) -> f64 {
    let beta = a.inv_alpha();
    let m = 1.0 / (a.alpha() - 1.0);
    (1.0 - beta) * beta.powf(m * beta) * x.powf(-m)
}

/// Below this left-tail exponent the series is summed; above it the density
/// is below ~1e-8 and is reported as zero with an honest bound.
const HAT_TAIL_CUTOFF: f64 = 18.0;

/// Density of the downward passage time by its convergent series, with the
/// stretched-exponential left tail reported as zero below the cutoff.
pub(crate) fn hattau1_density(a: &StableIndex, x: f64, opts: &SeriesOpts) -> Result<SeriesValue> {
    hattau1_deriv_impl(a, x, 0, opts)
}

/// p-th derivative of the downward passage density (p = 0 for the density).
pub(crate) fn hattau1_deriv(a: &StableIndex, x: f64, p: u32) -> Result<SeriesValue> {
    hattau1_deriv_impl(a, x, p, &SeriesOpts::default())
}

fn hattau1_deriv_impl(a: &StableIndex, x: f64, p: u32, opts: &SeriesOpts) -> Result<SeriesValue> {
    check_x("hattau1_density", x)?;
    if x == 0.0 {
        return Ok(SeriesValue {
            value: 0.0,
            abs_error_est: 0.0,
            rep_used: Rep::AtInfinity,
            n_terms: 1,
        });
    }
    let e = hattau1_left_tail_exponent(a, x);
    if e >= HAT_TAIL_CUTOFF {
        // f ~ exp(-e) times an algebraic prefactor; everything below the
        // cutoff is reported as zero with the tail bound as the error
        return Ok(SeriesValue {
            value: 0.0,
            abs_error_est: 10.0 * (-e).exp() * x.powf(-(p as f64)).min(1e6),
            rep_used: Rep::AtInfinity,
            n_terms: 1,
        });
    }
    eval_families("hattau1_density", &[Fam::HatTau1], a, x, p, Rep::AtInfinity, opts)
}

// ---------------------------------------------------------------------------
// Leading asymptotics
// ---------------------------------------------------------------------------

/// Endpoint selector for `asymptotic_leading`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Zero,
    Infinity,
}

/// Leading coefficient and exponent of the p-th derivative of the density of
/// `law` at the requested end: f^(p)(x) ~ coeff * x^exponent.
///
/// The pair is read off the first non-vanishing differentiated term of the
/// series at that end (several candidate terms are compared, since p-fold
/// differentiation can annihilate the formally leading one).
pub fn asymptotic_leading(law: LawId, a: &StableIndex, end: End, p: u32) -> Result<(f64, f64)> {
    if p > 6 {
        return Err(Error::UnsupportedAsymptote {
            msg: format!("derivative order p = {p} above the supported cap 6"),
        });
    }
    let fams = match law {
        LawId::Tau1 | LawId::T1 | LawId::S1 => density_fams(
            law,
            match end {
                End::Zero => Rep::AtZero,
                End::Infinity => Rep::AtInfinity,
            },
        ),
        _ => {
            return Err(Error::UnsupportedLaw {
                law,
                op: "asymptotic_leading",
            })
        }
    };
    let mut best: Option<(f64, f64)> = None;
    for &f in fams {
        for n in 1..=(p + 4) {
            let e = f.exponent(a, n);
            let ff = falling_factorial(e, p);
            let (lc, sc, _) = f.coefficient(a, n);
            if sc == 0.0 || ff == 0.0 {
                continue;
            }
            let coeff = sc * ff.signum() * (lc + ff.abs().ln()).exp();
            let ex = e - p as f64;
            let dominant = match (end, best) {
                (_, None) => true,
                (End::Zero, Some((_, be))) => ex < be,
                (End::Infinity, Some((_, be))) => ex > be,
            };
            if dominant {
                best = Some((coeff, ex));
            }
        }
    }
    best.ok_or(Error::UnsupportedAsymptote {
        msg: format!("no non-vanishing leading term for {law} at order {p}"),
    })
}

// ---------------------------------------------------------------------------
// Distribution-function helper for the exit time (used by sampling/verify)
// ---------------------------------------------------------------------------

/// P[T <= x] for small x by the term-wise integral of the expansion at zero.
pub(crate) fn t1_cdf_lower(a: &StableIndex, x: f64, opts: &SeriesOpts) -> Result<SeriesValue> {
    check_x("t1_cdf_lower", x)?;
    eval_families(
        "t1_cdf_lower",
        &[Fam::CdfT1LowerA, Fam::CdfT1LowerB],
        a,
        x,
        0,
        Rep::AtZero,
        opts,
    )
}
