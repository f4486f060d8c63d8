//! Modes, unimodality certificates on a grid, and the log-concavity boundary
//! of the hitting-time factor law on the exponential scale.

use serde::Serialize;

use crate::closed_form::{density_closed, density_closed_deriv, LawId};
use crate::error::{Error, Result};
use crate::series::{
    density_deriv_lenient, hattau1_density, hattau1_deriv, series_density_lenient, SeriesOpts,
};
use crate::special::StableIndex;

/// Grid verdict of a unimodality scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    UnimodalOnGrid,
    NotUnimodalOnGrid,
}

/// Outcome of a derivative sign-change scan.
#[derive(Debug, Clone, Serialize)]
pub struct UnimodalityReport {
    pub law: LawId,
    pub alpha: f64,
    pub mode_estimate: f64,
    pub sign_changes_of_derivative: u32,
    pub grid_spec: (f64, f64, usize),
    pub verdict: Verdict,
}

/// Mode of the hitting-time factor law: the unique positive root of
/// (1 - 2a) t^2 + 2 t (a - 1) cos(pi a) + 1 = 0, in closed form.
pub fn mode_u_alpha(a: &StableIndex) -> f64 {
    let al = a.alpha();
    let b = 2.0 * (al - 1.0) * a.cos_pi_alpha();
    // discriminant b^2 + 4 (2a - 1) > 0 always since a > 1/2
    let disc = b * b + 4.0 * (2.0 * al - 1.0);
    (b + disc.sqrt()) / (2.0 * (2.0 * al - 1.0))
}

/// True iff t -> log density of U_a on the exponential scale is concave over
/// the grid: min over t of (1 - cos(pi a) cosh t) >= 0. Analytically this
/// holds for every t exactly when cos(pi a) <= 0, i.e. a <= 3/2.
pub fn log_concavity_exp_scale(a: &StableIndex, t_lo: f64, t_hi: f64) -> bool {
    let cpa = a.cos_pi_alpha();
    let n = 4001;
    let step = (t_hi - t_lo) / (n - 1) as f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let t = t_lo + step * i as f64;
        min = min.min(1.0 - cpa * t.cosh());
    }
    min >= 0.0
}

/// Bisection for the index where `log_concavity_exp_scale` flips, over the
/// symmetric window [-t_span, t_span].
pub fn log_concavity_boundary(a_lo: f64, a_hi: f64, t_span: f64, tol: f64) -> Result<f64> {
    let holds = |al: f64| -> Result<bool> {
        let a = StableIndex::new(al)?;
        Ok(log_concavity_exp_scale(&a, -t_span, t_span))
    };
    let mut lo = a_lo;
    let mut hi = a_hi;
    if !holds(lo)? || holds(hi)? {
        return Err(Error::Domain {
            op: "log_concavity_boundary",
            msg: format!("no sign change of the criterion on [{a_lo}, {a_hi}]"),
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Density derivative with an honest absolute error bound, per law.
fn deriv_with_err(law: LawId, a: &StableIndex, x: f64) -> Result<(f64, f64)> {
    match law {
        LawId::Tau1 | LawId::T1 => {
            let sv = density_deriv_lenient(law, a, x);
            Ok((sv.value, sv.abs_error_est))
        }
        LawId::HatTau1 => {
            let sv = hattau1_deriv(a, x, 1)?;
            Ok((sv.value, sv.abs_error_est))
        }
        LawId::UAlpha | LawId::TAlpha => {
            let d = density_closed_deriv(law, a, x)?;
            Ok((d, 1e-13 * d.abs()))
        }
        _ => Err(Error::UnsupportedLaw {
            law,
            op: "unimodality_scan",
        }),
    }
}

fn density_of(law: LawId, a: &StableIndex, x: f64) -> Result<f64> {
    match law {
        LawId::Tau1 | LawId::T1 => Ok(series_density_lenient(law, a, x).value),
        LawId::HatTau1 => Ok(hattau1_density(a, x, &SeriesOpts::default())?.value),
        LawId::UAlpha | LawId::TAlpha => density_closed(law, a, x),
        _ => Err(Error::UnsupportedLaw {
            law,
            op: "unimodality_scan",
        }),
    }
}

/// Counts strict sign changes of the density derivative on a logarithmic
/// grid and refines the density argmax by golden-section search. Grid points
/// where |f'| falls below the series error estimate (or the dead band) carry
/// no usable sign and are skipped.
pub fn unimodality_scan(
    law: LawId,
    a: &StableIndex,
    x_min: f64,
    x_max: f64,
    n: usize,
) -> Result<UnimodalityReport> {
    if !(x_min > 0.0 && x_min < x_max) || n < 1000 {
        return Err(Error::Domain {
            op: "unimodality_scan",
            msg: format!("invalid grid ({x_min}, {x_max}, {n})"),
        });
    }
    const DEAD_BAND: f64 = 1e-12;
    let ratio = (x_max / x_min).powf(1.0 / (n - 1) as f64);
    let mut x = x_min;
    let mut sign_changes = 0u32;
    let mut last_sign = 0i8;
    let mut best = (x_min, f64::NEG_INFINITY);
    let mut best_i = 0usize;
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        xs.push(x);
        let (d, err) = deriv_with_err(law, a, x)?;
        if d.abs() > DEAD_BAND.max(err) {
            let s = if d > 0.0 { 1 } else { -1 };
            if last_sign != 0 && s != last_sign {
                sign_changes += 1;
            }
            last_sign = s;
        }
        let f = density_of(law, a, x)?;
        if f > best.1 {
            best = (x, f);
            best_i = i;
        }
        x *= ratio;
    }

    // golden-section refinement of the density maximum inside the bracket
    let lo = xs[best_i.saturating_sub(1)];
    let hi = xs[(best_i + 1).min(n - 1)];
    let mode_estimate = golden_max(|t| density_of(law, a, t).unwrap_or(f64::NEG_INFINITY), lo, hi);

    let verdict = if sign_changes == 1 {
        Verdict::UnimodalOnGrid
    } else {
        Verdict::NotUnimodalOnGrid
    };
    Ok(UnimodalityReport {
        law,
        alpha: a.alpha(),
        mode_estimate,
        sign_changes_of_derivative: sign_changes,
        grid_spec: (x_min, x_max, n),
        verdict,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - (hi - lo) * INV_PHI;
    let mut d = lo + (hi - lo) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * INV_PHI;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * INV_PHI;
            fd = f(d);
        }
        if (hi - lo).abs() < 1e-12 * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(a: f64) -> StableIndex {
        StableIndex::new(a).unwrap()
    }

    #[test]
    fn mode_reference_values() {
        // closed-form roots, cross-checked in 50-digit arithmetic
        assert!((mode_u_alpha(&idx(1.5)) - 0.7071067811865475244).abs() < 1e-12);
        assert!((mode_u_alpha(&idx(1.2)) - 0.73744609099773829611).abs() < 1e-13);
        assert!((mode_u_alpha(&idx(1.8)) - 0.91719523326247578128).abs() < 1e-13);
    }

    #[test]
    fn mode_is_a_maximum_of_the_density() {
        for al in [1.2, 1.5, 1.8] {
            let a = idx(al);
            let m = mode_u_alpha(&a);
            let f0 = density_closed(LawId::UAlpha, &a, m).unwrap();
            assert!(f0 > density_closed(LawId::UAlpha, &a, m - 1e-3).unwrap());
            assert!(f0 > density_closed(LawId::UAlpha, &a, m + 1e-3).unwrap());
        }
    }

    #[test]
    fn log_concavity_criterion() {
        assert!(log_concavity_exp_scale(&idx(1.4), -20.0, 20.0));
        assert!(log_concavity_exp_scale(&idx(1.5), -20.0, 20.0));
        assert!(!log_concavity_exp_scale(&idx(1.8), -20.0, 20.0));
    }

    #[test]
    fn log_concavity_boundary_is_three_halves() {
        let b = log_concavity_boundary(1.4, 1.6, 30.0, 1e-10).unwrap();
        assert!((b - 1.5).abs() < 1e-9, "boundary at {b}");
    }

    #[test]
    fn u_alpha_scan_matches_closed_form_mode() {
        for al in [1.2, 1.5, 1.8] {
            let a = idx(al);
            let r = unimodality_scan(LawId::UAlpha, &a, 1e-3, 1e3, 4000).unwrap();
            assert_eq!(r.verdict, Verdict::UnimodalOnGrid, "alpha {al}");
            assert_eq!(r.sign_changes_of_derivative, 1);
            let m = mode_u_alpha(&a);
            assert!(
                (r.mode_estimate - m).abs() < 1e-5 * m,
                "alpha {al}: scan {} vs root {m}",
                r.mode_estimate
            );
        }
    }

    #[test]
    fn t_alpha_scan_is_unimodal() {
        for al in [1.2, 1.5, 1.8] {
            let r = unimodality_scan(LawId::TAlpha, &idx(al), 1e-3, 1e3, 4000).unwrap();
            assert_eq!(r.verdict, Verdict::UnimodalOnGrid, "alpha {al}");
        }
    }

    #[test]
    fn hitting_and_exit_scans_below_three_halves() {
        for al in [1.2, 1.35, 1.5] {
            let r = unimodality_scan(LawId::Tau1, &idx(al), 1e-3, 1e3, 2000).unwrap();
            assert_eq!(
                r.sign_changes_of_derivative, 1,
                "tau1 alpha {al}: {} sign changes",
                r.sign_changes_of_derivative
            );
            assert_eq!(r.verdict, Verdict::UnimodalOnGrid);
        }
        for al in [1.3, 1.4, 1.5] {
            let r = unimodality_scan(LawId::T1, &idx(al), 1e-3, 1e3, 2000).unwrap();
            assert_eq!(
                r.sign_changes_of_derivative, 1,
                "t1 alpha {al}: {} sign changes",
                r.sign_changes_of_derivative
            );
        }
    }

    #[test]
    fn exit_scan_needs_wider_grid_at_small_alpha() {
        // at small indices the exit-time mode drops below 1e-3, so the
        // standard window sees a decreasing density (no sign change); a
        // window bracketing the mode restores the single change
        let a = idx(1.2);
        let narrow = unimodality_scan(LawId::T1, &a, 1e-3, 1e3, 2000).unwrap();
        assert_eq!(narrow.sign_changes_of_derivative, 0);
        let wide = unimodality_scan(LawId::T1, &a, 1e-6, 1e3, 4000).unwrap();
        assert_eq!(wide.sign_changes_of_derivative, 1);
        assert!(wide.mode_estimate < 1e-3, "mode at {}", wide.mode_estimate);
    }

    #[test]
    fn tau1_mode_location_reference() {
        // argmax freshly cross-checked by root-finding on the derivative in
        // 30-digit arithmetic
        let r = unimodality_scan(LawId::Tau1, &idx(1.5), 1e-2, 1e2, 3000).unwrap();
        assert!((r.mode_estimate - 0.316072804154800045).abs() < 1e-4);
        let r = unimodality_scan(LawId::Tau1, &idx(1.3), 1e-2, 1e2, 3000).unwrap();
        assert!((r.mode_estimate - 0.445767152710791128).abs() < 1e-4);
    }

    #[test]
    fn hat_scan_is_unimodal() {
        let r = unimodality_scan(LawId::HatTau1, &idx(1.5), 1e-3, 1e3, 2000).unwrap();
        assert_eq!(r.verdict, Verdict::UnimodalOnGrid);
    }

    #[test]
    fn scan_rejects_bad_grid() {
        let a = idx(1.5);
        assert!(unimodality_scan(LawId::Tau1, &a, 0.0, 1.0, 2000).is_err());
        assert!(unimodality_scan(LawId::Tau1, &a, 1e-3, 1e3, 10).is_err());
        assert!(unimodality_scan(LawId::S1, &a, 1e-3, 1e3, 2000).is_err());
    }
}
