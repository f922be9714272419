//! Closed-form gap models, each a pure function of (x, π(x), d) or of d
//! alone.
//!
//! Every estimate takes π(x) as an explicit argument instead of recomputing
//! it: callers choose between the sieved exact count and the x/ln x
//! approximation, and the algebraic identities relating the two forms can be
//! tested directly. Real-valued x are accepted throughout (the formulas are
//! smooth); gaps that pass through the singular series stay integers.

use thiserror::Error;

use crate::constants::{self, li2, singular_series, ConstantsError};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("x = {x} must exceed 2*pi(x) = {two_pi}")]
    DensityTooHigh { x: f64, two_pi: f64 },
    #[error("gap must be a positive even integer, got {0}")]
    OddGap(u64),
    #[error("li2 is defined for x >= 2, got {0}")]
    Li2Domain(f64),
    #[error("maximal-gap bracket 2 ln pi - ln x + c is negative at x = {x}")]
    NegativeBracket { x: f64 },
    #[error("extrapolated Brun estimate needs a partial sum")]
    MissingPartial,
    #[error("the 1/ln x Brun law covers d = 2 and d = 4 only, got {0}")]
    B2LawGap(u64),
    #[error("tail sum needs H >= 2, got {0}")]
    TailBound(u64),
    #[error("formula {0:?} is missing argument {1}")]
    MissingArg(FormulaId, &'static str),
}

impl From<ConstantsError> for ModelError {
    fn from(e: ConstantsError) -> Self {
        match e {
            ConstantsError::OddGap(d) => ModelError::OddGap(d),
            ConstantsError::Li2Domain(x) => ModelError::Li2Domain(x),
            ConstantsError::CutoffTooSmall(_) => unreachable!("models never build products"),
        }
    }
}

/// Estimates for τ_d(x), the count of consecutive pairs at gap d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauVariant {
    /// C₂·𝔖(d)·(π²/x)·(1 − 2π/x)^(d/2 − 1).
    C1,
    /// C₂·𝔖(d)·π²/(x − 2π)·e^(−dπ/x).
    C1P,
    /// C₂·𝔖(d)·(π²/x)·e^(−dπ/x).
    C1PP,
}

/// Estimates for the twin count τ₂(x) ≡ π₂(x).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinVariant {
    /// C₂·π²(x)/x — the count as a function of the prime count itself.
    C2,
    /// C₂·x/ln²x.
    Hl,
    /// C₂·Li₂(x).
    Li2,
}

/// Estimates for the maximal gap G(x).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmaxVariant {
    /// (x/π)·(2 ln π − ln x + c), c = ln C₂.
    C4,
    /// ln x·(ln x − 2 ln ln x + c): C4 with π = x/ln x substituted.
    Pnt,
    /// ln²x.
    Cramer,
    /// 2e^(−γ)·ln²x ≈ 1.12292·ln²x.
    Granville,
}

/// Estimates for Σ (p_n − p_{n−1})².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumSqVariant {
    /// 2x³/(π(x−2π))·(1 − 3π/x + 2π²/x²).
    C5,
    /// 2x²/π.
    Simple,
    /// 2x·ln x.
    HeathBrown,
}

/// Estimates for the generalized Brun sums ℬ_d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrunVariant {
    /// Limit value (4c₂/d)·𝔖(d).
    C6,
    /// Partial-sum law (2C₂/d)·𝔖(d)·e^(−d/ln x).
    Partial,
    /// partial + (2C₂/d)·𝔖(d)·(1 − e^(−d/ln x)): the tail completed.
    Extrapolated,
    /// partial + 4c₂/ln x, the 1/ln x law valid for d = 2 and 4.
    B2Law,
}

/// Estimates for the first occurrence p_f(d).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfVariant {
    /// √d·exp(½·√(ln²d + 4d)).
    C7,
    /// e^(√d).
    Shanks,
    /// √d·e^(√d), the large-d shape of C7.
    Asymptotic,
}

fn check_density(x: f64, pi_x: f64) -> Result<(), ModelError> {
    if x <= 2.0 * pi_x {
        Err(ModelError::DensityTooHigh {
            x,
            two_pi: 2.0 * pi_x,
        })
    } else {
        Ok(())
    }
}

/// τ_d(x) estimate; see [`TauVariant`] for the three forms.
pub fn tau_model(variant: TauVariant, x: f64, pi_x: f64, d: u64) -> Result<f64, ModelError> {
    check_density(x, pi_x)?;
    let s = singular_series(d)?;
    let c2 = constants::table().c2;
    let d = d as f64;
    Ok(match variant {
        TauVariant::C1 => c2 * s * pi_x * pi_x / x * (1.0 - 2.0 * pi_x / x).powf(d / 2.0 - 1.0),
        TauVariant::C1P => c2 * s * pi_x * pi_x / (x - 2.0 * pi_x) * (-d * pi_x / x).exp(),
        TauVariant::C1PP => c2 * s * pi_x * pi_x / x * (-d * pi_x / x).exp(),
    })
}

/// π_d(x) estimate C₂·𝔖(d)·x/ln²x for pairs that need not be consecutive.
pub fn hl_pair_model(x: f64, d: u64) -> Result<f64, ModelError> {
    let s = singular_series(d)?;
    let l = x.ln();
    Ok(constants::table().c2 * s * x / (l * l))
}

/// Twin estimate; see [`TwinVariant`].
pub fn twin_model(variant: TwinVariant, x: f64, pi_x: f64) -> Result<f64, ModelError> {
    let c2 = constants::table().c2;
    Ok(match variant {
        TwinVariant::C2 => c2 * pi_x * pi_x / x,
        TwinVariant::Hl => {
            let l = x.ln();
            c2 * x / (l * l)
        }
        TwinVariant::Li2 => c2 * li2(x)?,
    })
}

/// Maximal-gap estimate; see [`GmaxVariant`].
pub fn gmax_model(variant: GmaxVariant, x: f64, pi_x: f64) -> Result<f64, ModelError> {
    let c = constants::table().log_c2;
    let l = x.ln();
    Ok(match variant {
        GmaxVariant::C4 => {
            let bracket = 2.0 * pi_x.ln() - l + c;
            if bracket < 0.0 {
                return Err(ModelError::NegativeBracket { x });
            }
            x / pi_x * bracket
        }
        GmaxVariant::Pnt => {
            let bracket = l - 2.0 * l.ln() + c;
            if bracket < 0.0 {
                return Err(ModelError::NegativeBracket { x });
            }
            l * bracket
        }
        GmaxVariant::Cramer => l * l,
        GmaxVariant::Granville => 2.0 * (-constants::table().euler_gamma).exp() * l * l,
    })
}

/// Squared-gap sum estimate; see [`SumSqVariant`].
pub fn sumsq_model(variant: SumSqVariant, x: f64, pi_x: f64) -> Result<f64, ModelError> {
    Ok(match variant {
        SumSqVariant::C5 => {
            check_density(x, pi_x)?;
            let r = pi_x / x;
            2.0 * x * x * x / (pi_x * (x - 2.0 * pi_x)) * (1.0 - 3.0 * r + 2.0 * r * r)
        }
        SumSqVariant::Simple => 2.0 * x * x / pi_x,
        SumSqVariant::HeathBrown => 2.0 * x * x.ln(),
    })
}

/// Tail sum Σ_{d≥H} d·τ_d(x) ≈ x²/(x−2π)·(1−2π/x)^(H/2)·(1+(H−2)π/x).
/// At H = 2 this collapses to x, the whole-sum identity.
pub fn large_gap_sum_model(x: f64, pi_x: f64, h: u64) -> Result<f64, ModelError> {
    if h < 2 {
        return Err(ModelError::TailBound(h));
    }
    check_density(x, pi_x)?;
    let r = pi_x / x;
    Ok(x * x / (x - 2.0 * pi_x)
        * (1.0 - 2.0 * r).powf(h as f64 / 2.0)
        * (1.0 + (h as f64 - 2.0) * r))
}

/// Generalized Brun sum estimate; see [`BrunVariant`]. `x` is required for
/// every variant except `C6`; `partial` carries ℬ_d(x) where required.
pub fn brun_model(
    variant: BrunVariant,
    d: u64,
    x: Option<f64>,
    partial: Option<f64>,
) -> Result<f64, ModelError> {
    let s = singular_series(d)?;
    let t = constants::table();
    let df = d as f64;
    let need_x = || x.ok_or(ModelError::MissingArg(FormulaId::BrunPartial, "x"));
    Ok(match variant {
        BrunVariant::C6 => 4.0 * t.c2_half / df * s,
        BrunVariant::Partial => {
            let x = need_x()?;
            2.0 * t.c2 / df * s * (-df / x.ln()).exp()
        }
        BrunVariant::Extrapolated => {
            let x = need_x()?;
            let p = partial.ok_or(ModelError::MissingPartial)?;
            p + 2.0 * t.c2 / df * s * (1.0 - (-df / x.ln()).exp())
        }
        BrunVariant::B2Law => {
            if d != 2 && d != 4 {
                return Err(ModelError::B2LawGap(d));
            }
            let x = need_x()?;
            let p = partial.ok_or(ModelError::MissingPartial)?;
            p + 4.0 * t.c2_half / x.ln()
        }
    })
}

/// ln ln x + M.
pub fn mertens_model(x: f64) -> Result<f64, ModelError> {
    Ok(x.ln().ln() + constants::table().mertens_m)
}

/// First-occurrence estimate; see [`PfVariant`].
pub fn pf_model(variant: PfVariant, d: f64) -> Result<f64, ModelError> {
    Ok(match variant {
        PfVariant::C7 => d.sqrt() * (0.5 * (d.ln().powi(2) + 4.0 * d).sqrt()).exp(),
        PfVariant::Shanks => d.sqrt().exp(),
        PfVariant::Asymptotic => d.sqrt() * d.sqrt().exp(),
    })
}

/// The kernel ½·t^(3/4)·e^(−√t/2) shared by the Andrica-style estimates; its
/// maximum over t > 0 is 0.57971… at t = 9.
pub fn andrica_kernel(t: f64) -> f64 {
    0.5 * t.powf(0.75) * (-0.5 * t.sqrt()).exp()
}

/// R(x) estimate: the kernel applied to the C4 maximal-gap size at x.
pub fn andrica_c8(x: f64, pi_x: f64) -> Result<f64, ModelError> {
    Ok(andrica_kernel(gmax_model(GmaxVariant::C4, x, pi_x)?))
}

/// R(x) under a ln²x maximal gap: ln^(3/2)x / (2√x).
pub fn andrica_r_cramer(x: f64) -> Result<f64, ModelError> {
    Ok(x.ln().powf(1.5) / (2.0 * x.sqrt()))
}

/// √(p_f(d)+d) − √p_f(d) under the e^√d first-occurrence law: ½·d·e^(−√d/2).
pub fn andrica_shanks2(d: f64) -> f64 {
    0.5 * d * (-0.5 * d.sqrt()).exp()
}

/// Residual Δ(x, d) = τ_d(x) − C1 estimate, the sign-change observable.
pub fn delta(x: f64, pi_x: f64, d: u64, tau_observed: f64) -> Result<f64, ModelError> {
    Ok(tau_observed - tau_model(TauVariant::C1, x, pi_x, d)?)
}

/// Identifier for every comparator formula, the tag carried by [`ModelEval`]
/// results in reports and exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    HlPair,
    TauC1,
    TauC1P,
    TauC1PP,
    TwinC2,
    TwinHl,
    TwinLi2,
    GmaxC4,
    GmaxPnt,
    GmaxCramer,
    GmaxGranville,
    SumsqC5,
    SumsqSimple,
    SumsqHb,
    LargeGapSum,
    BrunC6,
    BrunPartial,
    BrunExtrap,
    BrunB2Law,
    Mertens,
    PfC7,
    PfShanks,
    PfAsympt,
    RC8,
    RCramer,
    RShanks2,
}

/// One comparator evaluation: which formula, at which (x, d), and its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEval {
    pub formula_id: FormulaId,
    pub x: Option<f64>,
    pub d: Option<u64>,
    pub value: f64,
}

/// Arguments for the uniform [`FormulaId::evaluate`] entry point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalArgs {
    pub x: Option<f64>,
    pub pi_x: Option<f64>,
    pub d: Option<u64>,
    pub h: Option<u64>,
    pub partial: Option<f64>,
}

impl FormulaId {
    /// Evaluate any formula from a uniform argument bag; missing arguments
    /// are reported per formula.
    pub fn evaluate(self, args: &EvalArgs) -> Result<ModelEval, ModelError> {
        let need = |v: Option<f64>, name| v.ok_or(ModelError::MissingArg(self, name));
        let need_d = || args.d.ok_or(ModelError::MissingArg(self, "d"));
        let x = args.x;
        let pi = args.pi_x;
        let value = match self {
            FormulaId::HlPair => hl_pair_model(need(x, "x")?, need_d()?)?,
            FormulaId::TauC1 => {
                tau_model(TauVariant::C1, need(x, "x")?, need(pi, "pi_x")?, need_d()?)?
            }
            FormulaId::TauC1P => {
                tau_model(TauVariant::C1P, need(x, "x")?, need(pi, "pi_x")?, need_d()?)?
            }
            FormulaId::TauC1PP => tau_model(
                TauVariant::C1PP,
                need(x, "x")?,
                need(pi, "pi_x")?,
                need_d()?,
            )?,
            FormulaId::TwinC2 => twin_model(TwinVariant::C2, need(x, "x")?, need(pi, "pi_x")?)?,
            FormulaId::TwinHl => twin_model(TwinVariant::Hl, need(x, "x")?, 0.0)?,
            FormulaId::TwinLi2 => twin_model(TwinVariant::Li2, need(x, "x")?, 0.0)?,
            FormulaId::GmaxC4 => gmax_model(GmaxVariant::C4, need(x, "x")?, need(pi, "pi_x")?)?,
            FormulaId::GmaxPnt => gmax_model(GmaxVariant::Pnt, need(x, "x")?, 0.0)?,
            FormulaId::GmaxCramer => gmax_model(GmaxVariant::Cramer, need(x, "x")?, 0.0)?,
            FormulaId::GmaxGranville => gmax_model(GmaxVariant::Granville, need(x, "x")?, 0.0)?,
            FormulaId::SumsqC5 => sumsq_model(SumSqVariant::C5, need(x, "x")?, need(pi, "pi_x")?)?,
            FormulaId::SumsqSimple => {
                sumsq_model(SumSqVariant::Simple, need(x, "x")?, need(pi, "pi_x")?)?
            }
            FormulaId::SumsqHb => sumsq_model(SumSqVariant::HeathBrown, need(x, "x")?, 0.0)?,
            FormulaId::LargeGapSum => large_gap_sum_model(
                need(x, "x")?,
                need(pi, "pi_x")?,
                args.h.ok_or(ModelError::MissingArg(self, "h"))?,
            )?,
            FormulaId::BrunC6 => brun_model(BrunVariant::C6, need_d()?, None, None)?,
            FormulaId::BrunPartial => brun_model(BrunVariant::Partial, need_d()?, x, None)?,
            FormulaId::BrunExtrap => {
                brun_model(BrunVariant::Extrapolated, need_d()?, x, args.partial)?
            }
            FormulaId::BrunB2Law => brun_model(BrunVariant::B2Law, need_d()?, x, args.partial)?,
            FormulaId::Mertens => mertens_model(need(x, "x")?)?,
            FormulaId::PfC7 => pf_model(PfVariant::C7, need_d()? as f64)?,
            FormulaId::PfShanks => pf_model(PfVariant::Shanks, need_d()? as f64)?,
            FormulaId::PfAsympt => pf_model(PfVariant::Asymptotic, need_d()? as f64)?,
            FormulaId::RC8 => andrica_c8(need(x, "x")?, need(pi, "pi_x")?)?,
            FormulaId::RCramer => andrica_r_cramer(need(x, "x")?)?,
            FormulaId::RShanks2 => andrica_shanks2(need_d()? as f64),
        };
        Ok(ModelEval {
            formula_id: self,
            x,
            d: args.d,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{C2, C2_HALF};
    use proptest::prelude::*;

    const REL: f64 = 1e-12;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    // Frozen expected values: each computed independently with 30-digit
    // arithmetic from the printed closed forms.

    #[test]
    fn tau_variants_at_known_point() {
        let x = 1e6;
        let pi = 78498.0;
        assert!(close(
            tau_model(TauVariant::C1PP, x, pi, 6).unwrap(),
            10159.681336742673,
            REL
        ));
        assert!(close(
            tau_model(TauVariant::C1, x, pi, 6).unwrap(),
            11563.434545146423,
            REL
        ));
        assert!(close(
            tau_model(TauVariant::C1P, x, pi, 6).unwrap(),
            12051.759347218605,
            REL
        ));
    }

    #[test]
    fn tau_c1_at_d2_equals_twin_square_form() {
        // Exponent vanishes at d = 2, leaving C2 * pi^2 / x.
        for &(x, pi) in &[(1e6, 78498.0), (1e4, 1229.0), (100.0, 25.0)] {
            let t = tau_model(TauVariant::C1, x, pi, 2).unwrap();
            let w = twin_model(TwinVariant::C2, x, pi).unwrap();
            assert_eq!(t, w);
        }
    }

    #[test]
    fn tau_rejects_dense_pi() {
        assert!(matches!(
            tau_model(TauVariant::C1, 100.0, 50.0, 6),
            Err(ModelError::DensityTooHigh { .. })
        ));
        assert!(matches!(
            tau_model(TauVariant::C1, 100.0, 25.0, 5),
            Err(ModelError::OddGap(5))
        ));
    }

    #[test]
    fn hl_pair_at_known_point() {
        assert!(close(
            hl_pair_model(1e6, 2).unwrap(),
            6_917.457_799_397_035,
            REL
        ));
        assert!(close(
            hl_pair_model(1e6, 6).unwrap(),
            13_834.915_598_794_07,
            REL
        ));
        // Equal at every power of two: the singular series is 1.
        let at = |d| hl_pair_model(1e6, d).unwrap();
        assert_eq!(at(2), at(4));
        assert_eq!(at(2), at(64));
        assert_eq!(at(2), at(1024));
    }

    #[test]
    fn consecutive_vs_all_pairs_factor() {
        // With pi = x/ln x, C1PP / HL collapses to exp(-d/ln x) exactly.
        for &x in &[1e4f64, 1e6, 1e10, 1e14] {
            for d in [2u64, 6, 30, 100, 210] {
                let pi = x / x.ln();
                let lhs =
                    tau_model(TauVariant::C1PP, x, pi, d).unwrap() / hl_pair_model(x, d).unwrap();
                let rhs = (-(d as f64) / x.ln()).exp();
                assert!(close(lhs, rhs, 1e-12), "x={x}, d={d}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn twin_examples() {
        assert!(close(
            twin_model(TwinVariant::C2, 100.0, 25.0).unwrap(),
            8.252_022_698_085_87,
            REL
        ));
        assert_eq!(twin_model(TwinVariant::Li2, 2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gmax_examples() {
        assert!(close(
            gmax_model(GmaxVariant::C4, 1e6, 78498.0).unwrap(),
            114.7038545642796,
            REL
        ));
        // ln²x at x = e.
        let e = std::f64::consts::E;
        assert!(close(
            gmax_model(GmaxVariant::Cramer, e, 0.0).unwrap(),
            1.0,
            REL
        ));
        // The Granville coefficient.
        assert!(close(
            gmax_model(GmaxVariant::Granville, e, 0.0).unwrap(),
            1.1229189671337703,
            REL
        ));
    }

    #[test]
    fn gmax_c4_with_pnt_pi_equals_pnt_form() {
        for &x in &[100.0, 1e6, 1e12] {
            let c4 = gmax_model(GmaxVariant::C4, x, x / x.ln()).unwrap();
            let pnt = gmax_model(GmaxVariant::Pnt, x, 0.0).unwrap();
            assert!(close(c4, pnt, 1e-12), "x={x}: {c4} vs {pnt}");
        }
    }

    #[test]
    fn gmax_rejects_negative_bracket() {
        // pi so small that 2 ln pi - ln x + c < 0.
        assert!(matches!(
            gmax_model(GmaxVariant::C4, 1e6, 3.0),
            Err(ModelError::NegativeBracket { .. })
        ));
    }

    #[test]
    fn sumsq_reference_columns() {
        // Evaluated at the largest prime below 2^24 with the even-gap count
        // in the pi slot; these are the two comparison columns for that row.
        let x = 16777213.0;
        let hb = sumsq_model(SumSqVariant::HeathBrown, x, 0.0).unwrap();
        assert_eq!(hb.round() as u64, 558195733);
        let c5 = sumsq_model(SumSqVariant::C5, x, (1077871 - 2) as f64).unwrap();
        assert_eq!(c5.round() as u64, 488725881);
    }

    #[test]
    fn sumsq_simple_approaches_c5() {
        // SIMPLE/C5 → 1 as pi/x → 0.
        let x = 1e12;
        let pi = 1e4;
        let c5 = sumsq_model(SumSqVariant::C5, x, pi).unwrap();
        let simple = sumsq_model(SumSqVariant::Simple, x, pi).unwrap();
        assert!(close(simple / c5, 1.0, 1e-7));
        assert!(matches!(
            sumsq_model(SumSqVariant::C5, 10.0, 5.0),
            Err(ModelError::DensityTooHigh { .. })
        ));
    }

    #[test]
    fn tail_sum_examples() {
        // H = 2 collapses to x.
        for &(x, pi) in &[(1e6, 78498.0), (256.0, 54.0)] {
            let v = large_gap_sum_model(x, pi, 2).unwrap();
            assert!(close(v, x, 1e-12), "H=2 at x={x}: {v}");
        }
        assert!(close(
            large_gap_sum_model(1e6, 78498.0, 4).unwrap(),
            975352.255984,
            1e-9
        ));
        assert!(matches!(
            large_gap_sum_model(1e6, 78498.0, 1),
            Err(ModelError::TailBound(1))
        ));
    }

    #[test]
    fn brun_examples() {
        // d = 2: the limit form gives 2 c2 = C2, far below the true 1.90216.
        assert!(close(
            brun_model(BrunVariant::C6, 2, None, None).unwrap(),
            C2,
            REL
        ));
        // d = 4: c2.
        assert!(close(
            brun_model(BrunVariant::C6, 4, None, None).unwrap(),
            C2_HALF,
            REL
        ));
        // The partial law climbs monotonically towards the C6 limit, whose
        // prefactor 2C₂/d it shares exactly (C₂ = 2c₂ bit-for-bit).
        for d in [2u64, 6, 30] {
            let c6 = brun_model(BrunVariant::C6, d, None, None).unwrap();
            let s = crate::constants::singular_series(d).unwrap();
            assert_eq!(c6, 2.0 * C2 / d as f64 * s);
            let mut prev = 0.0;
            for &x in &[1e3, 1e6, 1e12, 1e100, 1e300] {
                let p = brun_model(BrunVariant::Partial, d, Some(x), None).unwrap();
                assert!(p > prev && p < c6, "d={d}, x={x}: {p} vs limit {c6}");
                prev = p;
            }
            // Within the analytic envelope 1 - e^(-t) <= t of the limit.
            let shortfall = (c6 - prev) / c6;
            assert!(shortfall <= d as f64 / 1e300f64.ln(), "d={d}: {shortfall}");
        }
        // ... and it vanishes as x → 1+.
        let near_one = brun_model(BrunVariant::Partial, 6, Some(1.0001), None).unwrap();
        assert!(near_one < 1e-200);
    }

    #[test]
    fn brun_extrapolation_consistency() {
        // Extrapolating the partial-law value itself recovers the C6 limit.
        let d = 12u64;
        let x = 2f64.powi(46);
        let partial = brun_model(BrunVariant::Partial, d, Some(x), None).unwrap();
        let extrap = brun_model(BrunVariant::Extrapolated, d, Some(x), Some(partial)).unwrap();
        let c6 = brun_model(BrunVariant::C6, d, None, None).unwrap();
        assert!(close(extrap, c6, 1e-12));
        assert_eq!(
            brun_model(BrunVariant::Extrapolated, d, Some(x), None),
            Err(ModelError::MissingPartial)
        );
        assert_eq!(
            brun_model(BrunVariant::B2Law, 6, Some(x), Some(0.5)),
            Err(ModelError::B2LawGap(6))
        );
    }

    #[test]
    fn mertens_examples() {
        let e_e = std::f64::consts::E.powf(std::f64::consts::E);
        assert!(close(mertens_model(e_e).unwrap(), 1.2614972128476428, REL));
        assert!(close(
            mertens_model(2f64.powi(24)).unwrap(),
            3.0730381226139241,
            REL
        ));
    }

    #[test]
    fn pf_examples() {
        assert!(close(
            pf_model(PfVariant::C7, 4.0).unwrap(),
            16.607_513_960_743_32,
            REL
        ));
        assert!(close(
            pf_model(PfVariant::C7, 100.0).unwrap(),
            286_145.701_175_362_1,
            REL
        ));
        assert!(close(
            pf_model(PfVariant::Shanks, 100.0).unwrap(),
            22026.465794806717,
            REL
        ));
        // For large d, C7 approaches the sqrt(d)-weighted form from above.
        let ratio =
            pf_model(PfVariant::C7, 1e5).unwrap() / pf_model(PfVariant::Asymptotic, 1e5).unwrap();
        assert!(ratio > 1.0 && ratio < 1.1, "ratio {ratio}");
    }

    #[test]
    fn andrica_examples() {
        assert!(close(andrica_kernel(9.0), 0.579_709_161_117_091_3, REL));
        // t = 9 is the maximum.
        for t in [4.0, 8.0, 8.9, 9.1, 10.0, 14.0] {
            assert!(andrica_kernel(t) < andrica_kernel(9.0));
        }
        let e = std::f64::consts::E;
        assert!(close(
            andrica_r_cramer(e).unwrap(),
            0.303_265_329_856_316_7,
            REL
        ));
        assert!(close(andrica_shanks2(4.0), 0.735_758_882_342_884_7, REL));
    }

    #[test]
    fn andrica_c8_vanishes_at_infinity() {
        // Strictly decreasing along growing thresholds (pi = x/ln x here;
        // the sieve is out of reach at 1e12).
        let mut prev = f64::INFINITY;
        for &x in &[1e3, 1e6, 1e9, 1e12] {
            let v = andrica_c8(x, x / x.ln()).unwrap();
            assert!(v < prev, "R estimate must decrease: {v} at x={x}");
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn delta_is_zero_on_model_data() {
        let x = 2f64.powi(24);
        let pi = 1077871.0;
        let model = tau_model(TauVariant::C1, x, pi, 6).unwrap();
        assert_eq!(delta(x, pi, 6, model).unwrap(), 0.0);
    }

    #[test]
    fn monotonicity_checks() {
        let mut prev = 0.0;
        for &x in &[10.0, 100.0, 1e4, 1e8, 1e12] {
            let v = gmax_model(GmaxVariant::Cramer, x, 0.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for &x in &[10.0, 100.0, 1e4, 1e8, 1e12] {
            let v = mertens_model(x).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for d in [2u64, 6, 20, 100, 500, 2000] {
            let v = pf_model(PfVariant::C7, d as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn evaluate_dispatcher_round_trips() {
        let args = EvalArgs {
            x: Some(1e6),
            pi_x: Some(78498.0),
            d: Some(6),
            h: Some(4),
            partial: Some(0.5),
        };
        for id in [
            FormulaId::HlPair,
            FormulaId::TauC1,
            FormulaId::TauC1P,
            FormulaId::TauC1PP,
            FormulaId::TwinC2,
            FormulaId::TwinHl,
            FormulaId::TwinLi2,
            FormulaId::GmaxC4,
            FormulaId::GmaxPnt,
            FormulaId::GmaxCramer,
            FormulaId::GmaxGranville,
            FormulaId::SumsqC5,
            FormulaId::SumsqSimple,
            FormulaId::SumsqHb,
            FormulaId::LargeGapSum,
            FormulaId::BrunC6,
            FormulaId::BrunPartial,
            FormulaId::BrunExtrap,
            FormulaId::Mertens,
            FormulaId::PfC7,
            FormulaId::PfShanks,
            FormulaId::PfAsympt,
            FormulaId::RC8,
            FormulaId::RCramer,
            FormulaId::RShanks2,
        ] {
            let eval = id.evaluate(&args).unwrap();
            assert_eq!(eval.formula_id, id);
            assert!(eval.value.is_finite() && eval.value >= 0.0, "{id:?}");
        }
        // B2 law needs d in {2, 4}.
        let eval = FormulaId::BrunB2Law
            .evaluate(&EvalArgs { d: Some(2), ..args })
            .unwrap();
        assert!(eval.value.is_finite());
        assert!(matches!(
            FormulaId::TauC1.evaluate(&EvalArgs::default()),
            Err(ModelError::MissingArg(FormulaId::TauC1, "x"))
        ));
    }

    #[test]
    fn c1_to_c1pp_window_at_2_30() {
        // With the exact prime count at 2^30, the two forms agree to 1%
        // exactly where the exponent and power balance, around d = 36..42.
        let x = 2f64.powi(30);
        let pi = 54_400_028.0;
        for d in [38u64, 40, 42] {
            let ratio = tau_model(TauVariant::C1, x, pi, d).unwrap()
                / tau_model(TauVariant::C1PP, x, pi, d).unwrap();
            assert!((0.99..=1.01).contains(&ratio), "d={d}: ratio {ratio}");
        }
    }

    proptest! {
        /// For a fixed gap the C1 and C1'' forms approach each other as x
        /// grows. Convergence only becomes monotone once ln x clears d, so
        /// the comparison points scale with the gap.
        #[test]
        fn c1_family_converges(half in 1u64..21) {
            let d = 2 * half;
            let ratio_at = |x: f64| {
                let pi = x / x.ln();
                tau_model(TauVariant::C1, x, pi, d).unwrap()
                    / tau_model(TauVariant::C1PP, x, pi, d).unwrap()
            };
            let x1 = (2.0 * (d as f64 + 8.0)).exp();
            let x2 = x1 * x1;
            let near = (ratio_at(x1) - 1.0).abs();
            let far = (ratio_at(x2) - 1.0).abs();
            prop_assert!(far < near, "d={d}: |ratio-1| {near} -> {far}");
            prop_assert!(far < 0.1, "d={d}: far ratio {far}");
        }
    }
}
