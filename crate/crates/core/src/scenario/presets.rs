//! Built-in scenarios, one per dichotomy family plus a zero-perturbation
//! baseline. Load them with `preset:<name>`.

use std::f64::consts::LN_2;

use super::*;

pub const PRESETS: &[&str] = &[
    "zero",
    "ratio_form",
    "exponential",
    "polynomial_ratio",
    "polynomial_shift",
    "mixed",
    "nonhyperbolic",
    "growth_rate",
    "power_local",
    "polynomial_local",
];

fn base(
    name: &str,
    cocycle: CocycleSpec,
    bounds: BoundFamily,
    perturbation: PerturbationSpec,
) -> Scenario {
    Scenario {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        horizon: 60,
        seed: 7,
        cocycle,
        bounds,
        perturbation,
        radii: None,
        certificate: CertificateSettings::default(),
        solver: SolverSettings::default(),
        verification: VerificationSettings::default(),
        output: None,
    }
}

fn scaled(profile: PerturbationProfile, coefficient: Sequence) -> PerturbationSpec {
    PerturbationSpec {
        profile,
        coefficient: Some(coefficient),
    }
}

/// `diag(e^{-1}, e^{1/2})`.
fn exponential_cocycle() -> CocycleSpec {
    CocycleSpec::Diagonal {
        stable: vec![Sequence::constant((-1.0f64).exp())],
        unstable: vec![Sequence::constant(0.5f64.exp())],
    }
}

fn exponential_bounds() -> BoundFamily {
    BoundFamily::exponential(1.0, -1.0, 0.5, 0.1)
}

fn ratio_power(exponent: f64) -> Sequence {
    Sequence::RatioPower { exponent }
}

/// `diag(((n+1)/n)^{-6}, ((n+1)/n)^6)`, exact for `(m/n)^{∓6}`.
fn polynomial_cocycle() -> CocycleSpec {
    CocycleSpec::Diagonal {
        stable: vec![ratio_power(-6.0)],
        unstable: vec![ratio_power(6.0)],
    }
}

fn polynomial_ratio_bounds() -> BoundFamily {
    BoundFamily::PolynomialRatio {
        scale: 1.0,
        stable_rate: -6.0,
        unstable_rate: 6.0,
        nonuniformity: 0.1,
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    let s = match name {
        "zero" => {
            let mut s = base(
                "zero",
                exponential_cocycle(),
                exponential_bounds(),
                PerturbationSpec {
                    profile: PerturbationProfile::Zero,
                    coefficient: None,
                },
            );
            s.horizon = 30;
            s
        }
        "ratio_form" => {
            let a = Sequence::exponential(1.0, 1.0);
            let b = Sequence::exponential(1.0, 0.5);
            let c = Sequence::OnePlusReciprocal { scale: 1.0 };
            base(
                "ratio_form",
                CocycleSpec::RatioDiagonal {
                    a: a.clone(),
                    b: b.clone(),
                    c: c.clone(),
                    d: c.clone(),
                },
                BoundFamily::RatioForm {
                    a,
                    b,
                    c: c.clone(),
                    d: c,
                },
                scaled(
                    PerturbationProfile::Saturating,
                    Sequence::exponential(0.01, -0.5),
                ),
            )
        }
        "exponential" => base(
            "exponential",
            exponential_cocycle(),
            exponential_bounds(),
            scaled(
                PerturbationProfile::Saturating,
                Sequence::exponential(0.01, -0.2),
            ),
        ),
        "polynomial_ratio" => base(
            "polynomial_ratio",
            polynomial_cocycle(),
            polynomial_ratio_bounds(),
            scaled(PerturbationProfile::Saturating, Sequence::power(1e-3, -1.2)),
        ),
        "polynomial_shift" => base(
            "polynomial_shift",
            CocycleSpec::Diagonal {
                stable: vec![Sequence::constant((-1.0f64).exp())],
                unstable: vec![Sequence::constant(1.0f64.exp())],
            },
            // sup_j (j+1)^4 e^{-j} < 13
            BoundFamily::PolynomialShift {
                scale: 13.0,
                stable_rate: -4.0,
                unstable_rate: 4.0,
                nonuniformity: 0.1,
            },
            scaled(PerturbationProfile::Saturating, Sequence::power(1e-3, -1.2)),
        ),
        "mixed" => base(
            "mixed",
            CocycleSpec::Diagonal {
                stable: vec![Sequence::constant((-1.0f64).exp())],
                unstable: vec![ratio_power(6.0)],
            },
            BoundFamily::mixed(exponential_bounds(), polynomial_ratio_bounds()),
            scaled(PerturbationProfile::Saturating, Sequence::power(1e-3, -1.2)),
        ),
        "nonhyperbolic" => {
            let mut s = base(
                "nonhyperbolic",
                CocycleSpec::Alternating {
                    factor: 3.0,
                    unstable: 2.0,
                },
                BoundFamily::mixed(
                    BoundFamily::exponential(3.0, 0.0, 0.0, 0.0),
                    BoundFamily::exponential(1.0, 0.0, LN_2, 0.0),
                ),
                scaled(
                    PerturbationProfile::Saturating,
                    Sequence::exponential(0.01, -0.5),
                ),
            );
            // the alternating factor 3 needs a finer grid to meet the default tolerance
            s.solver.points_per_axis = 65;
            s
        }
        "growth_rate" => {
            // μ_m = ν_m = m + 1; the cocycle lags the bound by one step, hence D = 2^6
            let mu = Sequence::Linear {
                intercept: 1.0,
                slope: 1.0,
            };
            let mut s = base(
                "growth_rate",
                CocycleSpec::Diagonal {
                    stable: vec![ratio_power(-6.0)],
                    unstable: vec![ratio_power(6.0)],
                },
                BoundFamily::GrowthRate {
                    scale: 64.0,
                    stable_rate: -6.0,
                    unstable_rate: 6.0,
                    nonuniformity: 0.1,
                    mu: mu.clone(),
                    nu: mu,
                },
                PerturbationSpec {
                    profile: PerturbationProfile::Power { c: 0.1, q: 1.0 },
                    coefficient: None,
                },
            );
            s.radii = Some(Sequence::power(5e-4, -2.0));
            s
        }
        "power_local" => {
            let mut s = base(
                "power_local",
                exponential_cocycle(),
                exponential_bounds(),
                PerturbationSpec {
                    profile: PerturbationProfile::Power { c: 0.1, q: 1.0 },
                    coefficient: None,
                },
            );
            s.radii = Some(Sequence::exponential(0.1, -0.5));
            s
        }
        "polynomial_local" => {
            let mut s = base(
                "polynomial_local",
                polynomial_cocycle(),
                polynomial_ratio_bounds(),
                PerturbationSpec {
                    profile: PerturbationProfile::Power { c: 0.1, q: 1.0 },
                    coefficient: None,
                },
            );
            s.radii = Some(Sequence::power(0.01, -2.0));
            s
        }
        _ => return None,
    };
    Some(s)
}
