//! Long-path fiber lengths that hit a target differential dispersion while
//! keeping the interferometer delay fixed.
//!
//! With two long-path fiber types the constraints form a square system:
//!
//! ```text
//! Σⱼ n_g,ⱼ Lⱼ / c − n_g,s L_s / c = ΔT
//! Σⱼ β₂,ⱼ Lⱼ     − β₂,s L_s     = Δ(β₂L)
//! ```

use serde::{Deserialize, Serialize};

use crate::dispersion::{stack_moments, FiberCatalog, FiberSegment, FiberSpec, PathStack};
use crate::error::{FransonError, Result};
use crate::units::{C_MM_PER_NS, FS2_TO_PS2};

/// Largest accepted delay residual, ns.
pub const DELAY_TOLERANCE_NS: f64 = 1e-3;

/// Largest accepted dispersion residual, ps².
pub const DISPERSION_TOLERANCE_PS2: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub target_d_beta2_l: f64,
    pub delta_t_ns: f64,
    pub short_fiber: FiberSpec,
    pub short_length_mm: f64,
    /// One or two long-path fiber types.
    pub long_fibers: Vec<FiberSpec>,
}

/// Lengths that solve the equality constraints but violate non-negativity.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedSolution {
    pub lengths_mm: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSolution {
    pub lengths_mm: Vec<(FiberSpec, f64)>,
    pub achieved_d_beta2_l: f64,
    pub achieved_delay_ns: f64,
    pub dispersion_residual: f64,
    pub delay_residual_ns: f64,
}

impl DesignSolution {
    pub fn long_stack(&self) -> PathStack {
        PathStack::new(
            self.lengths_mm
                .iter()
                .map(|(f, l)| FiberSegment {
                    fiber: f.clone(),
                    length_mm: *l,
                })
                .collect(),
        )
    }
}

impl DesignProblem {
    fn validate(&self) -> Result<()> {
        if !(self.delta_t_ns > 0.0 && self.delta_t_ns.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "design delay must be positive, got {} ns",
                self.delta_t_ns
            )));
        }
        if !(self.short_length_mm >= 0.0 && self.short_length_mm.is_finite()) {
            return Err(FransonError::Configuration(format!(
                "short path length must be non-negative, got {} mm",
                self.short_length_mm
            )));
        }
        if !self.target_d_beta2_l.is_finite() {
            return Err(FransonError::Configuration("target must be finite".into()));
        }
        if self.long_fibers.is_empty() || self.long_fibers.len() > 2 {
            return Err(FransonError::Configuration(format!(
                "the long path takes one or two fiber types, got {}",
                self.long_fibers.len()
            )));
        }
        self.short_fiber.validate()?;
        self.long_fibers.iter().try_for_each(FiberSpec::validate)
    }

    pub fn short_stack(&self) -> Result<PathStack> {
        PathStack::single(self.short_fiber.clone(), self.short_length_mm)
    }

    fn short_delay_ns(&self) -> f64 {
        self.short_fiber.group_index * self.short_length_mm / C_MM_PER_NS
    }

    fn short_beta2_l_fs2(&self) -> f64 {
        self.short_fiber.beta2 * self.short_length_mm
    }
}

pub fn solve_lengths(p: &DesignProblem) -> Result<DesignSolution> {
    p.validate()?;
    // required Σ n_g L (mm) and Σ β₂ L (fs²) on the long path
    let optical = (p.delta_t_ns + p.short_delay_ns()) * C_MM_PER_NS;
    let dispersive = p.target_d_beta2_l / FS2_TO_PS2 + p.short_beta2_l_fs2();

    let lengths = match p.long_fibers.as_slice() {
        [a, b] if a != b => {
            let det = a.group_index * b.beta2 - b.group_index * a.beta2;
            let scale = (a.group_index * b.beta2)
                .abs()
                .max((b.group_index * a.beta2).abs());
            if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(FransonError::Configuration(format!(
                    "fibers '{}' and '{}' give a singular design system",
                    a.name, b.name
                )));
            }
            let la = (optical * b.beta2 - b.group_index * dispersive) / det;
            let lb = (a.group_index * dispersive - optical * a.beta2) / det;
            vec![(a.clone(), la), (b.clone(), lb)]
        }
        [a] | [a, _] => {
            // one fiber type: the delay fixes the length; dispersion must follow
            let l = optical / a.group_index;
            let reached = (a.beta2 * l - p.short_beta2_l_fs2()) * FS2_TO_PS2;
            if (reached - p.target_d_beta2_l).abs() > DISPERSION_TOLERANCE_PS2 {
                return Err(FransonError::Infeasible {
                    reason: format!(
                        "a single fiber type '{}' fixed by the delay gives Δ(β₂L) = {reached:.6e} ps², not {:.6e} ps²",
                        a.name, p.target_d_beta2_l
                    ),
                    unconstrained: None,
                });
            }
            vec![(a.clone(), l)]
        }
        _ => unreachable!("validated to one or two fibers"),
    };

    if lengths.iter().any(|(_, l)| *l < 0.0) {
        let unconstrained = UnconstrainedSolution {
            lengths_mm: lengths.iter().map(|(f, l)| (f.name.clone(), *l)).collect(),
        };
        let listed: Vec<String> = unconstrained
            .lengths_mm
            .iter()
            .map(|(n, l)| format!("{n} = {l:.3} mm"))
            .collect();
        return Err(FransonError::Infeasible {
            reason: format!("solution requires negative length ({})", listed.join(", ")),
            unconstrained: Some(unconstrained),
        });
    }

    let solution_stack = PathStack::new(
        lengths
            .iter()
            .map(|(f, l)| FiberSegment::new(f.clone(), *l))
            .collect::<Result<Vec<_>>>()?,
    );
    let short = p.short_stack()?;
    let achieved_d_beta2_l = stack_moments(&solution_stack, &short).d_beta2_l;
    let achieved_delay_ns = solution_stack.group_delay_ns() - short.group_delay_ns();
    let dispersion_residual = achieved_d_beta2_l - p.target_d_beta2_l;
    let delay_residual_ns = achieved_delay_ns - p.delta_t_ns;
    if dispersion_residual.abs() > DISPERSION_TOLERANCE_PS2
        || delay_residual_ns.abs() > DELAY_TOLERANCE_NS
    {
        return Err(FransonError::Configuration(format!(
            "design residuals out of tolerance: {dispersion_residual:.3e} ps², {:.3e} ps",
            delay_residual_ns * 1e3
        )));
    }
    Ok(DesignSolution {
        lengths_mm: lengths,
        achieved_d_beta2_l,
        achieved_delay_ns,
        dispersion_residual,
        delay_residual_ns,
    })
}

/// Design problem file (TOML). Fiber names resolve against the built-in
/// catalog plus any `[[fiber]]` entries in the same file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblemFile {
    pub target_d_beta2_ps2: f64,
    pub delta_t_ns: f64,
    pub short_fiber: String,
    pub short_length_mm: f64,
    pub long_fibers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber: Vec<FiberSpec>,
}

impl DesignProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FransonError::Parse(e.to_string()))
    }

    pub fn resolve(&self, base: &FiberCatalog) -> Result<DesignProblem> {
        let mut catalog = base.clone();
        catalog.extend(self.fiber.iter().cloned())?;
        Ok(DesignProblem {
            target_d_beta2_l: self.target_d_beta2_ps2,
            delta_t_ns: self.delta_t_ns,
            short_fiber: catalog.get(&self.short_fiber)?.clone(),
            short_length_mm: self.short_length_mm,
            long_fibers: self
                .long_fibers
                .iter()
                .map(|n| catalog.get(n).cloned())
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonlocal_problem(target: f64) -> DesignProblem {
        DesignProblem {
            target_d_beta2_l: target,
            delta_t_ns: 4.77,
            short_fiber: FiberSpec::smf(),
            short_length_mm: 1900.0,
            long_fibers: vec![FiberSpec::leaf(), FiberSpec::smf()],
        }
    }

    #[test]
    fn reproduces_idler_arm_lengths() {
        let sol = solve_lengths(&nonlocal_problem(2.2018e-2)).unwrap();
        let leaf = sol.lengths_mm[0].1;
        let smf = sol.lengths_mm[1].1;
        assert!((leaf / 2695.0 - 1.0).abs() < 0.05, "{leaf}");
        assert!((smf / 180.0 - 1.0).abs() < 0.05, "{smf}");
        assert!(sol.dispersion_residual.abs() <= 1e-5);
        assert!(sol.delay_residual_ns.abs() <= 1e-3);
    }

    #[test]
    fn local_cancellation_round_trips() {
        let p = nonlocal_problem(0.0);
        let sol = solve_lengths(&p).unwrap();
        let d = stack_moments(&sol.long_stack(), &p.short_stack().unwrap());
        assert!(d.d_beta2_l.abs() <= 1e-5);
        assert!(sol.lengths_mm.iter().all(|(_, l)| *l >= 0.0));
    }

    #[test]
    fn single_fiber_cannot_null_dispersion() {
        let mut p = nonlocal_problem(0.0);
        p.long_fibers = vec![FiberSpec::smf()];
        assert!(matches!(
            solve_lengths(&p),
            Err(FransonError::Infeasible { .. })
        ));
        p.long_fibers = vec![FiberSpec::smf(), FiberSpec::smf()];
        assert!(matches!(
            solve_lengths(&p),
            Err(FransonError::Infeasible { .. })
        ));
    }

    #[test]
    fn single_fiber_consistent_target_is_solved() {
        let mut p = nonlocal_problem(0.0);
        p.long_fibers = vec![FiberSpec::smf()];
        let extra = 4.77 * C_MM_PER_NS / 1.468;
        p.target_d_beta2_l = -22.5 * extra * FS2_TO_PS2;
        let sol = solve_lengths(&p).unwrap();
        assert!((sol.lengths_mm[0].1 - 1900.0 - extra).abs() < 1e-9);
    }

    #[test]
    fn equal_dispersion_distinct_fibers_is_singular() {
        let mut p = nonlocal_problem(0.0);
        p.long_fibers = vec![FiberSpec::smf(), FiberSpec::new("SMF-c", -22.5)];
        assert!(matches!(
            solve_lengths(&p),
            Err(FransonError::Configuration(_))
        ));
    }

    #[test]
    fn negative_length_reports_unconstrained_solution() {
        // far beyond what LEAF/SMF can reach inside a 4.77 ns delay
        let err = solve_lengths(&nonlocal_problem(0.2)).unwrap_err();
        match err {
            FransonError::Infeasible {
                unconstrained: Some(u),
                ..
            } => assert!(u.lengths_mm.iter().any(|(_, l)| *l < 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scaling_is_linear() {
        let mut p = nonlocal_problem(-1.0e-2);
        p.short_length_mm = 0.0;
        let a = solve_lengths(&p).unwrap();
        p.target_d_beta2_l *= 2.0;
        p.delta_t_ns *= 2.0;
        let b = solve_lengths(&p).unwrap();
        for ((_, la), (_, lb)) in a.lengths_mm.iter().zip(&b.lengths_mm) {
            assert!((lb - 2.0 * la).abs() < 1e-9 * la.abs().max(1.0));
        }
    }

    #[test]
    fn problem_file_resolves_names() {
        let text = r#"
            target_d_beta2_ps2 = 0.022018
            delta_t_ns = 4.77
            short_fiber = "SMF"
            short_length_mm = 1900.0
            long_fibers = ["LEAF", "SMF"]
        "#;
        let file = DesignProblemFile::parse(text).unwrap();
        let p = file.resolve(&FiberCatalog::builtin()).unwrap();
        assert_eq!(p, nonlocal_problem(0.022018));
        assert!(DesignProblemFile::parse("target = 1").is_err());
    }
}
