//! Re-checks the acceptance assertions that a run report carries.
//!
//! Criteria 4 to 10 are decided from the report alone, so `verify` never
//! touches a field. Criteria 1 to 3 and 11 concern sampled data and the
//! algebra, not a run, and are checked by the acceptance test target.

use std::fmt;

use crate::report::{Report, StageReport};

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub measured: String,
    pub expected: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {}  measured: {}  expected: {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.measured,
            self.expected
        )
    }
}

fn result(id: u32, name: &'static str, pass: bool, measured: String, expected: impl Into<String>) -> CriterionResult {
    CriterionResult {
        id,
        name,
        pass,
        measured,
        expected: expected.into(),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Stage with the smallest ε.
fn finest(report: &Report) -> &StageReport {
    report
        .stages
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .expect("validated report has stages")
}

/// Counts decreases; fails on more than one or on one larger than
/// `slack` relative to the previous value.
pub fn nearly_nondecreasing(xs: &[f64], slack: f64) -> bool {
    let drops: Vec<f64> = xs
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| (w[0] - w[1]) / w[0].abs())
        .collect();
    drops.len() <= 1 && drops.iter().all(|&d| d <= slack)
}

pub fn evaluate(report: &Report) -> Vec<CriterionResult> {
    vec![
        competitor(report),
        monotonicity(report),
        core_scaling(report),
        degrees(report),
        annulus(report),
        matching(report),
        decay(report),
    ]
}

fn competitor(report: &Report) -> CriterionResult {
    let pass = report
        .stages
        .iter()
        .all(|s| s.solve.converged && s.solve.energy.total <= s.reference_energy);
    let measured = report
        .stages
        .iter()
        .map(|s| {
            format!(
                "eps={}: E={:.6} vs {:.6}{}",
                s.eps,
                s.solve.energy.total,
                s.reference_energy,
                if s.solve.converged { "" } else { " (not converged)" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    result(4, "energy competitor", pass, measured, "converged and E <= E(sampled boundary map)")
}

fn monotonicity(report: &Report) -> CriterionResult {
    let slack = report.config.analysis.monotonicity_slack;
    let mut pass = !report.stages.is_empty();
    let mut measured = Vec::new();
    for s in &report.stages {
        let vals: Vec<f64> = s.ball_ratios.iter().map(|r| r.value).collect();
        pass &= vals.len() == report.config.analysis.ball_radii.len() && nearly_nondecreasing(&vals, slack);
        measured.push(format!("eps={}: {}", s.eps, fmt_list(&vals)));
    }
    result(
        5,
        "ball ratio monotone",
        pass,
        measured.join("; "),
        format!("nondecreasing, at most one drop of relative size <= {slack}"),
    )
}

fn core_scaling(report: &Report) -> CriterionResult {
    let h = report.grid_spacing;
    let mut pass = report.stages.len() >= 2;
    let mut measured = Vec::new();
    let mut rows = Vec::new();
    for s in &report.stages {
        let Some(c) = s.core_sizes.iter().find(|c| (c.fraction - 0.5).abs() < 1e-9) else {
            pass = false;
            measured.push(format!("eps={}: no diameter at fraction 0.5", s.eps));
            continue;
        };
        let close = c.predicted.is_some_and(|p| (p - c.measured).abs() <= 3.0 * h);
        pass &= close;
        measured.push(format!(
            "eps={}: d={:.4} predicted={}",
            s.eps,
            c.measured,
            c.predicted.map_or("none".to_string(), |p| format!("{p:.4}"))
        ));
        rows.push((s.eps, c.measured));
    }
    for w in rows.windows(2) {
        let ratio = w[1].1 / w[0].1;
        // A halving of ε expects a ratio in [0.35, 0.65].
        let scale = w[1].0 / w[0].0;
        pass &= ratio >= 0.7 * scale && ratio <= 1.3 * scale;
        measured.push(format!("ratio {}->{}: {ratio:.3}", w[0].0, w[1].0));
    }
    result(
        6,
        "core scaling",
        pass,
        measured.join("; "),
        format!("ratio in [0.7, 1.3] x eps ratio; |predicted - measured| <= 3h = {:.4}", 3.0 * h),
    )
}

fn degrees(report: &Report) -> CriterionResult {
    let mut pass = !report.stages.is_empty();
    let mut measured = Vec::new();
    for s in &report.stages {
        let Some(d) = &s.defect else {
            pass = false;
            measured.push(format!("eps={}: analysis failed", s.eps));
            continue;
        };
        pass &= !d.degrees.is_empty();
        for e in &d.degrees {
            match &e.degree {
                Some(deg) => {
                    pass &= deg.degree == 1 && (deg.raw - deg.signed as f64).abs() <= 0.05;
                    measured.push(format!("eps={} r={}: {} (raw {:.4})", s.eps, e.radius, deg.degree, deg.raw));
                }
                None => {
                    pass = false;
                    measured.push(format!(
                        "eps={} r={}: undefined ({})",
                        s.eps,
                        e.radius,
                        e.failure.as_deref().unwrap_or("?")
                    ));
                }
            }
        }
    }
    result(7, "degree", pass, measured.join("; "), "1 with rounding residual <= 0.05")
}

fn annulus_column(report: &Report) -> Option<Vec<f64>> {
    report
        .stages
        .iter()
        .map(|s| s.defect.as_ref().and_then(|d| d.annulus_sup.first()).map(|a| a.sup_deviation))
        .collect()
}

fn annulus(report: &Report) -> CriterionResult {
    let a = &report.config.analysis;
    let expected = format!("strictly decreasing along the ladder on [{}, {}]", a.annulus_inner, a.annulus_outer);
    match annulus_column(report) {
        Some(col) => result(
            8,
            "uniform convergence",
            col.len() >= 2 && strictly_decreasing(&col),
            fmt_list(&col),
            expected,
        ),
        None => result(8, "uniform convergence", false, "missing annulus rows".into(), expected),
    }
}

fn matching(report: &Report) -> CriterionResult {
    let s = finest(report);
    let expected = "residual decreasing in radius; sup deviation at largest radius < outer annulus sup";
    let Some(b) = &s.blowup else {
        return result(9, "inner/outer matching", false, format!("eps={}: no blow-up", s.eps), expected);
    };
    let residuals: Option<Vec<f64>> = b.spheres.iter().map(|x| x.fit.map(|f| f.residual)).collect();
    let last_sup = b.spheres.last().and_then(|x| x.sup_deviation);
    let outer = s.defect.as_ref().and_then(|d| d.annulus_sup.first()).map(|a| a.sup_deviation);
    let (Some(residuals), Some(last_sup), Some(outer)) = (residuals, last_sup, outer) else {
        let why: Vec<String> = b
            .spheres
            .iter()
            .filter_map(|x| x.failure.as_ref().map(|f| format!("r={}: {f}", x.radius)))
            .collect();
        return result(
            9,
            "inner/outer matching",
            false,
            format!("eps={}: incomplete blow-up data {}", s.eps, why.join("; ")),
            expected,
        );
    };
    let pass = residuals.len() >= 2 && strictly_decreasing(&residuals) && last_sup < outer;
    let radii: Vec<f64> = b.spheres.iter().map(|x| x.radius).collect();
    result(
        9,
        "inner/outer matching",
        pass,
        format!(
            "eps={} radii {:?} eps: residuals {}, sup {:.4e} vs annulus {:.4e}",
            s.eps,
            radii,
            fmt_list(&residuals),
            last_sup,
            outer
        ),
        expected,
    )
}

fn decay(report: &Report) -> CriterionResult {
    let s = finest(report);
    let vals: Vec<f64> = s.decay.iter().map(|d| d.value).collect();
    let radii: Vec<f64> = s.decay.iter().map(|d| d.radius).collect();
    let pass = vals.len() >= 3 && vals.windows(2).all(|w| w[1] <= w[0]);
    result(
        10,
        "radial derivative decay",
        pass,
        format!("eps={} R={radii:?}: {}", s.eps, fmt_list(&vals)),
        "nonincreasing over >= 3 dyadic radii",
    )
}
