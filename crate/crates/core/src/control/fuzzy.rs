//! Takagi–Sugeno fuzzy inference.
//!
//! A model is a list of If-Then rules. Each rule grades the crisp input
//! vector through one membership function per input; the rule weight is the
//! product of the grades, and the model output is the weight-normalized
//! average of the rules' affine consequents.
//!
//! # Example
//!
//! ```
//! use mldrive::control::fuzzy::*;
//!
//! let rule = FuzzyRule {
//!     antecedents: vec![MembershipFunction::Triangular { a: -1.0, b: 0.0, c: 1.0 }],
//!     consequent: vec![2.0, 0.0],
//! };
//! let model = TSModel { rules: vec![rule], input_dim: 1 };
//! // A single covered rule returns its consequent exactly.
//! assert_eq!(ts_infer(&model, &[0.5]).unwrap(), 2.0);
//! ```

use crate::error::{DriveError, Result};

// ──────────────────────────────────────────────────────────────────────────
// Membership functions
// ──────────────────────────────────────────────────────────────────────────

/// Fuzzy set on the real line; grades lie in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction {
    /// Triangle with feet `a`, `c` and peak `b` (a ≤ b ≤ c).
    Triangular { a: f64, b: f64, c: f64 },
    /// Gaussian bump centered at `mean` with width `sigma` > 0.
    Gaussian { mean: f64, sigma: f64 },
}

impl MembershipFunction {
    /// Degree of membership of `x`, always in [0, 1].
    pub fn grade(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::Triangular { a, b, c } => {
                if x == b {
                    1.0
                } else if x <= a || x >= c {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else {
                    (c - x) / (c - b)
                }
            }
            MembershipFunction::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MembershipFunction::Triangular { a, b, c } => a <= b && b <= c,
            MembershipFunction::Gaussian { sigma, .. } => sigma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(DriveError::Config {
                line: 0,
                message: format!("ill-formed membership function {self:?}"),
            })
        }
    }
}

// ──────────────────────────────────────────────────────────────────────────
// Rules and models
// ──────────────────────────────────────────────────────────────────────────

/// One If-Then rule: antecedent sets over each input, affine consequent
/// y = c₀ + c₁x₁ + … + cₙxₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRule {
    /// One membership function per input dimension.
    pub antecedents: Vec<MembershipFunction>,
    /// Consequent coefficients, length n+1 (constant term first).
    pub consequent: Vec<f64>,
}

/// A complete Takagi–Sugeno model.
#[derive(Debug, Clone, PartialEq)]
pub struct TSModel {
    pub rules: Vec<FuzzyRule>,
    pub input_dim: usize,
}

impl TSModel {
    /// Validates rule shapes against the declared input dimension.
    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(DriveError::Config {
                line: 0,
                message: "fuzzy model needs at least one rule".into(),
            });
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.antecedents.len() != self.input_dim
                || rule.consequent.len() != self.input_dim + 1
            {
                return Err(DriveError::ShapeMismatch(format!(
                    "rule {i}: {} antecedents / {} consequents for input_dim {}",
                    rule.antecedents.len(),
                    rule.consequent.len(),
                    self.input_dim
                )));
            }
            for m in &rule.antecedents {
                m.validate()?;
            }
        }
        Ok(())
    }
}

/// Firing weight of one rule: the product of its membership grades.
pub fn rule_weight(rule: &FuzzyRule, x: &[f64]) -> Result<f64> {
    if rule.antecedents.len() != x.len() {
        return Err(DriveError::ShapeMismatch(format!(
            "rule expects {} inputs, got {}",
            rule.antecedents.len(),
            x.len()
        )));
    }
    Ok(rule
        .antecedents
        .iter()
        .zip(x)
        .map(|(m, &xi)| m.grade(xi))
        .product())
}

/// Weighted average Y = Σωᵢ·yᵢ / Σωᵢ of rule outputs.
///
/// Exposed separately from [`ts_infer`] so the normalization can be checked
/// directly: it is invariant under uniform positive scaling of the weights.
pub fn ts_combine(weights: &[f64], outputs: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(DriveError::UncoveredInput);
    }
    Ok(weights
        .iter()
        .zip(outputs)
        .map(|(w, y)| w * y)
        .sum::<f64>()
        / total)
}

/// Full inference: grade every rule, evaluate its affine consequent, and
/// combine. An input graded zero by every rule is uncovered — the caller
/// decides the fallback (typically holding its previous output).
pub fn ts_infer(model: &TSModel, x: &[f64]) -> Result<f64> {
    model.validate()?;
    if x.len() != model.input_dim {
        return Err(DriveError::ShapeMismatch(format!(
            "model expects {} inputs, got {}",
            model.input_dim,
            x.len()
        )));
    }
    let mut weights = Vec::with_capacity(model.rules.len());
    let mut outputs = Vec::with_capacity(model.rules.len());
    for rule in &model.rules {
        weights.push(rule_weight(rule, x)?);
        let y = rule.consequent[0]
            + rule.consequent[1..]
                .iter()
                .zip(x)
                .map(|(c, &xi)| c * xi)
                .sum::<f64>();
        outputs.push(y);
    }
    ts_combine(&weights, &outputs)
}

// ──────────────────────────────────────────────────────────────────────────
// Default supervisor
// ──────────────────────────────────────────────────────────────────────────

/// Builds the default supervisory model over (speed error, error
/// derivative): five triangular sets per input spanning ±`e_max` and
/// ±`de_max`, a full 25-rule grid, and constant consequents forming the
/// usual proportional-plus-damping surface scaled to ±`output_span`.
///
/// The output is meant as a small corrective trim on an existing command,
/// so `output_span` should be a modest fraction of the command's range;
/// the surface saturates there no matter how far the inputs wander.
pub fn default_speed_supervisor(e_max: f64, de_max: f64, output_span: f64) -> TSModel {
    let centers = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let sets = |scale: f64| -> Vec<MembershipFunction> {
        centers
            .iter()
            .map(|&c| MembershipFunction::Triangular {
                a: (c - 0.5) * scale,
                b: c * scale,
                c: (c + 0.5) * scale,
            })
            .collect()
    };
    let e_sets = sets(e_max);
    let de_sets = sets(de_max);
    let mut rules = Vec::with_capacity(25);
    for (ei, &ec) in centers.iter().enumerate() {
        for (di, &dc) in centers.iter().enumerate() {
            rules.push(FuzzyRule {
                antecedents: vec![e_sets[ei], de_sets[di]],
                consequent: vec![
                    output_span * ((ec + dc) / 2.0).clamp(-1.0, 1.0),
                    0.0,
                    0.0,
                ],
            });
        }
    }
    TSModel { rules, input_dim: 2 }
}

// ──────────────────────────────────────────────────────────────────────────
// Plain-text persistence
// ──────────────────────────────────────────────────────────────────────────

/// Serializes a model: header `ts v1 <input_dim>`, then one
/// `rule,<antecedents>,<consequents>` line per rule. Antecedents are tagged
/// (`tri:a:b:c`, `gauss:mean:sigma`) so the reader can split them from the
/// plain-number consequents. Numbers use the shortest exact decimal form.
pub fn save_ts(model: &TSModel) -> Result<String> {
    model.validate()?;
    let mut out = format!("ts v1 {}\n", model.input_dim);
    for rule in &model.rules {
        out.push_str("rule");
        for m in &rule.antecedents {
            match *m {
                MembershipFunction::Triangular { a, b, c } => {
                    out.push_str(&format!(",tri:{a:?}:{b:?}:{c:?}"));
                }
                MembershipFunction::Gaussian { mean, sigma } => {
                    out.push_str(&format!(",gauss:{mean:?}:{sigma:?}"));
                }
            }
        }
        for c in &rule.consequent {
            out.push_str(&format!(",{c:?}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses the [`save_ts`] format back into a model.
pub fn load_ts(text: &str) -> Result<TSModel> {
    let bad = |line: usize, message: String| DriveError::Config { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty fuzzy model file".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("ts") || head.next() != Some("v1") {
        return Err(bad(1, format!("expected `ts v1 <dim>`, got `{header}`")));
    }
    let input_dim: usize = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(1, "missing or invalid input dimension".into()))?;

    let parse_num = |line: usize, s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| bad(line, format!("invalid number `{s}`")))
    };
    let mut rules = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        if fields.next() != Some("rule") {
            return Err(bad(line_no, format!("expected `rule,...`, got `{line}`")));
        }
        let mut antecedents = Vec::new();
        let mut consequent = Vec::new();
        for field in fields {
            if let Some(params) = field.strip_prefix("tri:") {
                let p: Vec<&str> = params.split(':').collect();
                if p.len() != 3 {
                    return Err(bad(line_no, format!("triangular needs 3 params: `{field}`")));
                }
                antecedents.push(MembershipFunction::Triangular {
                    a: parse_num(line_no, p[0])?,
                    b: parse_num(line_no, p[1])?,
                    c: parse_num(line_no, p[2])?,
                });
            } else if let Some(params) = field.strip_prefix("gauss:") {
                let p: Vec<&str> = params.split(':').collect();
                if p.len() != 2 {
                    return Err(bad(line_no, format!("gaussian needs 2 params: `{field}`")));
                }
                antecedents.push(MembershipFunction::Gaussian {
                    mean: parse_num(line_no, p[0])?,
                    sigma: parse_num(line_no, p[1])?,
                });
            } else {
                consequent.push(parse_num(line_no, field)?);
            }
        }
        rules.push(FuzzyRule { antecedents, consequent });
    }
    let model = TSModel { rules, input_dim };
    model.validate()?;
    Ok(model)
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
