//! Prompt construction and candidate extraction.
//!
//! The three templates are stored verbatim under `assets/` and written for
//! one input variable; two-input prompts swap the few variable-specific
//! phrases.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::expr::{format_sig, parse, variable_names, Expr, ParseError};

pub const SEED_TEMPLATE: &str = include_str!("../assets/seed_prompt.txt");
pub const LOOP_TEMPLATE: &str = include_str!("../assets/loop_prompt.txt");
pub const RANDOM_TEMPLATE: &str = include_str!("../assets/random_prompt.txt");

/// Most observation tuples ever shown to the model.
pub const MAX_PROMPT_POINTS: usize = 40;
/// Most function strings taken from one response.
pub const MAX_EXTRACTED: usize = 8;
const POINTS_PER_LINE: usize = 5;

/// Indices of the points to display: all of them sorted by the first input,
/// thinned by a uniform stride when there are more than `max_points`.
pub fn display_indices(data: &Dataset, max_points: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.point(a)[0].total_cmp(&data.point(b)[0]).then(a.cmp(&b)));
    let n = order.len();
    if n <= max_points {
        return order;
    }
    (0..max_points).map(|i| order[i * n / max_points]).collect()
}

/// Observation block: `(x, y)` tuples at four decimals, five per line.
pub fn format_points(data: &Dataset, max_points: usize) -> String {
    let tuples: Vec<String> = display_indices(data, max_points)
        .into_iter()
        .map(|i| {
            let mut parts: Vec<String> = data.point(i).iter().map(|v| format!("{v:.4}")).collect();
            parts.push(format!("{:.4}", data.y[i]));
            format!("({})", parts.join(", "))
        })
        .collect();
    tuples.chunks(POINTS_PER_LINE).map(|line| line.join(", ")).collect::<Vec<_>>().join(",\n")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub function: String,
    pub error: f64,
}

/// Everything a prompt shows besides the fixed template text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub dimensionality: usize,
    pub points: String,
    /// Worst first.
    pub trajectory: Vec<TrajectoryLine>,
    pub iteration: usize,
}

impl PromptContext {
    pub fn new(data: &Dataset) -> Self {
        PromptContext {
            dimensionality: data.dimensionality,
            points: format_points(data, MAX_PROMPT_POINTS),
            trajectory: Vec::new(),
            iteration: 0,
        }
    }

    /// Replaces the trajectory, ordering it by error, highest first.
    pub fn with_trajectory(mut self, mut lines: Vec<TrajectoryLine>, iteration: usize) -> Self {
        lines.sort_by(|a, b| b.error.total_cmp(&a.error));
        self.trajectory = lines;
        self.iteration = iteration;
        self
    }
}

fn variables_list(dimensionality: usize) -> String {
    format!("[{}]", variable_names(dimensionality).join(", "))
}

fn indicator_args(dimensionality: usize) -> String {
    variable_names(dimensionality).join(", ")
}

fn adapt(template: &str, dimensionality: usize) -> String {
    if dimensionality <= 1 {
        return template.to_string();
    }
    let args = indicator_args(dimensionality);
    template
        .replace("An independent variable symbol: x.", &format!("Independent variable symbols: {args}."))
        .replace("\"f1(x) = \", \"f2(x) = \"", &format!("\"f1({args}) = \", \"f2({args}) = \""))
        .replace("(x, y) coordinates", &format!("({args}, y) coordinates"))
        .replace("Function: f(x).", &format!("Function: f({args})."))
}

pub fn build_seed_prompt(ctx: &PromptContext) -> String {
    adapt(SEED_TEMPLATE, ctx.dimensionality).replace("{points}", &ctx.points)
}

pub fn build_loop_prompt(ctx: &PromptContext) -> String {
    let trajectory: Vec<String> =
        ctx.trajectory.iter().map(|t| format!("Function: {}, Error: {}", t.function, format_sig(t.error, 6))).collect();
    adapt(LOOP_TEMPLATE, ctx.dimensionality)
        .replace("{num_variables}", &ctx.dimensionality.to_string())
        .replace("{variables_list}", &variables_list(ctx.dimensionality))
        .replace("{previous_trajectory}", &trajectory.join("\n"))
        .replace("{points}", &ctx.points)
}

pub fn build_random_prompt(dimensionality: usize) -> String {
    adapt(RANDOM_TEMPLATE, dimensionality)
        .replace("{num_variables}", &dimensionality.to_string())
        .replace("{variables_list}", &variables_list(dimensionality))
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

/// Drops list markers, numbering and markdown emphasis from a line start.
fn strip_decoration(mut s: &str) -> &str {
    loop {
        let before = s;
        s = s.trim_start();
        s = s.trim_start_matches(['-', '*', '•', '+', '#', '>', '`', '$']);
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 && s[digits..].starts_with(['.', ')']) {
            s = &s[digits + 1..];
        }
        if s == before {
            return s;
        }
    }
}

/// Matches `f<digits>(<args>) = ` and returns what follows.
fn strip_indicator(s: &str) -> Option<&str> {
    let rest = s.strip_prefix('f')?;
    let rest = rest.trim_start_matches(|c: char| c.is_ascii_digit() || c == '_');
    let rest = rest.trim_start().strip_prefix('(')?;
    let close = rest.find(')')?;
    let args = &rest[..close];
    if !args.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ',' || c == ' ') {
        return None;
    }
    let rest = rest[close + 1..].trim_start();
    let rest = rest.strip_prefix("**").unwrap_or(rest).trim_start();
    Some(rest.strip_prefix('=')?.trim_start())
}

fn clean_rhs(rhs: &str) -> &str {
    let mut rhs = rhs;
    if let Some(i) = rhs.find(", Error:") {
        rhs = &rhs[..i];
    }
    rhs.trim().trim_end_matches(['`', '$', '*', ';', ',', '.']).trim_start_matches(['`', '$']).trim()
}

/// Function right-hand sides found in `text`, in order, at most
/// [`MAX_EXTRACTED`]. Lines look like `f1(x) = ...`, optionally behind
/// bullets, numbering, markdown or a `Function:` label.
pub fn extract_candidates(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        if out.len() == MAX_EXTRACTED {
            break;
        }
        let s = strip_decoration(line);
        let (s, labelled) = match strip_prefix_ci(s, "function:") {
            Some(rest) => (strip_decoration(rest), true),
            None => (s, false),
        };
        let rhs = match strip_indicator(s) {
            Some(rhs) => rhs,
            None if labelled => s,
            None => continue,
        };
        let rhs = clean_rhs(rhs);
        if !rhs.is_empty() {
            out.push(rhs.to_string());
        }
    }
    out
}

/// Extracted strings with their parse outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCandidates {
    pub entries: Vec<(String, Result<Expr, ParseError>)>,
}

pub fn parse_candidates(text: &str, dimensionality: usize) -> ParsedCandidates {
    let entries = extract_candidates(text)
        .into_iter()
        .map(|raw| {
            let parsed = parse(&raw, dimensionality);
            (raw, parsed)
        })
        .collect();
    ParsedCandidates { entries }
}
