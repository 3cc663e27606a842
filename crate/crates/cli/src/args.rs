use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Simulations of the step-reinforced random walk.
#[derive(Debug, Parser)]
#[command(name = "srrw", version)]
pub struct Cli {
    /// Master seed (default 0, or the config's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory. Without it the main table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// TOML experiment plan. Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one cell (or the cells of --config) and emit the checkpoint series.
    Simulate(SimulateArgs),
    /// Escape-exponent phase diagram over an α grid.
    Sweep(SweepArgs),
    /// Compare the direct walk with the forest construction.
    Equivalence(EquivalenceArgs),
    /// Certify the Lyapunov inequalities by adversarial sampling.
    LemmaCheck(LemmaArgs),
    /// E‖S_n‖² against the exact second-moment recursion.
    Moments(MomentsArgs),
    /// Scaling of mean exit times from balls.
    ExitTimes(ExitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Counts,
    Auto,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Step law, e.g. `rademacher`, `gaussian(d=3)` or `gaussian` with --d.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Horizon; accepts `1e6`.
    #[arg(long, value_parser = count)]
    pub n: Option<u64>,
    #[arg(long, value_parser = count)]
    pub replicas: Option<u64>,
    /// Walk the whitened law.
    #[arg(long)]
    pub whiten: bool,
    /// Comma-separated diagnostics, e.g. `norm,returns(r=2),xn(kappa=0.8)`.
    #[arg(long)]
    pub diagnostics: Option<String>,
    /// First checkpoint of the geometric schedule.
    #[arg(long, value_parser = count)]
    pub checkpoint_start: Option<u64>,
    #[arg(long)]
    pub checkpoint_ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// `start:end:step` (end included) or a comma-separated list.
    #[arg(long, default_value = "0:1:0.125", value_parser = alpha_grid)]
    pub alpha: AlphaGrid,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value = "gaussian")]
    pub dist: String,
    #[arg(long, default_value = "1e6", value_parser = count)]
    pub n: u64,
    #[arg(long, default_value = "200", value_parser = count)]
    pub replicas: u64,
    /// Also write the figure panel CSV (fig1a.csv for d ≤ 2, fig1b.csv otherwise).
    #[arg(long)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EquivalenceArgs {
    /// Largest n of the exact comparison.
    #[arg(long, default_value = "6", value_parser = count)]
    pub n: u64,
    #[arg(long, default_value = "0,0.25,0.5,0.75,1", value_parser = alpha_grid)]
    pub alpha: AlphaGrid,
    #[arg(long, default_value = "rademacher")]
    pub dist: String,
    /// Horizon of the sampled comparison; 0 skips it.
    #[arg(long, default_value = "1000", value_parser = count)]
    pub n_large: u64,
    #[arg(long, default_value = "1e5", value_parser = count)]
    pub samples: u64,
    #[arg(long, default_value_t = 0.001)]
    pub level: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityName {
    SqrtAbs,
    SqrtLogGlobal,
    SqrtLogLocal,
    InversePower,
}

#[derive(Debug, Args, Serialize)]
pub struct LemmaArgs {
    /// Check one inequality; without it the whole suite runs.
    #[arg(long, value_enum)]
    pub inequality: Option<InequalityName>,
    #[arg(long, default_value = "1e6", value_parser = count)]
    pub samples: u64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Radius to certify directly instead of searching.
    #[arg(long)]
    pub r: Option<f64>,
    /// Constant to certify directly instead of searching.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Dimensions for the inverse-power inequality.
    #[arg(long, default_value = "3", value_delimiter = ',')]
    pub d: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "rademacher")]
    pub dist: String,
    #[arg(long, default_value = "1000", value_parser = count)]
    pub n: u64,
    #[arg(long, default_value = "1e5", value_parser = count)]
    pub replicas: u64,
    /// Largest accepted |z| at any checkpoint.
    #[arg(long, default_value_t = 4.0)]
    pub z_limit: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExitArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value = "triangular")]
    pub dist: String,
    #[arg(long)]
    pub whiten: bool,
    #[arg(long, default_value = "10,20,40,80", value_delimiter = ',')]
    pub radii: Vec<f64>,
    #[arg(long, default_value = "1000", value_parser = count)]
    pub replicas: u64,
    /// Cap on the walk length; replicas still inside at the cap are censored.
    #[arg(long, default_value = "1e8", value_parser = count)]
    pub horizon: u64,
    /// Largest accepted max/min ratio of mean ζ_R/R².
    #[arg(long, default_value_t = 3.0)]
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGrid(pub Vec<f64>);

/// Nonnegative whole number, written as an integer or in float form (`1e6`).
pub fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    match s.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a whole number")),
    }
}

/// `a:b:step` with b included when it lies on the grid, or `a,b,c`.
pub fn alpha_grid(s: &str) -> Result<AlphaGrid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(format!("range `{s}` needs start ≤ end and a positive step"));
            }
            let k = ((b - a) / step + 1e-9).floor() as usize;
            (0..=k).map(|i| a + i as f64 * step).collect()
        }
        [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("`{s}`: expected start:end:step or a comma-separated list")),
    };
    if values.is_empty() {
        return Err("empty alpha grid".into());
    }
    Ok(AlphaGrid(values))
}

/// Splits at top-level commas, leaving commas inside parentheses alone.
pub fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|p| !p.is_empty());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_float_form() {
        assert_eq!(count("1e6"), Ok(1_000_000));
        assert_eq!(count("250"), Ok(250));
        assert!(count("2.5").is_err());
        assert!(count("-1").is_err());
    }

    #[test]
    fn alpha_range_is_inclusive() {
        let g = alpha_grid("0:1:0.125").unwrap().0;
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 1.0);
        assert_eq!(alpha_grid("0.1, 0.5").unwrap().0, vec![0.1, 0.5]);
        assert_eq!(alpha_grid("0.3").unwrap().0, vec![0.3]);
        assert!(alpha_grid("1:0:0.1").is_err());
        assert!(alpha_grid("0:1").is_err());
    }

    #[test]
    fn top_level_split() {
        assert_eq!(split_top_level("norm, returns(r=2),delta(coord0)"), vec!["norm", "returns(r=2)", "delta(coord0)"]);
        assert_eq!(split_top_level("discrete[(1):0.5,(-1):0.5]"), vec!["discrete[(1):0.5,(-1):0.5]"]);
    }
}
