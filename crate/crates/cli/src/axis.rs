//! Sweep-axis flag syntax: either an inclusive range `start:end:step` or an
//! explicit comma-separated list (`50:850:50`, `1,2,4,8`).

use std::fmt;
use std::str::FromStr;

/// A parsed real-valued axis, e.g. `--lifetimes 0.5:5:0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatAxis(pub Vec<f64>);

/// A parsed integer axis, e.g. `--counts 1,2,4,8`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountAxis(pub Vec<u32>);

impl fmt::Display for FloatAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.0)
    }
}

impl fmt::Display for CountAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.0)
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl FromStr for FloatAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            let [start, end, step] = split_range(s)?;
            let start: f64 = parse_number(start)?;
            let end: f64 = parse_number(end)?;
            let step: f64 = parse_number(step)?;
            if !(step > 0.0) {
                return Err(format!("step must be positive, got {step}"));
            }
            if end < start {
                return Err(format!("range end {end} is below start {start}"));
            }
            // Nearest integer step count, tolerating float division noise;
            // back off if rounding overshot the (inclusive) end.
            let mut n = ((end - start) / step).round() as usize;
            while n > 0 && start + n as f64 * step > end + step * 1e-9 {
                n -= 1;
            }
            Ok(FloatAxis(
                (0..=n).map(|i| start + i as f64 * step).collect(),
            ))
        } else {
            let values = s
                .split(',')
                .map(|item| parse_number(item.trim()))
                .collect::<Result<Vec<f64>, _>>()?;
            if values.is_empty() {
                return Err("axis must contain at least one value".to_string());
            }
            Ok(FloatAxis(values))
        }
    }
}

impl FromStr for CountAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            let [start, end, step] = split_range(s)?;
            let start: u32 = parse_number(start)?;
            let end: u32 = parse_number(end)?;
            let step: u32 = parse_number(step)?;
            if step == 0 {
                return Err("step must be positive".to_string());
            }
            if end < start {
                return Err(format!("range end {end} is below start {start}"));
            }
            Ok(CountAxis((start..=end).step_by(step as usize).collect()))
        } else {
            let values = s
                .split(',')
                .map(|item| parse_number(item.trim()))
                .collect::<Result<Vec<u32>, _>>()?;
            if values.is_empty() {
                return Err("axis must contain at least one value".to_string());
            }
            Ok(CountAxis(values))
        }
    }
}

fn split_range(s: &str) -> Result<[&str; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    match <[&str; 3]>::try_from(parts) {
        Ok(parts) => Ok(parts),
        Err(_) => Err(format!(
            "expected start:end:step or a comma list, got '{s}'"
        )),
    }
}

fn parse_number<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("'{s}': {e}"))
}
