//! Parsing of `--tgrid` and `--headstart` specifications.

pub const MAX_POINTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

fn num(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what}: cannot parse '{s}' as a number"))?;
    if !v.is_finite() {
        return Err(format!("{what}: '{s}' is not finite"));
    }
    Ok(v)
}

fn count(s: &str, what: &str) -> Result<usize, String> {
    let n: usize = s.trim().parse().map_err(|_| format!("{what}: cannot parse '{s}' as a point count"))?;
    if n == 0 || n > MAX_POINTS {
        return Err(format!("{what}: point count must lie in [1, {MAX_POINTS}], got {n}"));
    }
    Ok(n)
}

impl GridSpec {
    /// `min:max:n` or `min:max:n:log`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(format!("--tgrid: expected min:max:n[:log], got '{s}'"));
        }
        let spacing = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => return Err(format!("--tgrid: unknown spacing '{other}'")),
        };
        let spec =
            GridSpec { t_min: num(parts[0], "--tgrid")?, t_max: num(parts[1], "--tgrid")?, n_points: count(parts[2], "--tgrid")?, spacing };
        spec.points()?;
        Ok(spec)
    }

    pub fn linear(t_min: f64, t_max: f64, n_points: usize) -> Self {
        GridSpec { t_min, t_max, n_points, spacing: Spacing::Linear }
    }

    pub fn points(&self) -> Result<Vec<f64>, String> {
        let (lo, hi, n) = (self.t_min, self.t_max, self.n_points);
        if lo < 0.0 {
            return Err("--tgrid: times must be nonnegative".into());
        }
        if n == 1 {
            return if lo == hi { Ok(vec![lo]) } else { Err("--tgrid: a single point needs min = max".into()) };
        }
        if !(hi > lo) {
            return Err("--tgrid: max must exceed min".into());
        }
        let pts: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            Spacing::Log => {
                if !(lo > 0.0) {
                    return Err("--tgrid: log spacing needs min > 0".into());
                }
                let (a, b) = (lo.ln(), hi.ln());
                (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
            }
        };
        let mut pts = pts;
        pts[0] = lo;
        pts[n - 1] = hi;
        if pts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("--tgrid: grid is not strictly increasing".into());
        }
        Ok(pts)
    }
}

/// Each entry is a number or an inclusive range `a:b:n`.
pub fn headstarts(specs: &[String]) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for s in specs {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => out.push(num(parts[0], "--headstart")?),
            3 => {
                let a = num(parts[0], "--headstart")?;
                let b = num(parts[1], "--headstart")?;
                let n = count(parts[2], "--headstart")?;
                if n == 1 {
                    out.push(a);
                } else {
                    out.extend((0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }));
                }
            }
            _ => return Err(format!("--headstart: expected a number or a:b:n, got '{s}'")),
        }
    }
    Ok(out)
}
