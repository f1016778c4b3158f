use serde::{Deserialize, Serialize};

use crate::grid::DiscGrid;
use crate::scalar::Real;

/// Where a report's worst margin was attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
}

/// Outcome of one inequality check.
///
/// `margin` is signed (positive means satisfied with slack) and
/// `pass == (margin >= -tolerance)` always holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub check: String,
    pub pass: bool,
    pub margin: f64,
    pub location: Option<Location>,
    pub tolerance: f64,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerifierReport {
    /// Report with a single margin and tolerance.
    pub fn from_margin(check: impl Into<String>, margin: f64, tolerance: f64, domain: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            pass: margin >= -tolerance,
            margin,
            location: None,
            tolerance,
            domain: domain.into(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_location(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }
}

/// Region of the grid an inequality is checked on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckDomain {
    /// Interior nodes with `r <= fraction * truncation radius`.
    Core { fraction: f64 },
    /// Interior nodes with `r <= r_max`.
    Radius { r_max: f64 },
    /// Every interior node, collar included.
    Full,
}

impl Default for CheckDomain {
    fn default() -> Self {
        Self::Core { fraction: 0.8 }
    }
}

impl CheckDomain {
    pub fn r_max<T: Real>(&self, grid: &DiscGrid<T>) -> T {
        match *self {
            Self::Core { fraction } => T::lit(fraction) * grid.outer_radius(),
            Self::Radius { r_max } => T::lit(r_max).min(grid.outer_radius()),
            Self::Full => grid.outer_radius(),
        }
    }

    pub fn nodes<T: Real>(&self, grid: &DiscGrid<T>) -> Vec<usize> {
        grid.interior_within(self.r_max(grid)).collect()
    }

    /// Largest grid spacing on the domain.
    pub fn spacing<T: Real>(&self, grid: &DiscGrid<T>) -> T {
        grid.max_spacing_within(self.r_max(grid))
    }

    pub fn describe<T: Real>(&self, grid: &DiscGrid<T>) -> String {
        match self {
            Self::Full => format!("full interior r <= {:.6} (collar included)", grid.outer_radius()),
            _ => format!("interior r <= {:.6}", self.r_max(grid)),
        }
    }
}

/// `10 h² (1 + |value|)`.
pub fn default_tolerance(h: f64, value: f64) -> f64 {
    10.0 * h * h * (1.0 + value.abs())
}

/// Running worst case over `(margin, tolerance)` samples.
///
/// The worst sample is the one with the smallest `margin + tolerance`, so the
/// recorded pair decides the verdict.
#[derive(Clone, Debug)]
pub struct MarginTracker {
    worst: Option<(f64, f64, Location)>,
}

impl Default for MarginTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl MarginTracker {
    pub fn new() -> Self {
        Self { worst: None }
    }

    pub fn push(&mut self, margin: f64, tolerance: f64, location: Location) {
        let score = margin + tolerance;
        let replace = match self.worst {
            None => true,
            Some((m, tol, _)) => score < m + tol || score.is_nan(),
        };
        if replace {
            self.worst = Some((margin, tolerance, location));
        }
    }

    /// Samples `margin[p]` at nodes `nodes` of `grid` at time `t`, with
    /// tolerance `10 h² (1 + |scale[p]|)`.
    pub fn push_field<T: Real>(
        &mut self,
        grid: &DiscGrid<T>,
        nodes: &[usize],
        t: f64,
        h: f64,
        margin: impl Fn(usize) -> f64,
        scale: impl Fn(usize) -> f64,
    ) {
        for &p in nodes {
            let loc = Location { t, r: grid.r(p).to_f64_lossy(), theta: grid.theta(p).to_f64_lossy() };
            self.push(margin(p), default_tolerance(h, scale(p)), loc);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.worst.is_none()
    }

    pub fn finish(self, check: impl Into<String>, domain: impl Into<String>) -> VerifierReport {
        let check = check.into();
        match self.worst {
            Some((margin, tolerance, loc)) => VerifierReport {
                check,
                pass: margin >= -tolerance,
                margin,
                location: Some(loc),
                tolerance,
                domain: domain.into(),
                note: None,
            },
            None => VerifierReport {
                check,
                pass: true,
                margin: 0.0,
                location: None,
                tolerance: 0.0,
                domain: domain.into(),
                note: Some("no samples in domain".into()),
            },
        }
    }
}
