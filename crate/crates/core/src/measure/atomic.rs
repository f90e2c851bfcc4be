//! Weighted atoms on `[0, ∞)` together with their construction trace, and the
//! JSON Lines file format used to store them.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Repetition schedule: level `k` adds `growth(k) · ‖λ_{k-1}‖` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Growth {
    /// `growth(k) = 2^k`.
    #[default]
    PowerOfTwo,
    /// `growth(k) = c` for every level.
    Constant(u64),
}

impl Growth {
    pub fn factor(self, level: u32) -> u64 {
        match self {
            Growth::PowerOfTwo => 1u64.checked_shl(level).unwrap_or(u64::MAX),
            Growth::Constant(c) => c,
        }
    }

    /// Repetition (or window) counts `M_1..M_K` and masses `‖λ_1‖..‖λ_K‖`
    /// for unit-mass repetitions, with `‖λ_0‖ := 1`. `None` on overflow.
    pub fn schedule(self, levels: u32) -> Option<(Vec<u64>, Vec<u64>)> {
        let mut counts = Vec::with_capacity(levels as usize);
        let mut masses = Vec::with_capacity(levels as usize);
        let mut previous = 1u64;
        let mut total = 0u64;
        for k in 1..=levels {
            let m = self.factor(k).checked_mul(previous)?;
            total = total.checked_add(m)?;
            counts.push(m);
            masses.push(total);
            previous = total;
        }
        Some((counts, masses))
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Growth::PowerOfTwo => write!(f, "2^k"),
            Growth::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

impl FromStr for Growth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "default" | "2^k" => Ok(Growth::PowerOfTwo),
            other => {
                let c = other
                    .strip_prefix("const:")
                    .and_then(|c| c.parse::<u64>().ok())
                    .ok_or_else(|| Error::Invalid(format!("unknown growth schedule {other:?}")))?;
                if c == 0 {
                    return Err(Error::Invalid("growth factor must be at least 1".into()));
                }
                Ok(Growth::Constant(c))
            }
        }
    }
}

/// One atom `w δ_t` with its provenance in the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineAtom {
    pub t: f64,
    pub w: f64,
    /// Construction level.
    pub k: u32,
    /// Index of the torus atom `ω_j` this atom approximates.
    pub j: u32,
    /// Repetition within the level (window index for nested measures).
    pub m: u64,
    /// Index of the source point-mass measure, nested constructions only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
}

/// Atomic measure `λ = Σ w_i δ_{t_i}` with atoms sorted strictly by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicLineMeasure {
    atoms: Vec<LineAtom>,
    level_boundaries: Vec<f64>,
    total_mass_by_level: Vec<f64>,
    growth: Growth,
    /// Running compensated mass, `cumulative[i] = Σ_{l ≤ i} w_l`.
    cumulative: Vec<f64>,
}

/// Relative tolerance for recorded level masses against the atom weights.
const MASS_TOLERANCE: f64 = 1e-9;

impl AtomicLineMeasure {
    /// Validates ordering, weights, level containment and the mass trace.
    pub fn new(
        atoms: Vec<LineAtom>,
        level_boundaries: Vec<f64>,
        total_mass_by_level: Vec<f64>,
        growth: Growth,
    ) -> Result<Self> {
        let levels = level_boundaries.len();
        if total_mass_by_level.len() != levels {
            return Err(Error::Invalid(format!(
                "{levels} level boundaries but {} level masses",
                total_mass_by_level.len()
            )));
        }
        if level_boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("level boundaries must strictly increase".into()));
        }
        let mut previous: Option<f64> = None;
        for (i, a) in atoms.iter().enumerate() {
            if !(a.t >= 0.0) || !a.t.is_finite() {
                return Err(Error::Invalid(format!("atom {i}: t = {} must be >= 0", a.t)));
            }
            if !(a.w > 0.0) || !a.w.is_finite() {
                return Err(Error::Invalid(format!("atom {i}: weight {} must be positive", a.w)));
            }
            if let Some(p) = previous {
                if !(a.t > p) {
                    return Err(Error::Invalid(format!(
                        "atom {i}: t = {} does not exceed previous t = {p}",
                        a.t
                    )));
                }
            }
            previous = Some(a.t);
            let k = a.k as usize;
            if k == 0 || k > levels {
                return Err(Error::Invalid(format!("atom {i}: level {} outside 1..={levels}", a.k)));
            }
            let lower = if k == 1 { None } else { Some(level_boundaries[k - 2]) };
            if a.t > level_boundaries[k - 1] || lower.is_some_and(|lo| a.t <= lo) {
                return Err(Error::Invalid(format!(
                    "atom {i} at t = {} lies outside level {k} interval",
                    a.t
                )));
            }
        }

        let mut by_level = vec![NeumaierSum::new(); levels];
        for a in &atoms {
            by_level[a.k as usize - 1] += a.w;
        }
        let mut running = 0.0;
        for (k, (level_sum, &recorded)) in by_level.iter().zip(&total_mass_by_level).enumerate() {
            running += level_sum.value();
            if (running - recorded).abs() > MASS_TOLERANCE * recorded.abs().max(1.0) {
                return Err(Error::Invalid(format!(
                    "recorded mass {recorded} of level {} disagrees with atom weights {running}",
                    k + 1
                )));
            }
        }

        let mut acc = NeumaierSum::new();
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.w;
                acc.value()
            })
            .collect();
        Ok(Self {
            atoms,
            level_boundaries,
            total_mass_by_level,
            growth,
            cumulative,
        })
    }

    pub fn empty() -> Self {
        Self {
            atoms: Vec::new(),
            level_boundaries: Vec::new(),
            total_mass_by_level: Vec::new(),
            growth: Growth::default(),
            cumulative: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[LineAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn levels(&self) -> u32 {
        self.level_boundaries.len() as u32
    }

    /// `T_1 < ... < T_K`; level-`k` atoms lie in `(T_{k-1}, T_k]`.
    pub fn level_boundaries(&self) -> &[f64] {
        &self.level_boundaries
    }

    /// `‖λ_k‖ = λ([0, T_k])`.
    pub fn total_mass_by_level(&self) -> &[f64] {
        &self.total_mass_by_level
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// Number of atoms with `t ≤ t_max`.
    pub fn count_up_to(&self, t_max: f64) -> usize {
        self.atoms.partition_point(|a| a.t <= t_max)
    }

    /// `λ([0, t_max])`.
    pub fn mass_up_to(&self, t_max: f64) -> f64 {
        match self.count_up_to(t_max) {
            0 => 0.0,
            n => self.cumulative[n - 1],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Atoms with `t_lo ≤ t ≤ t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> &[LineAtom] {
        let start = self.atoms.partition_point(|a| a.t < t_lo);
        let end = self.atoms.partition_point(|a| a.t <= t_hi);
        &self.atoms[start..end.max(start)]
    }

    /// Writes the JSON Lines atom file: a header, one line per atom, and a
    /// trailer with the boundaries and masses. An empty measure is written
    /// as the header alone.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            growth: self.growth.to_string(),
            levels: self.levels(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        if self.atoms.is_empty() && self.level_boundaries.is_empty() {
            return Ok(());
        }
        for atom in &self.atoms {
            serde_json::to_writer(&mut out, atom)?;
            out.write_all(b"\n")?;
        }
        let trailer = Trailer {
            boundaries: self.level_boundaries.clone(),
            masses: self.total_mass_by_level.clone(),
        };
        serde_json::to_writer(&mut out, &trailer)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (n, first) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header line".into()))?;
        let header: Header = serde_json::from_str(&first?)
            .map_err(|e| parse_err(n, format!("bad header: {e}")))?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(parse_err(
                n,
                format!("unsupported format {:?} version {}", header.format, header.version),
            ));
        }
        let growth: Growth = header.growth.parse().map_err(|e| parse_err(n, format!("{e}")))?;

        let mut atoms: Vec<LineAtom> = Vec::new();
        let mut trailer: Option<(usize, Trailer)> = None;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if trailer.is_some() {
                return Err(parse_err(n, "content after trailer line".into()));
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| parse_err(n, e.to_string()))?;
            if value.get("boundaries").is_some() {
                let t: Trailer =
                    serde_json::from_value(value).map_err(|e| parse_err(n, e.to_string()))?;
                trailer = Some((n, t));
                continue;
            }
            let atom: LineAtom =
                serde_json::from_value(value).map_err(|e| parse_err(n, format!("bad atom: {e}")))?;
            if let Some(prev) = atoms.last() {
                if !(atom.t > prev.t) {
                    return Err(parse_err(
                        n,
                        format!("t = {} does not exceed previous t = {}", atom.t, prev.t),
                    ));
                }
            }
            atoms.push(atom);
        }

        let (trailer_line, trailer) = match trailer {
            Some(t) => t,
            None if atoms.is_empty() && header.levels == 0 => return Ok(Self::empty_with(growth)),
            None => return Err(parse_err(atoms.len() + 2, "missing trailer line".into())),
        };
        if trailer.boundaries.len() != header.levels as usize {
            return Err(parse_err(
                trailer_line,
                format!(
                    "header declares {} levels, trailer has {} boundaries",
                    header.levels,
                    trailer.boundaries.len()
                ),
            ));
        }
        Self::new(atoms, trailer.boundaries, trailer.masses, growth)
            .map_err(|e| parse_err(trailer_line, e.to_string()))
    }

    fn empty_with(growth: Growth) -> Self {
        Self {
            growth,
            ..Self::empty()
        }
    }
}

const FORMAT_NAME: &str = "lambda-atoms";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    growth: String,
    levels: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Trailer {
    boundaries: Vec<f64>,
    masses: Vec<f64>,
}
