//! Outlier rank of the seed state on its own trajectory and the resulting
//! significance bound.
//!
//! For a reversible chain started from a state drawn from its stationary
//! distribution, the probability that the start is at least as extreme as
//! all but an `epsilon` fraction of its trajectory is at most
//! `sqrt(2 * epsilon)`. A seed that ranks that badly is therefore evidence,
//! at significance `p = min(1, sqrt(2 * epsilon))`, that it was not drawn
//! from the stationary distribution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::CompactnessMode;
use crate::error::{Error, Result};

/// `min(1, sqrt(2 * epsilon))` for `epsilon` in `(0, 1]`.
pub fn p_value(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok((2.0 * epsilon).sqrt().min(1.0))
}

/// Renders a p-value with four decimals and no leading zero, e.g. `.0002`.
pub fn format_p(p: f64) -> String {
    let s = format!("{p:.4}");
    match s.strip_prefix('0') {
        Some(rest) => rest.to_string(),
        None => s,
    }
}

/// Renders epsilon in short scientific form, e.g. `2.7e-8`.
pub fn format_epsilon(epsilon: f64) -> String {
    format!("{epsilon:.1e}")
}

/// Streaming count of trajectory states whose label is at least the seed's.
#[derive(Clone, Debug)]
pub struct EpsilonAccumulator {
    seed_label: f64,
    total_states: u64,
    as_bad_count: u64,
    reservoir: Option<Reservoir>,
}

impl EpsilonAccumulator {
    /// Starts an accumulator whose first observed state is the seed itself.
    pub fn new(seed_label: f64) -> Result<Self> {
        let mut acc = EpsilonAccumulator { seed_label, total_states: 0, as_bad_count: 0, reservoir: None };
        acc.observe(seed_label)?;
        Ok(acc)
    }

    /// Like [`EpsilonAccumulator::new`], keeping a uniform sample of up to
    /// `capacity` labels for histograms. The sample never feeds epsilon.
    pub fn with_reservoir(seed_label: f64, capacity: usize, rng: ChaCha8Rng) -> Result<Self> {
        let mut acc = EpsilonAccumulator {
            seed_label,
            total_states: 0,
            as_bad_count: 0,
            reservoir: Some(Reservoir { capacity, samples: Vec::new(), rng }),
        };
        acc.observe(seed_label)?;
        Ok(acc)
    }

    /// Builds an accumulator from a full label stream whose first entry is
    /// the seed.
    pub fn from_labels(labels: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut it = labels.into_iter();
        let seed = it.next().ok_or(Error::EmptyAccumulator)?;
        let mut acc = Self::new(seed)?;
        for l in it {
            acc.observe(l)?;
        }
        Ok(acc)
    }

    pub fn observe(&mut self, label: f64) -> Result<()> {
        if !label.is_finite() {
            return Err(Error::NonFiniteLabel(label));
        }
        if let Some(r) = &mut self.reservoir {
            r.offer(label, self.total_states);
        }
        self.total_states += 1;
        if label >= self.seed_label {
            self.as_bad_count += 1;
        }
        Ok(())
    }

    pub fn seed_label(&self) -> f64 {
        self.seed_label
    }

    pub fn total_states(&self) -> u64 {
        self.total_states
    }

    pub fn as_bad_count(&self) -> u64 {
        self.as_bad_count
    }

    pub fn epsilon(&self) -> Result<f64> {
        if self.total_states == 0 {
            return Err(Error::EmptyAccumulator);
        }
        Ok(self.as_bad_count as f64 / self.total_states as f64)
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.reservoir.as_ref().map(|r| r.samples.as_slice())
    }

    pub fn finalize(&self, config: ConfigEcho) -> Result<EpsilonReport> {
        let epsilon = self.epsilon()?;
        Ok(EpsilonReport {
            seed_label: self.seed_label,
            total_states: self.total_states,
            as_bad_count: self.as_bad_count,
            epsilon,
            p_value: p_value(epsilon)?,
            config,
        })
    }
}

#[derive(Clone, Debug)]
struct Reservoir {
    capacity: usize,
    samples: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Reservoir {
    fn offer(&mut self, label: f64, seen_before: u64) {
        if self.samples.len() < self.capacity {
            self.samples.push(label);
        } else if self.capacity > 0 {
            let j = self.rng.random_range(0..=seen_before);
            if (j as usize) < self.capacity {
                self.samples[j as usize] = label;
            }
        }
    }
}

/// Run parameters echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: CompactnessMode,
    pub enforce_counties: bool,
    pub enforce_mm: bool,
    pub rng_seed: u64,
    pub steps: u64,
    pub pop_tolerance_wards: f64,
    pub compactness_budget: f64,
    pub lazy: bool,
    pub rng_algorithm: String,
    pub accepted_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub seed_label: f64,
    pub total_states: u64,
    pub as_bad_count: u64,
    pub epsilon: f64,
    pub p_value: f64,
    #[serde(flatten)]
    pub config: ConfigEcho,
}

impl EpsilonReport {
    /// Table cells: compactness condition, counties?, majority-minority?,
    /// epsilon, p.
    pub fn table_cells(&self) -> [String; 5] {
        let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
        [
            format!("{} constraint", self.config.mode),
            yes_no(self.config.enforce_counties),
            yes_no(self.config.enforce_mm),
            format_epsilon(self.epsilon),
            format_p(self.p_value),
        ]
    }

    pub fn table_row(&self) -> String {
        self.table_cells().join(" | ")
    }
}

/// Aligned text table with one row per report.
pub fn render_table(reports: &[EpsilonReport]) -> String {
    let header = ["Compactness", "Counties?", "Majority-minority?", "epsilon", "p"].map(String::from);
    let rows: Vec<[String; 5]> = reports.iter().map(EpsilonReport::table_cells).collect();
    let mut widths = header.each_ref().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String; 5]| {
        let c: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{} | {} | {} || {} | {}", c[0], c[1], c[2], c[3], c[4]).trim_end().to_string()
    };
    let mut out = line(&header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 14));
    for row in &rows {
        out.push('\n');
        out.push_str(&line(row));
    }
    out.push('\n');
    out
}
