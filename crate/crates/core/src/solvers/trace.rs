use std::io::Write;

use crate::error::Result;
use crate::linops::CounterSnapshot;
use crate::scalar::Scalar;

/// Column order of serialized traces.
pub const TRACE_COLUMNS: [&str; 13] = [
    "iter",
    "res_norm",
    "sres_norm",
    "proj_obj",
    "rel_err",
    "kappa_basis",
    "kappa_dbar",
    "eps_embed",
    "matvecs",
    "tmatvecs",
    "dots",
    "sketches",
    "wall_ms",
];

/// Quantities recorded after one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub iter: usize,
    /// `‖b − A·x_k‖`, diagnostics only.
    pub res_norm: Option<T>,
    /// `‖S(b − A·x_k)‖` as seen by the sketched projected problem.
    pub sres_norm: Option<T>,
    /// Square root of the projected objective the solver minimized.
    pub proj_obj: Option<T>,
    pub rel_err: Option<T>,
    /// Condition number of the basis defining the quasi-norm.
    pub kappa_basis: Option<T>,
    /// Condition number of `blockdiag(M_{k+1}, L_k)` for regularized runs.
    pub kappa_dbar: Option<T>,
    /// Measured distortion of the sketch over `[A·L_k, r0]`.
    pub eps_embed: Option<T>,
    /// Minimal residual over the same affine subspace, diagnostics only.
    pub oracle_res_norm: Option<T>,
    /// Rank used when the projected problem was numerically rank deficient.
    pub truncated_rank: Option<usize>,
    pub counters: CounterSnapshot,
    pub wall_ms: Option<f64>,
}

impl<T: Scalar> IterationRecord<T> {
    pub fn new(iter: usize, counters: CounterSnapshot) -> Self {
        Self {
            iter,
            res_norm: None,
            sres_norm: None,
            proj_obj: None,
            rel_err: None,
            kappa_basis: None,
            kappa_dbar: None,
            eps_embed: None,
            oracle_res_norm: None,
            truncated_rank: None,
            counters,
            wall_ms: None,
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        fn opt<T: Scalar>(v: Option<T>) -> String {
            v.map(|x| format!("{x:e}")).unwrap_or_default()
        }
        vec![
            self.iter.to_string(),
            opt(self.res_norm),
            opt(self.sres_norm),
            opt(self.proj_obj),
            opt(self.rel_err),
            opt(self.kappa_basis),
            opt(self.kappa_dbar),
            opt(self.eps_embed),
            self.counters.matvec_count.to_string(),
            self.counters.transpose_matvec_count.to_string(),
            self.counters.dot_product_count.to_string(),
            self.counters.sketch_apply_count.to_string(),
            self.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default(),
        ]
    }
}

/// Per-iteration history of one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace<T> {
    pub records: Vec<IterationRecord<T>>,
}

impl<T> Default for SolverTrace<T> {
    fn default() -> Self {
        Self { records: Vec::new() }
    }
}

impl<T: Scalar> SolverTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord<T>> {
        self.records.last()
    }

    /// Writes the trace as CSV with the fixed header of [`TRACE_COLUMNS`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRACE_COLUMNS)?;
        for r in &self.records {
            out.write_record(r.csv_fields())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Named metric series for long-format exports; `None` entries are skipped.
    pub fn metric_series(&self) -> Vec<(&'static str, Vec<(usize, T)>)> {
        let pick = |f: fn(&IterationRecord<T>) -> Option<T>| -> Vec<(usize, T)> {
            self.records.iter().filter_map(|r| f(r).map(|v| (r.iter, v))).collect()
        };
        vec![
            ("res_norm", pick(|r| r.res_norm)),
            ("sres_norm", pick(|r| r.sres_norm)),
            ("proj_obj", pick(|r| r.proj_obj)),
            ("rel_err", pick(|r| r.rel_err)),
            ("kappa_basis", pick(|r| r.kappa_basis)),
            ("kappa_dbar", pick(|r| r.kappa_dbar)),
            ("eps_embed", pick(|r| r.eps_embed)),
        ]
    }
}
