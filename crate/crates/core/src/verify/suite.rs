use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bspec::BSpec;
use super::checks::{evaluate, CheckDef, CheckInput, Ctx, Scope, REGISTRY};
use super::CheckReport;
use crate::error::{Error, Result};
use crate::weights::WeightSpec;

/// Power weights `α ∈ {0, ±0.5, ±0.9}` and random martingale weights with
/// `δ ∈ {0.2, 0.5, 0.8}` and seeds `1..=5`, at the given depth.
pub fn default_corpus(depth: u32) -> Vec<WeightSpec> {
    let mut out: Vec<WeightSpec> = [0.0, 0.5, -0.5, 0.9, -0.9]
        .into_iter()
        .map(|a| WeightSpec::power(a, depth))
        .collect();
    for delta in [0.2, 0.5, 0.8] {
        for seed in 1..=5 {
            out.push(WeightSpec::random_martingale(delta, seed, depth));
        }
    }
    out
}

pub fn default_bspecs(seed: u64) -> Vec<BSpec> {
    vec![
        BSpec::RandomHaar { seed },
        BSpec::RandomHaar {
            seed: seed.wrapping_add(1),
        },
        BSpec::LogU,
        BSpec::SingleNode { level: 1, index: 0 },
    ]
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Restrict to these check ids; `None` runs the whole registry.
    pub checks: Option<Vec<String>>,
    /// Above this depth the dense paraproduct check only runs for the first
    /// symbol of each pair.
    pub para_nec_full_depth: u32,
    /// Also pair each weight with the next one in the corpus.
    pub cyclic_pairs: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            checks: None,
            para_nec_full_depth: 8,
            cyclic_pairs: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub by_kind: BTreeMap<String, KindCounts>,
}

impl SuiteSummary {
    pub fn from_reports(reports: &[CheckReport]) -> Self {
        let mut s = SuiteSummary::default();
        for r in reports {
            let k = s.by_kind.entry(r.kind.as_str().to_string()).or_default();
            s.total += 1;
            k.total += 1;
            if r.pass {
                s.passed += 1;
                k.passed += 1;
            } else {
                s.failed += 1;
                k.failed += 1;
            }
        }
        s
    }

    /// Failures among exact identities and inequalities.
    pub fn exact_failures(&self) -> usize {
        ["exact-identity", "exact-inequality"]
            .iter()
            .filter_map(|k| self.by_kind.get(*k))
            .map(|c| c.failed)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutput {
    pub reports: Vec<CheckReport>,
    pub summary: SuiteSummary,
}

struct Job {
    input: CheckInput,
    scopes: Vec<Scope>,
    para_nec: bool,
}

fn jobs_for_depth(
    corpus: &[WeightSpec],
    bspecs: &[BSpec],
    depth: u32,
    seed: u64,
    opts: &SuiteOptions,
) -> Vec<Job> {
    let weights: Vec<WeightSpec> = corpus.iter().map(|w| w.at_depth(depth)).collect();
    let mut pairs: Vec<(usize, usize)> = (0..weights.len()).map(|i| (i, i)).collect();
    if opts.cyclic_pairs && weights.len() > 1 {
        pairs.extend((0..weights.len()).map(|i| (i, (i + 1) % weights.len())));
    }
    let mut jobs = Vec::new();
    for &(i, j) in &pairs {
        let one = i == j;
        let mut scopes = vec![Scope::Pair];
        if one {
            scopes.insert(0, Scope::Weight);
        }
        jobs.push(Job {
            input: CheckInput {
                u: weights[i].clone(),
                v: weights[j].clone(),
                b: None,
                seed,
            },
            scopes,
            para_nec: false,
        });
        for (k, b) in bspecs.iter().enumerate() {
            if let BSpec::SingleNode { level, .. } = b {
                if *level >= depth {
                    continue;
                }
            }
            let mut scopes = vec![Scope::PairB];
            if one {
                scopes.splice(0..0, [Scope::WeightFn, Scope::WeightB]);
            }
            jobs.push(Job {
                input: CheckInput {
                    u: weights[i].clone(),
                    v: weights[j].clone(),
                    b: Some(b.clone()),
                    seed,
                },
                scopes,
                para_nec: depth <= opts.para_nec_full_depth || k == 0,
            });
        }
    }
    jobs
}

fn selected(def: &CheckDef, opts: &SuiteOptions) -> bool {
    opts.checks
        .as_ref()
        .is_none_or(|ids| ids.iter().any(|id| id == def.id))
}

fn error_report(def: &CheckDef, input: &CheckInput, depth: u32, err: &Error) -> CheckReport {
    let mut r = CheckReport::new(
        def.id,
        depth,
        input.v.family.as_str().to_string(),
        input.v.params(),
        Some(input.seed),
        f64::NAN,
        f64::NAN,
        def.kind,
        def.tol,
        def.tol_abs,
        format!("error: {err}"),
    );
    r.pass = false;
    r
}

fn run_job(job: &Job, depth: u32, opts: &SuiteOptions) -> Vec<(usize, CheckReport)> {
    let defs: Vec<(usize, &CheckDef)> = REGISTRY
        .iter()
        .enumerate()
        .filter(|(_, d)| job.scopes.contains(&d.scope) && selected(d, opts))
        .filter(|(_, d)| {
            d.id != "CHK-PARA-NEC" || (job.para_nec && depth <= super::PARA_NEC_MAX_DEPTH)
        })
        .collect();
    if defs.is_empty() {
        return Vec::new();
    }
    let ctx = match Ctx::new(&job.input) {
        Ok(c) => c,
        Err(e) => {
            return defs
                .into_iter()
                .map(|(k, d)| (k, error_report(d, &job.input, depth, &e)))
                .collect()
        }
    };
    defs.into_iter()
        .map(|(k, d)| {
            let r = evaluate(d, &ctx, &job.input)
                .unwrap_or_else(|e| error_report(d, &job.input, depth, &e));
            (k, r)
        })
        .collect()
}

/// Runs every applicable registered check over the cross product of corpus
/// pairs, symbols and depths. Rows are ordered by depth, then check id, then
/// input.
pub fn run_suite(
    corpus: &[WeightSpec],
    bspecs: &[BSpec],
    depths: &[u32],
    seed: u64,
    opts: &SuiteOptions,
) -> Result<SuiteOutput> {
    if corpus.is_empty() {
        return Err(Error::InvalidParameter("empty corpus".into()));
    }
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no depths".into()));
    }
    if let Some(ids) = &opts.checks {
        for id in ids {
            super::lookup(id)?;
        }
    }
    let mut reports = Vec::new();
    for &depth in depths {
        let jobs = jobs_for_depth(corpus, bspecs, depth, seed, opts);
        let mut rows: Vec<(usize, usize, CheckReport)> = jobs
            .par_iter()
            .enumerate()
            .map(|(j, job)| {
                run_job(job, depth, opts)
                    .into_iter()
                    .map(|(k, r)| (k, j, r))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        rows.sort_by_key(|(k, j, _)| (*k, *j));
        reports.extend(rows.into_iter().map(|(_, _, r)| r));
    }
    let summary = SuiteSummary::from_reports(&reports);
    Ok(SuiteOutput { reports, summary })
}

pub const CSV_HEADER: [&str; 11] = [
    "check_id", "depth", "family", "params", "seed", "lhs", "rhs", "ratio", "pass", "kind", "tol",
];

pub fn write_csv<W: Write>(reports: &[CheckReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in reports {
        wr.write_record([
            r.check_id.clone(),
            r.depth.to_string(),
            r.family.clone(),
            r.params.clone(),
            r.seed.map_or(String::new(), |s| s.to_string()),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.ratio.to_string(),
            r.pass.to_string(),
            r.kind.as_str().to_string(),
            r.tol.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
