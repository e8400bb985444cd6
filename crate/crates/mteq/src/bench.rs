//! Seeded benchmark cells: mean iterations, times and success counts per `(m, n)`.

use std::fmt::Write as _;

use mteq_core::problems::{with_rhs, zero_out_rhs};
use mteq_core::{MTeqProblem, SolveStatus, SolverConfig, Step3Mode};

use crate::run::solve;

/// One `(m, n)` cell of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub m: usize,
    pub n: usize,
}

impl std::str::FromStr for Cell {
    type Err = String;

    /// Parses `3x50`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, n) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("cell `{s}` is not of the form MxN"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("cell `{s}`: `{v}` is not a positive integer"))
        };
        Ok(Cell {
            m: parse(m)?,
            n: parse(n)?,
        })
    }
}

/// Rhs zeroing applied to every generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Zeroing {
    pub frac: f64,
    /// 0-based indices that stay positive.
    pub keep: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub trials: usize,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    pub zeroing: Option<Zeroing>,
    pub mode: Step3Mode,
    pub cfg: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    /// `Err` holds the reason a trial did not produce a solve.
    pub status: Result<SolveStatus, String>,
    pub iterations: usize,
    pub init_iterations: usize,
    pub time_ms: f64,
    pub init_ms: f64,
}

impl Trial {
    pub fn succeeded(&self) -> bool {
        self.status == Ok(SolveStatus::Converged)
    }

    /// Why the trial failed, if it did.
    pub fn failure(&self) -> Option<String> {
        match &self.status {
            Ok(SolveStatus::Converged) => None,
            Ok(s) => Some(s.to_string()),
            Err(e) => Some(e.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: Vec<Trial>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl CellSummary {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.succeeded()).count()
    }

    fn successful(&self) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(|t| t.succeeded())
    }

    /// Mean Newton iterations over converged trials.
    pub fn mean_iter(&self) -> Option<f64> {
        mean(self.successful().map(|t| t.iterations as f64))
    }

    /// Mean total time in seconds over converged trials.
    pub fn mean_time_s(&self) -> Option<f64> {
        mean(self.successful().map(|t| t.time_ms / 1e3))
    }

    /// Mean initialization time in seconds over converged trials.
    pub fn mean_init_s(&self) -> Option<f64> {
        mean(self.successful().map(|t| t.init_ms / 1e3))
    }

    pub fn mean_init_iter(&self) -> Option<f64> {
        mean(self.successful().map(|t| t.init_iterations as f64))
    }
}

/// Runs one trial; generator and zeroing failures become `Err` statuses.
fn run_trial<G>(cell: Cell, index: usize, opts: &BenchOptions, generate: &G) -> Trial
where
    G: Fn(Cell, u64) -> Result<MTeqProblem, String>,
{
    let seed = opts.seed.wrapping_add(index as u64);
    let mut trial = Trial {
        index,
        seed,
        status: Err(String::new()),
        iterations: 0,
        init_iterations: 0,
        time_ms: 0.0,
        init_ms: 0.0,
    };
    let problem = generate(cell, seed).and_then(|p| match &opts.zeroing {
        None => Ok(p),
        Some(z) => zero_out_rhs(p.rhs(), seed, &z.keep, z.frac)
            .and_then(|rhs| with_rhs(&p, rhs))
            .map_err(|e| e.to_string()),
    });
    let p = match problem {
        Ok(p) => p,
        Err(e) => {
            trial.status = Err(format!("generator: {e}"));
            return trial;
        }
    };
    match solve(&p, &opts.cfg, None, opts.mode) {
        Ok(run) => {
            trial.status = Ok(run.report.status);
            trial.iterations = run.report.iterations();
            trial.init_iterations = run.init.map_or(0, |ip| ip.init_iterations);
            trial.time_ms = run.solve_ms;
            trial.init_ms = run.init_ms;
        }
        Err(e) => trial.status = Err(e.to_string()),
    }
    trial
}

/// Runs `opts.trials` instances of `cell`; never panics on solver or generator failure.
///
/// Trials run on scoped threads and are collected by trial index, so the
/// result does not depend on scheduling.
pub fn run_cell<G>(cell: Cell, opts: &BenchOptions, generate: &G) -> CellSummary
where
    G: Fn(Cell, u64) -> Result<MTeqProblem, String> + Sync,
{
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(opts.trials.max(1));
    let mut trials: Vec<Trial> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..opts.trials)
                        .step_by(workers)
                        .map(|i| run_trial(cell, i, opts, generate))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });
    trials.sort_by_key(|t| t.index);
    CellSummary { cell, trials }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

/// Markdown table; `timing = false` prints `-` in the time columns.
pub fn to_markdown(cells: &[CellSummary], timing: bool) -> String {
    let mut out = String::new();
    out.push_str("| (m,n) | Iter | Time (s) | Time-Int (s) | Init-Iter | Success |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for c in cells {
        let time = |v: Option<f64>| if timing { fmt_opt(v, 4) } else { "-".into() };
        writeln!(
            out,
            "| ({},{}) | {} | {} | {} | {} | {}/{} |",
            c.cell.m,
            c.cell.n,
            fmt_opt(c.mean_iter(), 2),
            time(c.mean_time_s()),
            time(c.mean_init_s()),
            fmt_opt(c.mean_init_iter(), 1),
            c.successes(),
            c.trials.len()
        )
        .unwrap();
    }
    let failures: Vec<String> = cells
        .iter()
        .flat_map(|c| {
            c.trials.iter().filter_map(move |t| {
                t.failure().map(|why| {
                    format!(
                        "- ({},{}) trial {} (seed {}): {why}",
                        c.cell.m, c.cell.n, t.index, t.seed
                    )
                })
            })
        })
        .collect();
    if !failures.is_empty() {
        out.push_str("\nFailures:\n\n");
        for f in failures {
            out.push_str(&f);
            out.push('\n');
        }
    }
    out
}

/// CSV with header `m,n,trials,successes,mean_iter,mean_time_s,mean_time_int_s,mean_init_iter`.
pub fn to_csv(cells: &[CellSummary], timing: bool) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m",
        "n",
        "trials",
        "successes",
        "mean_iter",
        "mean_time_s",
        "mean_time_int_s",
        "mean_init_iter",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for c in cells {
        let time = |v: Option<f64>| if timing { opt(v) } else { String::new() };
        w.write_record([
            c.cell.m.to_string(),
            c.cell.n.to_string(),
            c.trials.len().to_string(),
            c.successes().to_string(),
            opt(c.mean_iter()),
            time(c.mean_time_s()),
            time(c.mean_init_s()),
            opt(c.mean_init_iter()),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mteq_core::problems::gen_problem1;
    use mteq_core::tensor::DEFAULT_DENSE_CAP;
    use mteq_core::Tensor;

    fn opts(trials: usize) -> BenchOptions {
        BenchOptions {
            trials,
            seed: 7,
            zeroing: None,
            mode: Step3Mode::Step3Prime { c: 1.0 },
            cfg: SolverConfig::default(),
        }
    }

    #[test]
    fn parses_cells() {
        assert_eq!("3x50".parse::<Cell>().unwrap(), Cell { m: 3, n: 50 });
        assert!("3-50".parse::<Cell>().is_err());
        assert!("3xq".parse::<Cell>().is_err());
    }

    #[test]
    fn deterministic_table() {
        let gen = |c: Cell, s: u64| {
            gen_problem1(c.m, c.n, s, DEFAULT_DENSE_CAP).map_err(|e| e.to_string())
        };
        let cells = [Cell { m: 3, n: 8 }, Cell { m: 4, n: 5 }];
        let a: Vec<_> = cells.iter().map(|&c| run_cell(c, &opts(5), &gen)).collect();
        let b: Vec<_> = cells.iter().map(|&c| run_cell(c, &opts(5), &gen)).collect();
        assert_eq!(to_markdown(&a, false), to_markdown(&b, false));
        assert_eq!(to_csv(&a, false).unwrap(), to_csv(&b, false).unwrap());
        assert!(a.iter().all(|c| c.successes() == 5));
        let seeds: Vec<u64> = a[0].trials.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9, 10, 11]);
    }

    #[test]
    fn broken_cell_records_failures() {
        // I - ones is not an M-tensor
        let gen = |c: Cell, _| {
            let ones = Tensor::ones(c.m, c.n, DEFAULT_DENSE_CAP).map_err(|e| e.to_string())?;
            MTeqProblem::new(Tensor::scaled_identity_minus(1.0, &ones), vec![1.0; c.n])
                .map_err(|e| e.to_string())
        };
        let s = run_cell(Cell { m: 3, n: 2 }, &opts(3), &gen);
        assert_eq!(s.successes(), 0);
        assert_eq!(s.trials.len(), 3);
        assert!(s.mean_iter().is_none());
        let md = to_markdown(&[s], true);
        assert!(md.contains("| (3,2) | - | - | - | - | 0/3 |"), "{md}");
        assert!(md.contains("initializer failed"), "{md}");
    }

    #[test]
    fn generator_errors_are_recorded() {
        let gen = |_: Cell, _| Err::<MTeqProblem, _>("boom".to_string());
        let s = run_cell(Cell { m: 3, n: 4 }, &opts(2), &gen);
        assert_eq!(s.successes(), 0);
        assert_eq!(s.trials[1].failure().unwrap(), "generator: boom");
    }
}
