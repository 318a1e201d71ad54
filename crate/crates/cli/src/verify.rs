//! Bound-verification sweeps and their margin CSV.

use hdmc_bounds::sweep::{evaluate, run_sweep, Check, InstanceReport, Replay, SweepConfig};

use crate::CliError;

pub const MARGINS_TAG: &str = "# hdmc bound-margins v1";

pub const MARGIN_COLUMNS: [&str; 19] = [
    "index",
    "seed",
    "states",
    "actions",
    "horizon",
    "gamma",
    "eps_val",
    "thm3",
    "eq4",
    "eq5",
    "eq6",
    "known_eps_val",
    "eq1",
    "eq2",
    "eq3",
    "lemma1_slack",
    "lemma2_slack",
    "thm3_above_eq4",
    "failures",
];

pub struct Outcome {
    pub reports: Vec<InstanceReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(InstanceReport::passed)
    }

    pub fn first_failure(&self) -> Option<&InstanceReport> {
        self.reports.iter().find(|r| !r.passed())
    }

    pub fn csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(format!("{MARGINS_TAG}\n").into_bytes());
        w.write_record(MARGIN_COLUMNS).expect("writing to memory");
        for r in &self.reports {
            let p = &r.replay;
            let failures: Vec<&str> = r.failures.iter().map(|c| c.name()).collect();
            let fields = [
                p.index.to_string(),
                p.seed.to_string(),
                p.num_states.to_string(),
                p.num_actions.to_string(),
                p.horizon.to_string(),
                p.gamma.to_string(),
                r.eps_val.to_string(),
                r.thm3.to_string(),
                r.eq4.to_string(),
                r.eq5.to_string(),
                r.eq6.to_string(),
                r.known_eps_val.to_string(),
                r.eq1.to_string(),
                r.eq2.to_string(),
                r.eq3.to_string(),
                r.lemma1_slack.to_string(),
                r.lemma2_slack.to_string(),
                r.thm3_above_eq4.to_string(),
                failures.join(";"),
            ];
            w.write_record(fields).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
    }
}

pub fn parse_check(name: &str) -> Result<Check, CliError> {
    Check::parse(name).ok_or_else(|| {
        let known: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
        CliError::Config(format!("unknown check {name:?}; expected one of {}", known.join(", ")))
    })
}

pub fn sweep(cfg: &SweepConfig) -> Result<Outcome, CliError> {
    if cfg.count > 0 && (cfg.num_states == 0 || cfg.num_actions == 0 || cfg.horizon == 0) {
        return Err(CliError::Config("states, actions and horizon must be at least 1".into()));
    }
    if cfg.gammas.is_empty() {
        return Err(CliError::Config("at least one discount is needed".into()));
    }
    Ok(Outcome {
        reports: run_sweep(cfg)?,
    })
}

/// Re-evaluates one instance from its serialized [`Replay`].
pub fn replay(text: &str, invert: Option<Check>) -> Result<Outcome, CliError> {
    let r = Replay::parse(text)?;
    Ok(Outcome {
        reports: vec![evaluate(&r, invert)?],
    })
}
