//! Reporting helpers for the acceptance run: every criterion collects named
//! checks and prints one verdict line followed by its details.

use std::panic::{catch_unwind, AssertUnwindSafe};

#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Criterion {
    pub number: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn new(number: u8, title: &'static str) -> Self {
        Self {
            number,
            title,
            checks: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        label: impl Into<String>,
        pass: bool,
        detail: impl Into<String>,
    ) -> bool {
        self.checks.push(Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        });
        pass
    }

    /// A criterion with no recorded checks does not pass.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut out = format!("criterion {:>2} {verdict}  {}\n", self.number, self.title);
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            out.push_str(&format!("    {mark} {}: {}\n", c.label, c.detail));
        }
        out
    }
}

pub type CriterionFn = fn(&mut Criterion);

/// Runs every criterion (a panic counts as a failed check), prints the
/// report and returns whether all passed.
pub fn run_all(criteria: &[(u8, &'static str, CriterionFn)]) -> bool {
    let mut passed = 0;
    for &(number, title, body) in criteria {
        let mut crit = Criterion::new(number, title);
        if let Err(panic) = catch_unwind(AssertUnwindSafe(|| body(&mut crit))) {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            crit.check("completed without panicking", false, msg);
        }
        print!("{}", crit.render());
        if crit.passed() {
            passed += 1;
        }
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    passed == criteria.len()
}
