//! Run configuration: flat JSON files, presets and flag overrides.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use stokes_eig::mesh::DomainKind;
use stokes_eig::{Formulation, Scheme, SolverKind, StudyConfig, Tolerances};

const FIELDS: [&str; 10] = ["domain", "family", "k", "formulation", "levels", "nev", "mu", "output_dir", "solver", "tolerances"];
const TOL_FIELDS: [&str; 3] = ["extr", "order", "raw"];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TolOverrides {
    pub extr: Option<f64>,
    pub order: Option<f64>,
    pub raw: Option<f64>,
}

impl TolOverrides {
    pub fn apply(&self, mut t: Tolerances) -> Tolerances {
        t.extr = self.extr.unwrap_or(t.extr);
        t.order = self.order.unwrap_or(t.order);
        t.raw = self.raw.unwrap_or(t.raw);
        t
    }
}

/// Configuration with every field optional, as read from one source.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartialConfig {
    pub domain: Option<DomainKind>,
    pub family: Option<Scheme>,
    pub k: Option<usize>,
    pub formulation: Option<Formulation>,
    pub levels: Option<Vec<usize>>,
    pub nev: Option<usize>,
    pub mu: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub solver: Option<SolverKind>,
    pub tolerances: TolOverrides,
}

/// Fully resolved configuration of one study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub family: Scheme,
    pub k: usize,
    pub formulation: Formulation,
    pub levels: Vec<usize>,
    pub nev: usize,
    pub mu: f64,
    pub output_dir: PathBuf,
    pub solver: SolverKind,
    pub tolerances: TolOverrides,
}

impl RunConfig {
    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            domain: self.domain,
            scheme: self.family,
            k: self.k,
            formulation: self.formulation,
            levels: self.levels.clone(),
            nev: self.nev,
            mu: self.mu,
            solver: self.solver,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.apply(Tolerances::for_domain(self.domain))
    }
}

fn uint(v: &Value, key: &str, errs: &mut Vec<String>) -> Option<usize> {
    match v.as_u64() {
        Some(n) => Some(n as usize),
        None => {
            errs.push(format!("{key}: expected a non-negative integer, got {v}"));
            None
        }
    }
}

fn real(v: &Value, key: &str, errs: &mut Vec<String>) -> Option<f64> {
    match v.as_f64() {
        Some(x) => Some(x),
        None => {
            errs.push(format!("{key}: expected a number, got {v}"));
            None
        }
    }
}

fn parsed<T: std::str::FromStr>(v: &Value, key: &str, errs: &mut Vec<String>) -> Option<T>
where
    T::Err: std::fmt::Display,
{
    match v.as_str() {
        Some(s) => s.parse().map_err(|e| errs.push(format!("{key}: {e}"))).ok(),
        None => {
            errs.push(format!("{key}: expected a string, got {v}"));
            None
        }
    }
}

fn tolerances(v: &Value, errs: &mut Vec<String>) -> TolOverrides {
    let mut t = TolOverrides::default();
    let Some(obj) = v.as_object() else {
        errs.push(format!("tolerances: expected an object, got {v}"));
        return t;
    };
    for (key, v) in obj {
        let name = format!("tolerances.{key}");
        match key.as_str() {
            "extr" => t.extr = real(v, &name, errs),
            "order" => t.order = real(v, &name, errs),
            "raw" => t.raw = real(v, &name, errs),
            _ => errs.push(format!("unknown field '{name}' (expected one of {})", TOL_FIELDS.join(", "))),
        }
    }
    t
}

impl PartialConfig {
    /// Parses a flat JSON object. Unknown keys and type errors are
    /// collected rather than reported one at a time.
    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("parse error: {e}")])?;
        let Value::Object(obj) = value else {
            return Err(vec!["expected a JSON object at the top level".into()]);
        };
        Self::from_map(&obj)
    }

    fn from_map(obj: &Map<String, Value>) -> Result<Self, Vec<String>> {
        let mut c = PartialConfig::default();
        let mut errs = Vec::new();
        for (key, v) in obj {
            let e = &mut errs;
            match key.as_str() {
                "domain" => c.domain = parsed(v, key, e),
                "family" => c.family = parsed(v, key, e),
                "k" => c.k = uint(v, key, e),
                "formulation" => c.formulation = parsed(v, key, e),
                "levels" => match v.as_array() {
                    Some(a) => c.levels = a.iter().map(|x| uint(x, key, e)).collect(),
                    None => e.push(format!("levels: expected an array of integers, got {v}")),
                },
                "nev" => c.nev = uint(v, key, e),
                "mu" => c.mu = real(v, key, e),
                "output_dir" => match v.as_str() {
                    Some(s) => c.output_dir = Some(PathBuf::from(s)),
                    None => e.push(format!("output_dir: expected a string, got {v}")),
                },
                "solver" => c.solver = parsed(v, key, e),
                "tolerances" => c.tolerances = tolerances(v, e),
                _ => e.push(format!("unknown field '{key}' (expected one of {})", FIELDS.join(", "))),
            }
        }
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(errs)
        }
    }

    /// Overwrites fields set in `other`; returns the names of fields that
    /// were already set to a different value.
    pub fn overlay(&mut self, other: &PartialConfig) -> Vec<&'static str> {
        let mut changed = Vec::new();
        fn set<T: Clone + PartialEq>(dst: &mut Option<T>, src: &Option<T>, name: &'static str, changed: &mut Vec<&'static str>) {
            if let Some(v) = src {
                if dst.as_ref().is_some_and(|d| d != v) {
                    changed.push(name);
                }
                *dst = Some(v.clone());
            }
        }
        set(&mut self.domain, &other.domain, "domain", &mut changed);
        set(&mut self.family, &other.family, "family", &mut changed);
        set(&mut self.k, &other.k, "k", &mut changed);
        set(&mut self.formulation, &other.formulation, "formulation", &mut changed);
        set(&mut self.levels, &other.levels, "levels", &mut changed);
        set(&mut self.nev, &other.nev, "nev", &mut changed);
        set(&mut self.mu, &other.mu, "mu", &mut changed);
        set(&mut self.output_dir, &other.output_dir, "output_dir", &mut changed);
        set(&mut self.solver, &other.solver, "solver", &mut changed);
        set(&mut self.tolerances.extr, &other.tolerances.extr, "tolerances.extr", &mut changed);
        set(&mut self.tolerances.order, &other.tolerances.order, "tolerances.order", &mut changed);
        set(&mut self.tolerances.raw, &other.tolerances.raw, "tolerances.raw", &mut changed);
        changed
    }

    /// Fills defaults and validates, reporting every problem at once.
    pub fn resolve(&self) -> Result<RunConfig, Vec<String>> {
        let mut errs = Vec::new();
        if self.domain.is_none() {
            errs.push("missing field 'domain'".into());
        }
        if self.family.is_none() {
            errs.push("missing field 'family'".into());
        }
        if self.k.is_none() {
            errs.push("missing field 'k'".into());
        }
        if self.levels.is_none() {
            errs.push("missing field 'levels'".into());
        }
        let c = RunConfig {
            domain: self.domain.unwrap_or(DomainKind::Square),
            family: self.family.unwrap_or(Scheme::Rt),
            k: self.k.unwrap_or(0),
            formulation: self.formulation.unwrap_or(Formulation::Full),
            levels: self.levels.clone().unwrap_or_else(|| vec![1]),
            nev: self.nev.unwrap_or(5),
            mu: self.mu.unwrap_or(0.5),
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("results")),
            solver: self.solver.unwrap_or_default(),
            tolerances: self.tolerances.clone(),
        };
        errs.extend(c.study().problems());
        for (name, v) in [("extr", c.tolerances.extr), ("order", c.tolerances.order), ("raw", c.tolerances.raw)] {
            if v.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
                errs.push(format!("tolerances.{name} must be a non-negative number"));
            }
        }
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(errs)
        }
    }
}

pub fn load_config(path: &Path) -> Result<PartialConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    PartialConfig::from_json(&text)
}
