//! Run configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment and nested keys are
//! written `section.key`. A file either names a preset and overrides some
//! of its entries, or describes the whole problem:
//!
//! ```text
//! preset = ex3
//! driver = parallel_universe
//! schedule.step = 0.005
//! schedule.steps = 40
//! output.dir = out/ex3
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::assembly::BcRule;
use crate::error::{Error, Result};
use crate::linsolve::LinearSolverKind;
use crate::material::ModelKind;
use crate::nucleation::{DriverKind, FractureCriterion, GuessSettings};
use crate::presets::{preset, Geometry, MaterialSpec, ProblemSpec};
use crate::staggered::SolveSettings;

pub const DEFAULT_STRIDE: usize = 10;

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub driver: DriverKind,
    pub output_dir: PathBuf,
    /// Phase fields are written every `stride` steps.
    pub stride: usize,
    /// Text of the file the config was read from.
    pub source: String,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Config {
                line,
                msg: format!("cannot parse `{v}` for `{key}`"),
            }),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }

    fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.0.keys().filter(|k| k.starts_with(prefix)).cloned().collect()
    }
}

fn split_lines(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config { line, msg: "empty key".into() });
        }
        let entry = Entry {
            line,
            value: v.trim().to_string(),
            used: false,
        };
        if let Some(prev) = map.insert(key.clone(), entry) {
            return Err(Error::Config {
                line,
                msg: format!("`{key}` already set on line {}", prev.line),
            });
        }
    }
    Ok(Entries(map))
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_list(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| config_err(line, format!("`{s}` is not a number"))))
        .collect()
}

fn parse_names(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses and validates a config file. Relative mesh paths are resolved
/// against the current directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = split_lines(text)?;

    let driver = match e.take("driver") {
        None => return Err(config_err(0, "missing driver")),
        Some((line, v)) => v.parse::<DriverKind>().map_err(|msg| config_err(line, msg))?,
    };

    let mut spec = match e.take("preset") {
        Some((line, name)) => preset(&name).map_err(|err| config_err(line, err.to_string()))?,
        None => bare_spec(&mut e)?,
    };

    apply_geometry(&mut e, &mut spec)?;
    apply_material(&mut e, &mut spec)?;
    apply_bc(&mut e, &mut spec)?;
    apply_schedule(&mut e, &mut spec)?;
    apply_solver(&mut e, &mut spec)?;
    apply_fracture(&mut e, &mut spec)?;

    if let Some(a) = e.parse::<f64>("alpha")? {
        spec.alpha = a;
    }
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(config_err(e.line_of("alpha"), format!("alpha must be positive, got {}", spec.alpha)));
    }
    if let Some(r) = e.parse::<f64>("reference_load")? {
        spec.reference_load = Some(r);
    }
    if let Some(name) = e.take("name") {
        spec.name = name.1;
    }

    let output_dir = e
        .take("output.dir")
        .map_or_else(|| PathBuf::from("output").join(&spec.name), |(_, v)| PathBuf::from(v));
    let stride = e.parse::<usize>("output.stride")?.unwrap_or(DEFAULT_STRIDE);
    if stride == 0 {
        return Err(config_err(e.line_of("output.stride"), "output.stride must be at least 1"));
    }

    if let Some((key, entry)) = e.0.iter().find(|(_, v)| !v.used) {
        return Err(config_err(entry.line, format!("unknown key `{key}`")));
    }
    if spec.loads.is_empty() {
        return Err(config_err(0, "empty load schedule"));
    }
    if spec.bc.is_empty() {
        return Err(config_err(0, "no boundary conditions given"));
    }
    if let Geometry::File(path) = &spec.geometry {
        if !path.exists() {
            return Err(config_err(0, format!("mesh file `{}` does not exist", path.display())));
        }
    }
    spec.material.build().map_err(|err| config_err(0, err.to_string()))?;
    spec.settings.validate().map_err(|err| config_err(0, err.to_string()))?;

    Ok(RunConfig {
        spec,
        driver,
        output_dir,
        stride,
        source: text.to_string(),
    })
}

fn bare_spec(e: &mut Entries) -> Result<ProblemSpec> {
    let kind = match e.take("material.model") {
        None => return Err(config_err(0, "missing preset or material.model")),
        Some((line, v)) => match v.as_str() {
            "plane_strain" => ModelKind::PlaneStrainVector,
            "anti_plane" => ModelKind::AntiPlaneScalar,
            other => return Err(config_err(line, format!("unknown material model `{other}`"))),
        },
    };
    let material = match kind {
        ModelKind::PlaneStrainVector => MaterialSpec::plane_strain(1.0, 0.0, 1.0, 1.0),
        ModelKind::AntiPlaneScalar => MaterialSpec::anti_plane(1.0, 1.0, 1.0, 0.0, 0.0),
    };
    if !e.0.contains_key("geometry.kind") {
        return Err(config_err(0, "missing geometry.kind"));
    }
    if !e.0.contains_key("mesh.h") && !e.0.contains_key("geometry.path") {
        return Err(config_err(0, "missing mesh.h"));
    }
    Ok(ProblemSpec {
        name: "custom".into(),
        geometry: Geometry::Square { side: 1.0, hole: None },
        h: 0.0,
        material,
        bc: Vec::new(),
        intact: Vec::new(),
        loads: Vec::new(),
        settings: SolveSettings::default(),
        alpha: 1.0,
        guess: GuessSettings::default(),
        fracture: None,
        linear_solver: LinearSolverKind::default(),
        reference_load: None,
    })
}

fn apply_geometry(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    let side = e.parse::<f64>("geometry.side")?;
    let hole = e.parse::<f64>("geometry.hole")?;
    let radius = e.parse::<f64>("geometry.radius")?;
    let path = e.take("geometry.path");
    if let Some((line, kind)) = e.take("geometry.kind") {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| config_err(line, format!("geometry `{kind}` needs {key}")));
        spec.geometry = match kind.as_str() {
            "square" => Geometry::Square { side: need(side, "geometry.side")?, hole },
            "fiber" => Geometry::FiberComposite {
                side: need(side, "geometry.side")?,
                radius: need(radius, "geometry.radius")?,
            },
            "split_top" => Geometry::SplitTopSquare { side: need(side, "geometry.side")? },
            "file" => match &path {
                Some((_, p)) => Geometry::File(PathBuf::from(p)),
                None => return Err(config_err(line, "geometry `file` needs geometry.path")),
            },
            other => return Err(config_err(line, format!("unknown geometry kind `{other}`"))),
        };
    } else {
        // Overrides of the preset geometry.
        match &mut spec.geometry {
            Geometry::Square { side: s, hole: hl } => {
                if let Some(v) = side {
                    *s = v;
                }
                if hole.is_some() {
                    *hl = hole;
                }
            }
            Geometry::FiberComposite { side: s, radius: r } => {
                if let Some(v) = side {
                    *s = v;
                }
                if let Some(v) = radius {
                    *r = v;
                }
            }
            Geometry::SplitTopSquare { side: s } => {
                if let Some(v) = side {
                    *s = v;
                }
            }
            Geometry::File(_) => {}
        }
        if let Some((_, p)) = path {
            spec.geometry = Geometry::File(PathBuf::from(p));
        }
    }
    if let Some(h) = e.parse::<f64>("mesh.h")? {
        if !(h > 0.0) {
            return Err(config_err(e.line_of("mesh.h"), "mesh.h must be positive"));
        }
        spec.h = h;
    }
    Ok(())
}

fn apply_material(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    let m = &mut spec.material;
    if let Some(v) = e.parse::<f64>("material.E")? {
        m.youngs = v;
    }
    if let Some(v) = e.parse::<f64>("material.nu")? {
        m.poisson = v;
    }
    if m.kind == ModelKind::PlaneStrainVector {
        m.shear = m.youngs / (2.0 * (1.0 + m.poisson));
    }
    if let Some(v) = e.parse::<f64>("material.mu")? {
        if m.kind == ModelKind::PlaneStrainVector {
            return Err(config_err(e.line_of("material.mu"), "plane-strain material takes E and nu, not mu"));
        }
        m.shear = v;
    }
    if let Some(v) = e.parse::<f64>("material.Gc")? {
        m.gc = v;
    }
    if let Some(v) = e.parse::<f64>("material.ell")? {
        m.ell = v;
    }
    if let Some(v) = e.parse::<f64>("material.k")? {
        m.k_res = v;
    }
    if let Some(v) = e.parse::<f64>("material.xi")? {
        m.xi = v;
    }
    if let Some(v) = e.parse::<f64>("material.beta")? {
        m.beta_deg = v;
    }
    Ok(())
}

/// `bc.N = set component factor`; any `bc.*` key replaces the preset rules.
fn apply_bc(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    let keys = e.keys_with_prefix("bc.");
    if !keys.is_empty() {
        let mut rules = Vec::with_capacity(keys.len());
        for key in keys {
            let (line, v) = e.take(&key).expect("key listed");
            let parts: Vec<&str> = v.split_whitespace().collect();
            let [set, comp, factor] = parts[..] else {
                return Err(config_err(line, "expected `bc.N = <set> <component> <factor>`"));
            };
            let comp: usize = comp.parse().map_err(|_| config_err(line, format!("bad component `{comp}`")))?;
            let factor: f64 = factor.parse().map_err(|_| config_err(line, format!("bad factor `{factor}`")))?;
            rules.push(BcRule::new(set, comp, factor));
        }
        spec.bc = rules;
    }
    if let Some((_, v)) = e.take("phase.intact") {
        spec.intact = parse_names(&v);
    }
    Ok(())
}

fn apply_schedule(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    let step = e.parse::<f64>("schedule.step")?;
    let steps = e.parse::<usize>("schedule.steps")?;
    let loads = e.take("schedule.loads");
    match (step, steps, loads) {
        (None, None, None) => {}
        (_, _, Some((line, text))) => {
            if step.is_some() || steps.is_some() {
                return Err(config_err(line, "give either schedule.loads or schedule.step/steps"));
            }
            spec.loads = parse_list(line, &text)?;
        }
        (step, steps, None) => {
            let line = e.line_of("schedule.step").max(e.line_of("schedule.steps"));
            // A missing half keeps the preset's step or count.
            let old_step = spec.loads.first().copied();
            let step = step.or(old_step).ok_or_else(|| config_err(line, "missing schedule.step"))?;
            let steps = steps.unwrap_or(spec.loads.len());
            if steps == 0 || !(step > 0.0) {
                return Err(config_err(line, "schedule needs a positive step and at least one step"));
            }
            spec.loads = (1..=steps).map(|i| i as f64 * step).collect();
        }
    }
    if let Err(err) = crate::nucleation::LoadSchedule::new(spec.loads.clone()) {
        return Err(config_err(e.line_of("schedule.loads"), err.to_string()));
    }
    Ok(())
}

fn apply_solver(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    let s = &mut spec.settings;
    if let Some(v) = e.parse("solver.tol_stagger")? {
        s.tol_stagger = v;
    }
    if let Some(v) = e.parse("solver.tol_newton")? {
        s.tol_newton_u = v;
    }
    if let Some(v) = e.parse("solver.max_stagger")? {
        s.max_stagger = v;
    }
    if let Some(v) = e.parse("solver.max_newton")? {
        s.max_newton_u = v;
    }
    if let Some((line, v)) = e.take("solver.linear") {
        spec.linear_solver = match v.as_str() {
            "cholesky" => LinearSolverKind::Cholesky,
            "pcg" => LinearSolverKind::Pcg,
            other => return Err(config_err(line, format!("unknown linear solver `{other}`"))),
        };
    }
    let g = &mut spec.guess;
    if let Some(v) = e.parse("guess.rho")? {
        g.rho = v;
    }
    if let Some(v) = e.parse("guess.max_stages")? {
        g.max_stages = v;
    }
    if let Some(v) = e.parse("guess.threshold")? {
        g.threshold = v;
    }
    if !(g.rho > 0.0 && g.rho < 1.0) {
        return Err(config_err(e.line_of("guess.rho"), "guess.rho must lie in (0, 1)"));
    }
    Ok(())
}

/// `fracture.spans = left:right, top:bottom`.
fn apply_fracture(e: &mut Entries, spec: &mut ProblemSpec) -> Result<()> {
    if let Some((line, v)) = e.take("fracture.spans") {
        let mut pairs = Vec::new();
        for item in parse_names(&v) {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| config_err(line, format!("expected `set:set`, found `{item}`")))?;
            pairs.push((a.to_string(), b.to_string()));
        }
        let mut crit = spec.fracture.clone().unwrap_or_else(|| FractureCriterion::spanning(&[], None));
        crit.spans = pairs;
        spec.fracture = (!crit.spans.is_empty()).then_some(crit);
    }
    if let Some((line, v)) = e.take("fracture.bridge") {
        match spec.fracture.as_mut() {
            Some(c) => c.bridge = (v != "none").then_some(v),
            None => return Err(config_err(line, "fracture.bridge needs fracture.spans")),
        }
    }
    if let Some(tol) = e.parse::<f64>("fracture.plateau_tol")? {
        match spec.fracture.as_mut() {
            Some(c) => c.plateau_tol = tol,
            None => return Err(config_err(e.line_of("fracture.plateau_tol"), "no fracture criterion to tune")),
        }
    }
    if let Some(n) = e.parse::<usize>("fracture.plateau_steps")? {
        match spec.fracture.as_mut() {
            Some(c) => c.plateau_steps = n,
            None => return Err(config_err(e.line_of("fracture.plateau_steps"), "no fracture criterion to tune")),
        }
    }
    Ok(())
}
