use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::{json, Value};

use eink_core::chart::{GridSample, MetricField, SymmetricModel, DEFAULT_GRID};
use eink_core::families::{canonical_variation, make_family, FamilyDescriptor, FamilyName, TubeAmbient};
use eink_core::integrals::{
    gauss_bonnet, gradient_checks, signature_bound_report, tube_total_scalar, tube_volume, PerturbedFamily,
    TrigTensorField, TubeSpec,
};
use eink_core::invariants::{grid_invariants, invariant_report, reference_invariants, InvariantReport};
use eink_core::verify::{berger_table, run_suite, Suite, VerifyConfig};

use crate::output::{cell, write_csv, write_json, Table};
use crate::{Ambient, Cli, Command, Format};

pub enum Status {
    Passed,
    Failed(usize),
}

/// Residual bound for `gradient`.
pub const GRADIENT_TOL: f64 = 1e-4;

pub fn run(cli: &Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Report => report(cli),
        Command::BergerTable => berger(cli),
        Command::Verify => verify(cli),
        Command::GaussBonnet => gauss_bonnet_cmd(cli),
        Command::Tube => tube(cli),
        Command::Gradient => gradient(cli),
    }
}

fn emit<T: Serialize>(cli: &Cli, json: &T, table: impl FnOnce() -> Table) -> anyhow::Result<()> {
    let path = cli.output.as_deref();
    match cli.format {
        Format::Json => write_json(path, json),
        Format::Csv => write_csv(path, &table()),
    }
}

fn single_dim(cli: &Cli) -> anyhow::Result<Option<usize>> {
    match cli.dim.as_slice() {
        [] => Ok(None),
        [d] => Ok(Some(*d)),
        _ => bail!("--dim takes a single value for this command"),
    }
}

fn descriptor(cli: &Cli) -> anyhow::Result<FamilyDescriptor> {
    let mut d = match &cli.descriptor {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid descriptor {}", path.display()))?
        }
        None => {
            let Some(name) = &cli.family else {
                bail!("--family or --descriptor is required");
            };
            FamilyDescriptor::new(name.parse::<FamilyName>()?)
        }
    };
    if let Some(name) = &cli.family {
        let name: FamilyName = name.parse()?;
        if name != d.family {
            bail!("--family {} conflicts with descriptor family {}", name.as_str(), d.family.as_str());
        }
    }
    let t = match cli.t.as_slice() {
        [] => None,
        [t] => Some(*t),
        _ => bail!("--t takes a single value for this command"),
    };
    let ints = [("p", cli.p), ("q", cli.q), ("n", cli.n), ("dim", single_dim(cli)?)];
    let reals = [("t", t), ("radius", cli.radius), ("lambda", cli.lambda), ("bump", cli.bump), ("kappa", cli.kappa)];
    for (name, v) in ints.into_iter().map(|(n, v)| (n, v.map(|x| x as f64))).chain(reals) {
        if let Some(v) = v {
            d.params.insert(name.to_string(), v);
        }
    }
    if cli.grid.is_some() {
        d.grid = cli.grid;
    }
    if let Some(g) = d.grid {
        if g < crate::MIN_GRID {
            bail!("grid must be at least {}, got {g}", crate::MIN_GRID);
        }
    }
    d.validate()?;
    Ok(d)
}

fn grid_of(d: &FamilyDescriptor) -> usize {
    d.grid.unwrap_or(DEFAULT_GRID)
}

/// Appends report rows in the fixed column order
/// `family, params…, k, min_eig, ein_upper, ein_lower, grid, delta`.
fn push_report_rows(table: &mut Table, d: &FamilyDescriptor, source: &str, r: &InvariantReport) {
    let prefix: Vec<String> =
        std::iter::once(d.family.as_str().to_string()).chain(d.params.values().map(|v| v.to_string())).collect();
    let grid = if r.grid == 0 { source.to_string() } else { r.grid.to_string() };
    let delta = cell(r.refinement.as_ref().map(|x| x.delta_upper));
    let tail = |k: String, m: String| {
        let mut row = prefix.clone();
        row.extend([k, m, r.ein_upper.to_string(), r.ein_lower.to_string(), grid.clone(), delta.clone()]);
        row
    };
    if r.ein_k_min.is_empty() {
        table.push(tail(String::new(), String::new()));
    }
    for e in &r.ein_k_min {
        table.push(tail(e.k.to_string(), e.min_eig.to_string()));
    }
}

fn report_header(d: &FamilyDescriptor) -> Table {
    let mut h = vec!["family".to_string()];
    h.extend(d.params.keys().cloned());
    h.extend(["k", "min_eig", "ein_upper", "ein_lower", "grid", "delta"].map(String::from));
    Table::new(h)
}

#[derive(Serialize)]
struct FamilyReport {
    family: FamilyDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<InvariantReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<InvariantReport>,
}

fn report(cli: &Cli) -> anyhow::Result<Status> {
    let d = descriptor(cli)?;
    let family = make_family(&d)?;
    let closed_form = family.reference.as_ref().map(|r| reference_invariants(r, &cli.k)).transpose()?;
    let numeric = match &family.field {
        Some(field) => {
            let grid = GridSample::lattice(field.chart(), grid_of(&d))?;
            Some(invariant_report(field, &grid, &cli.k)?)
        }
        None => None,
    };
    let out = FamilyReport { family: d.clone(), closed_form, numeric };
    emit(cli, &out, || {
        let mut t = report_header(&d);
        for (source, r) in [("closed_form", &out.closed_form), ("numeric", &out.numeric)] {
            if let Some(r) = r {
                push_report_rows(&mut t, &d, source, r);
            }
        }
        t
    })?;
    Ok(Status::Passed)
}

#[derive(Serialize)]
struct BergerRow {
    n: usize,
    t: f64,
    closed_form: InvariantReport,
    table: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<InvariantReport>,
}

fn berger(cli: &Cli) -> anyhow::Result<Status> {
    let n = cli.n.unwrap_or(1);
    if n == 0 {
        bail!("--n must be at least 1");
    }
    if cli.t.is_empty() {
        bail!("--t is required");
    }
    let mut rows = Vec::new();
    for &t in &cli.t {
        let d = FamilyDescriptor::new(FamilyName::Berger).with("n", n as f64).with("t", t);
        let family = make_family(&d)?;
        let closed_form = reference_invariants(family.reference.as_ref().expect("berger has closed form"), &cli.k)?;
        let (upper, lower) = berger_table(n, t);
        let numeric = match (cli.grid, n) {
            (Some(g), 1) => {
                let field = canonical_variation(t)?;
                Some(grid_invariants(&field, &GridSample::lattice(field.chart(), g)?, &cli.k)?)
            }
            _ => None,
        };
        rows.push(BergerRow { n, t, closed_form, table: json!({"ein_upper": upper, "ein_lower": lower}), numeric });
    }
    emit(cli, &rows, || {
        let d = FamilyDescriptor::new(FamilyName::Berger).with("n", 0.0).with("t", 0.0);
        let mut table = report_header(&d);
        for row in &rows {
            let d = FamilyDescriptor::new(FamilyName::Berger).with("n", row.n as f64).with("t", row.t);
            push_report_rows(&mut table, &d, "closed_form", &row.closed_form);
            if let Some(r) = &row.numeric {
                push_report_rows(&mut table, &d, "numeric", r);
            }
        }
        table
    })?;
    Ok(Status::Passed)
}

fn verify(cli: &Cli) -> anyhow::Result<Status> {
    let mut cfg = VerifyConfig { seed: cli.seed, ..VerifyConfig::default() };
    if !cli.dim.is_empty() {
        cfg.dims = cli.dim.clone();
    }
    if let Some(s) = cli.samples {
        cfg.samples = s;
    }
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    let report = run_suite(cli.suite.unwrap_or(Suite::All), &cfg)?;
    emit(cli, &report, || {
        let mut t = Table::new(["check", "params", "lhs", "rhs", "residual", "pass"]);
        for r in &report.records {
            t.push(vec![
                r.check.clone(),
                serde_json::to_string(&r.params).expect("params serialize"),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.residual.to_string(),
                r.pass.to_string(),
            ]);
        }
        t
    })?;
    Ok(match report.failures.len() {
        0 => Status::Passed,
        n => Status::Failed(n),
    })
}

fn numeric_field(d: &FamilyDescriptor) -> anyhow::Result<MetricField> {
    make_family(d)?
        .field
        .with_context(|| format!("family `{}` has no numerical chart", d.family.as_str()))
}

fn key_values(value: &impl Serialize) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    let v = serde_json::to_value(value).expect("report serializes");
    let mut flat = BTreeMap::new();
    flatten("", &v, &mut flat);
    for (k, v) in flat {
        t.push(vec![k, v]);
    }
    t
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

fn gauss_bonnet_cmd(cli: &Cli) -> anyhow::Result<Status> {
    let d = descriptor(cli)?;
    let field = numeric_field(&d)?;
    let grid = GridSample::quadrature_reduced(field.chart(), grid_of(&d))?;
    let out = json!({
        "family": d,
        "gauss_bonnet": gauss_bonnet(&field, &grid)?,
        "signature_bound": signature_bound_report(&field, &grid)?,
    });
    emit(cli, &out, || key_values(&out))?;
    Ok(Status::Passed)
}

fn tube(cli: &Cli) -> anyhow::Result<Status> {
    let dim = single_dim(cli)?.unwrap_or(3);
    let ambient = match cli.ambient {
        Ambient::Sphere => TubeAmbient::RoundSphere,
        Ambient::Flat => TubeAmbient::Flat,
    };
    let radii = if cli.r.is_empty() { vec![0.3, 0.2, 0.1] } else { cli.r.clone() };
    let mut rows = Vec::new();
    for r in radii {
        let mut spec = TubeSpec::new(ambient, dim, r);
        if let Some(g) = cli.grid {
            spec.grid = g;
        }
        let volume = tube_volume(&spec)?;
        let total_scalar = if dim >= 5 { Some(tube_total_scalar(&spec)?) } else { None };
        rows.push(json!({"volume": volume, "total_scalar": total_scalar}));
    }
    emit(cli, &rows, || {
        let flat: Vec<BTreeMap<String, String>> = rows
            .iter()
            .map(|row| {
                let mut m = BTreeMap::new();
                flatten("", row, &mut m);
                m
            })
            .collect();
        let mut t = Table::new(flat[0].keys().cloned());
        for m in flat {
            t.push(m.into_values().collect());
        }
        t
    })?;
    Ok(Status::Passed)
}

fn gradient(cli: &Cli) -> anyhow::Result<Status> {
    let d = if cli.family.is_some() || cli.descriptor.is_some() {
        descriptor(cli)?
    } else {
        let dim = single_dim(cli)?.unwrap_or(3);
        let mut d = FamilyDescriptor::new(FamilyName::Torus)
            .with("dim", dim as f64)
            .with("bump", cli.bump.unwrap_or(0.2));
        d.grid = cli.grid;
        d
    };
    let base = numeric_field(&d)?;
    let n = base.dim();
    let ks = if cli.k.is_empty() { vec![0.5, 1.0, 1.5, 2.0, 2.5] } else { cli.k.clone() };
    let h: Arc<dyn SymmetricModel> = Arc::new(TrigTensorField::random(n, 4, 1, 0.1, cli.seed));
    let grid = GridSample::quadrature(base.chart(), grid_of(&d))?;
    let pf = PerturbedFamily::new(base, h)?;
    let checks = gradient_checks(&pf, &ks, &grid)?;
    let failures = checks.iter().filter(|c| c.residual.is_nan() || c.residual >= GRADIENT_TOL).count();
    let out = json!({"family": d, "seed": cli.seed, "tolerance": GRADIENT_TOL, "checks": checks});
    emit(cli, &out, || {
        let mut t = Table::new(["k", "alpha", "derivative", "pairing", "residual", "eps", "eps_max", "pass"]);
        for c in &checks {
            t.push(vec![
                c.k.to_string(),
                c.alpha.to_string(),
                c.derivative.to_string(),
                c.pairing.to_string(),
                c.residual.to_string(),
                c.eps.to_string(),
                c.eps_max.to_string(),
                (c.residual < GRADIENT_TOL).to_string(),
            ]);
        }
        t
    })?;
    Ok(if failures == 0 { Status::Passed } else { Status::Failed(failures) })
}
