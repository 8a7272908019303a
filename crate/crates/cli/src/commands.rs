//! Subcommand bodies. Each returns its checks and the report in both
//! output formats; writing files is left to the caller.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use hbarlab_core::explosion::{
    builtin_map, check_compatible, explode_jacobian, explode_jacobian_fd, explode_map, explode_map_limit, CompatibleMap,
    ExplodedPoint, ExplosiveChart,
};
use hbarlab_core::field::{assemble_field, continuity_report, Backend, FieldSymbol};
use hbarlab_core::fuzzy::{classical_limit_curve, dirac_defect_curve, resolution_of_identity, FuzzySphere, SphereSymbol};
use hbarlab_core::groupoid::{
    broken_constant_pi_model, check_axioms, check_forms, coboundary_form, coboundary_function, constant_pi_model,
    exploded_contact_form, exploded_symplectic_form, pair_groupoid_line, ConstantPoissonData, DifferentialFormModel,
};
use hbarlab_core::moyal::{ev0, kahler_product, unit_multiplier_grid, unit_multiplier_on, GridSpec};
use hbarlab_core::planck::{bohr_sommerfeld_set, monodromy_ratio_report, AreaProfile, ScanGrid, Verdict};
use hbarlab_core::poly::PolyMap;
use hbarlab_core::report::Residual;
use hbarlab_core::sampling::{self, uniform};
use hbarlab_core::{Error, Result};

use crate::config::{BackendName, CheckParams, ExplodeParams, FieldParams, FuzzyParams, MoyalParams, PlanckParams};
use crate::output::{csv, num, opt_num};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < tolerance`; NaN fails.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value < tolerance }
    }

    pub fn flag(name: impl Into<String>, value: f64, tolerance: f64, passed: bool) -> Self {
        Check { name: name.into(), value, tolerance, passed }
    }

    pub fn summary(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} {} value={:.6e} tol={:.1e}", self.name, self.value, self.tolerance)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// Informational lines printed after the checks.
    pub notes: Vec<String>,
    pub csv: String,
    pub report: Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check_table(checks: &[Check]) -> String {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()])
        .collect();
    csv(&["check", "value", "tolerance", "passed"], &rows)
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn run_check(p: &CheckParams, seed: u64) -> Result<Outcome> {
    let data = ConstantPoissonData::standard(2)?;
    let model = match p.model.as_str() {
        "constant-pi" => constant_pi_model(&data)?,
        "constant-pi-broken" => broken_constant_pi_model(&data)?,
        "pair-line" => pair_groupoid_line(),
        other => return Err(Error::Argument(format!("unknown groupoid model '{other}'"))),
    };
    let mut rng = sampling::rng(seed);
    let axioms = check_axioms(&model, p.n, p.tol, &mut rng)?;
    let mut checks: Vec<Check> =
        axioms.residuals.iter().map(|r| Check::below(format!("axiom:{}", r.name), r.max, p.tol)).collect();
    let mut forms = Value::Null;
    if p.model == "constant-pi" {
        let samples = p.n.min(1000);
        let omega = exploded_symplectic_form(2);
        let f = check_forms(&model, &omega, samples, 1e-9, &mut rng)?;
        checks.push(Check::below("omega:closed", f.closedness.max, 1e-9));
        checks.push(Check::below("omega:multiplicative", f.multiplicativity.max, 1e-9));
        let DifferentialFormModel::Two { eval, .. } = &omega else { unreachable!("symplectic form is a 2-form") };
        let theta = exploded_contact_form(2);
        let (mut det, mut th, mut hz) = (Residual::new("det"), Residual::new("theta"), Residual::new("hbar_z"));
        for _ in 0..samples {
            let g = (model.sample_arrow)(&mut rng).map_err(|r| Error::Sampler { diagram: "forms".into(), reason: r })?;
            det.observe((eval(&g).determinant().abs() - 1.0).abs(), &g);
            let pr = (model.sample_pair)(&mut rng).map_err(|r| Error::Sampler { diagram: "forms".into(), reason: r })?;
            th.observe(coboundary_form(&theta, &model, &pr)?.norm(), &pr);
            let v = coboundary_function(&|g: &[f64]| g[5] * g[4], &model, &pr);
            hz.observe((v - 0.5 * pr[8] * data.pair(&pr[2..4], &pr[4..6])).abs(), &pr);
        }
        checks.push(Check::below("omega:abs_det_minus_one", det.max, 1e-12));
        checks.push(Check::below("theta:multiplicative", th.max, 1e-9));
        checks.push(Check::below("coboundary:hbar_z", hz.max, 1e-9));
        forms = json!({ "forms": to_value(&f), "det": to_value(&det), "theta": to_value(&th), "hbar_z": to_value(&hz) });
    }
    Ok(Outcome {
        csv: check_table(&checks),
        report: json!({ "model": p.model, "axioms": to_value(&axioms), "forms": forms, "checks": to_value(&checks) }),
        checks,
        notes: vec![],
    })
}

fn load_map(p: &ExplodeParams) -> Result<CompatibleMap> {
    match &p.poly_map {
        None => builtin_map(&p.model),
        Some(path) => {
            let map = PolyMap::from_json(&read_input(path)?)?;
            let [nx, ny, nz] = p.dims;
            let source = ExplosiveChart::symmetric(nx, ny, nz, p.radius)?;
            let target = ExplosiveChart::symmetric(nx, ny, nz, 1e6)?;
            CompatibleMap::from_poly(map, source, target)
        }
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs() / scale))
}

pub fn run_explode(p: &ExplodeParams, seed: u64) -> Result<Outcome> {
    let map = load_map(p)?;
    let mut rng = sampling::rng(seed);
    let compat = check_compatible(&map, p.n, 1e-9, &mut rng)?;
    let mut checks: Vec<Check> =
        compat.residuals.iter().map(|r| Check::below(format!("compatible:{}", r.name), r.max, 1e-9)).collect();
    let mut notes = vec![];
    if compat.passed {
        let (mut cont, mut jac) = (Residual::new("continuity"), Residual::new("jacobian"));
        let (src_lo, src_hi) = (&map.source.lower, &map.source.upper);
        for _ in 0..p.n.min(50) {
            // Middle half of the source box.
            let mut flat: Vec<f64> = src_lo
                .iter()
                .zip(src_hi)
                .map(|(l, u)| uniform(&mut rng, (3.0 * l + u) / 4.0, (l + 3.0 * u) / 4.0))
                .collect();
            flat.push(0.0);
            let pt = ExplodedPoint::from_flat(&map.source, &flat)?;
            let closed = explode_map(&map, &pt)?.flat();
            let (lim, _) = explode_map_limit(&map, &pt, &[1e-2, 1e-3, 1e-4])?;
            cont.observe(rel_err(&closed, &lim), &flat);
            let j = explode_jacobian(&map, &pt)?;
            let fd = explode_jacobian_fd(&map, &pt, 1e-4)?;
            jac.observe((&j - &fd).amax() / j.amax().max(1.0), &flat);
        }
        checks.push(Check::below("continuity_at_zero", cont.max, 1e-6));
        checks.push(Check::below("jacobian_vs_fd", jac.max, 1e-6));
    } else {
        notes.push("continuity and Jacobian checks skipped: the map is not compatible".into());
    }
    Ok(Outcome {
        csv: check_table(&checks),
        report: json!({ "map": p.poly_map.as_ref().map(|x| x.display().to_string()).unwrap_or(p.model.clone()), "compatibility": to_value(&compat), "checks": to_value(&checks) }),
        checks,
        notes,
    })
}

/// Lattice points `y` at which the classical limit of K is sampled; all lie
/// on the half-unit grid used for the family.
const EV0_POINTS: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, -1.0], [1.5, 0.5]];

pub fn run_moyal(p: &MoyalParams) -> Result<Outcome> {
    let data = ConstantPoissonData::standard_kahler(2)?;
    let mut checks = vec![];
    let mut rows = vec![];
    for &h in &p.hbar {
        let k = unit_multiplier_on(h, &data, unit_multiplier_grid(h, &data, p.points)?)?;
        let kk = kahler_product(&k, &k, &data)?;
        let err = kk.max_diff(&k)?;
        checks.push(Check::below(format!("unit_idempotent[hbar={h}]"), err, 1e-6));
        rows.push(json!({ "hbar": h, "error": err, "boundary_mass": kk.diagnostics.boundary_mass }));
    }
    let grid = GridSpec::cube(2, 9, 0.5)?;
    let fam = p.ev0_hbar.iter().map(|&h| unit_multiplier_on(h, &data, grid.clone())).collect::<Result<Vec<_>>>()?;
    let mut worst = Residual::new("ev0");
    for y in EV0_POINTS {
        let r = ev0(&fam, &[0.0, 0.0], &y)?;
        worst.observe((r.value - 1.0).norm(), &y);
    }
    checks.push(Check::below("ev0_unit", worst.max, 1e-3));
    Ok(Outcome {
        csv: check_table(&checks),
        report: json!({ "points": p.points, "idempotence": rows, "ev0": to_value(&worst), "checks": to_value(&checks) }),
        checks,
        notes: vec![],
    })
}

fn load_sphere_symbol(p: &FuzzyParams) -> Result<SphereSymbol> {
    match &p.nodes {
        None => SphereSymbol::builtin(&p.symbol),
        Some(path) => SphereSymbol::from_node_csv(path.display().to_string(), read_input(path)?.as_bytes()),
    }
}

pub fn run_fuzzy(p: &FuzzyParams) -> Result<Outcome> {
    let f = load_sphere_symbol(p)?;
    let curve = classical_limit_curve(&f, &p.k_list)?;
    let mut res = Residual::new("resolution_of_identity");
    for &k in &p.k_list {
        let fs = FuzzySphere::new(k, 0)?;
        res.observe(resolution_of_identity(&fs.frame, &fs.quad)?, &[k as f64]);
    }
    let mut checks = vec![Check::below("resolution_of_identity", res.max, 1e-9)];
    let rise = curve.rows.windows(2).fold(0.0f64, |m, w| m.max(w[1].error - w[0].error));
    checks.push(Check::flag("classical_limit_monotone", rise, 0.0, curve.monotone));
    let dirac = match &p.partner {
        Some(g) => {
            let c = dirac_defect_curve(&f, &SphereSymbol::builtin(g)?, &p.k_list)?;
            let rise = c.rows.windows(2).fold(0.0f64, |m, w| m.max(w[1].error - w[0].error));
            checks.push(Check::flag("dirac_defect_monotone", rise, 0.0, c.monotone));
            Some(c)
        }
        None => None,
    };
    let mut header = vec!["k", "hbar", "error", "order"];
    if dirac.is_some() {
        header.extend(["dirac_defect", "dirac_order"]);
    }
    let rows: Vec<Vec<String>> = curve
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.k.to_string(), num(1.0 / r.k as f64), num(r.error), opt_num(curve.order)];
            if let Some(d) = &dirac {
                row.extend([num(d.rows[i].error), opt_num(d.order)]);
            }
            row
        })
        .collect();
    let notes = vec![format!("fitted order {}", curve.order.map(|o| format!("{o:.4}")).unwrap_or_else(|| "n/a (exact)".into()))];
    Ok(Outcome {
        csv: csv(&header, &rows),
        report: json!({ "symbol": f.name, "classical_limit": to_value(&curve), "dirac": dirac.as_ref().map(to_value), "resolution_of_identity": to_value(&res), "checks": to_value(&checks) }),
        checks,
        notes,
    })
}

/// Tolerance on `|A_i(hbar) - n_i|` at the reported entries.
pub const INTEGRALITY_TOL: f64 = 1e-9;

pub fn run_planck(p: &PlanckParams) -> Result<Outcome> {
    let profile = match &p.profile {
        None => AreaProfile::builtin(&p.model)?,
        Some(path) => AreaProfile::from_json(&read_input(path)?)?,
    };
    let set = bohr_sommerfeld_set(&profile, p.min_hbar)?;
    let mut worst = Residual::new("integrality");
    let mut rows = vec![];
    let m = profile.components.len();
    for e in set.positive() {
        let a = profile.eval(e.hbar);
        for (v, n) in a.iter().zip(&e.integers) {
            worst.observe((v - *n as f64).abs(), &[e.hbar]);
        }
        let mut row = vec![num(e.hbar)];
        row.extend(e.integers.iter().map(|n| n.to_string()));
        row.push(e.size().map(|s| s.to_string()).unwrap_or_default());
        rows.push(row);
    }
    let checks = vec![Check::below("integrality", worst.max, INTEGRALITY_TOL)];
    let names: Vec<String> = (1..=m).map(|i| format!("n{i}")).collect();
    let mut header = vec!["hbar"];
    header.extend(names.iter().map(String::as_str));
    header.push("size");
    let scan = ScanGrid { lo: p.min_hbar.min(profile.hbar_max / 2.0), hi: profile.hbar_max, points: 200 };
    let integrability = monodromy_ratio_report(&profile, scan)?;
    let verdict = match &integrability.verdict {
        Verdict::IntegrableCompatible => "integrable-compatible".to_string(),
        Verdict::Nonintegrable { clause } => format!("nonintegrable ({clause})"),
        Verdict::Indeterminate { reason } => format!("indeterminate ({reason})"),
    };
    let notes = vec![format!("{} admissible hbar values in [{}, {}]", rows.len(), p.min_hbar, profile.hbar_max), format!("verdict: {verdict}")];
    Ok(Outcome {
        csv: csv(&header, &rows),
        report: json!({ "planck_set": to_value(&set), "integrability": to_value(&integrability), "checks": to_value(&checks) }),
        checks,
        notes,
    })
}

pub fn run_field(p: &FieldParams) -> Result<Outcome> {
    let backend = match p.backend {
        BackendName::Fuzzy => Backend::Fuzzy,
        BackendName::Moyal => Backend::moyal_standard()?,
    };
    let index = match (p.backend, &p.hbar) {
        (BackendName::Moyal, None) => vec![0.4, 0.2, 0.1],
        _ => p.index(),
    };
    let field = assemble_field(backend, &index)?;
    let f = FieldSymbol::builtin(&field.backend, p.symbol())?;
    let g = FieldSymbol::builtin(&field.backend, p.partner())?;
    let rep = continuity_report(&field, &f, Some(&g))?;
    let classical = rep.rows.last().expect("classical row").norm;
    let positive = &rep.rows[..rep.rows.len() - 1];
    let smallest = positive.last().expect("at least 3 fibers");
    let mut checks = vec![Check::below("norm_continuity", smallest.deviation / classical.max(f64::MIN_POSITIVE), 0.15)];
    // Small-k fibers are pre-asymptotic, so only the end points are compared.
    let (first, last) = (positive[0].product_defect.unwrap_or(0.0), smallest.product_defect.unwrap_or(0.0));
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    checks.push(Check::flag("product_defect_decay", ratio, 1.0, last <= first));
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.hbar),
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                num(r.norm),
                num(r.deviation),
                opt_num(r.product_defect),
                opt_num(r.dirac_defect),
            ]
        })
        .collect();
    let fmt = |o: Option<f64>| o.map(|o| format!("{o:.4}")).unwrap_or_else(|| "n/a".into());
    let notes = vec![
        format!("norm proxy: {}", rep.norm_proxy),
        format!(
            "fitted orders: deviation {}, product defect {}, dirac defect {}",
            fmt(rep.orders.deviation),
            fmt(rep.orders.product_defect),
            fmt(rep.orders.dirac_defect)
        ),
    ];
    Ok(Outcome {
        csv: csv(&["hbar", "k", "norm", "deviation", "product_defect", "dirac_defect"], &rows),
        report: json!({ "continuity": to_value(&rep), "checks": to_value(&checks) }),
        checks,
        notes,
    })
}
