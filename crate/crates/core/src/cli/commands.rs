use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    emit, fmt_f, manifest_path, AsymptoticArgs, AsymptoticEmit, AttractorsArgs, Check, Cli, EntanglementArgs,
    EntanglementEmit, EvolveArgs, Format, Mode, Outcome, Split,
};
use crate::asymptotics::{asymptotic_cycle, position_distribution, reduced_coin_state};
use crate::attractors::oracle::{brute_force_attractor_space, check_oracle_guard};
use crate::attractors::{
    attractor_residual, conditions::check_shift_conditions, orthonormal_basis, orthonormal_basis_1p, AttractorBasis,
    Eigenvalue,
};
use crate::channel::{monte_carlo_state, PercolationChannel};
use crate::entanglement::{concurrence, pt_spectrum};
use crate::error::{Error, Result};
use crate::hilbert::{Topology, TopologyKind};
use crate::linalg::{hs_distance, DensityMatrix, Operator, OperatorJson};
use crate::percolation::ENUMERATION_GUARD;

/// Residual threshold for `--check residual` and `--check shift`.
pub const CHECK_TOL: f64 = 1e-10;

/// Largest two-particle system whose dense attractor basis the CLI builds (about 250 MB).
pub const DENSE_BASIS_MAX_SITES: usize = 12;

/// State file written by `evolve` and `asymptotic`, read by `entanglement`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub topology: TopologyKind,
    pub n_sites: usize,
    pub particles: usize,
    /// Step count (`evolve`) or cycle phase (`asymptotic`).
    pub step: u64,
    pub source: String,
    pub state: OperatorJson,
}

#[derive(Serialize)]
struct BasisEntry {
    eigenvalue: [f64; 2],
    provenance: String,
    operator: OperatorJson,
}

fn basis_for(topology: &Topology, particles: usize) -> Result<AttractorBasis> {
    if particles == 2 && topology.n_sites() > DENSE_BASIS_MAX_SITES {
        return Err(Error::Guard(format!(
            "dense two-particle attractor basis supports at most {DENSE_BASIS_MAX_SITES} sites, got {}",
            topology.n_sites()
        )));
    }
    if particles == 2 {
        orthonormal_basis(topology)
    } else {
        orthonormal_basis_1p(topology)
    }
}

fn sizes_json(sizes: [usize; 4]) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (l, s) in Eigenvalue::ALL.iter().zip(sizes) {
        if s > 0 {
            m.insert(l.to_string(), json!(s));
        }
    }
    serde_json::Value::Object(m)
}

fn operator_csv(out: &mut String, prefix: Option<u64>, m: &Operator) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if let Some(p) = prefix {
                let _ = write!(out, "{p},");
            }
            let _ = writeln!(out, "{r},{c},{},{}", fmt_f(z.re), fmt_f(z.im));
        }
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub(super) fn attractors(cli: &Cli, args: &AttractorsArgs) -> Result<Outcome> {
    let t = args.topology.build()?;
    let particles = args.particles as usize;
    if args.check == Some(Check::Oracle) {
        check_oracle_guard(&t, particles)?;
    }
    let basis = basis_for(&t, particles)?;
    let sizes = basis.sector_sizes();
    let wants = |c: Check| args.check == Some(c) || args.check == Some(Check::All);
    let mut passed = true;
    let mut checks = serde_json::Map::new();
    let mut oracle_dims: Option<[usize; 4]> = None;

    if wants(Check::Residual) {
        let mut worst: f64 = 0.0;
        for a in basis.elements() {
            worst = worst.max(attractor_residual(&a.operator, a.eigenvalue.value(), &t)?);
        }
        passed &= worst < CHECK_TOL;
        checks.insert("residual".into(), json!({"max": worst, "pass": worst < CHECK_TOL}));
    }
    if wants(Check::Shift) {
        if t.num_edges() > ENUMERATION_GUARD {
            return Err(Error::Guard(format!(
                "shift check covers every configuration; {} edges exceed {ENUMERATION_GUARD}",
                t.num_edges()
            )));
        }
        let mut worst: f64 = 0.0;
        for a in basis.elements() {
            worst = worst.max(check_shift_conditions(&a.operator, &t)?);
        }
        passed &= worst < CHECK_TOL;
        checks.insert("shift".into(), json!({"max": worst, "pass": worst < CHECK_TOL}));
    }
    if wants(Check::Oracle) {
        match brute_force_attractor_space(&t, particles) {
            Ok(space) => {
                let dims = space.dimensions();
                let matches = dims == sizes;
                passed &= matches;
                let sectors: Vec<_> = space
                    .sectors
                    .iter()
                    .map(|s| {
                        json!({
                            "eigenvalue": s.eigenvalue.to_string(),
                            "dimension": s.dimension,
                            "largest_null_singular_value": s.null_singular_values.last(),
                            "gap_singular_value": s.gap_singular_value,
                        })
                    })
                    .collect();
                let mut entry = json!({"dimensions": sizes_json(dims), "match": matches, "sectors": sectors});
                if let Some(p) = &space.peripheral {
                    let clean = p.outside_candidates.is_empty();
                    passed &= clean;
                    entry["dense_spectrum"] = json!({
                        "unimodular": p.unimodular.len(),
                        "outside_candidates": p.outside_candidates.len(),
                        "spectral_radius": p.spectral_radius,
                    });
                }
                oracle_dims = Some(dims);
                checks.insert("oracle".into(), entry);
            }
            Err(Error::Guard(msg)) if args.check == Some(Check::All) => {
                checks.insert("oracle".into(), json!({"skipped": msg}));
            }
            Err(e) => return Err(e),
        }
    }

    let mut outputs = Vec::new();
    let manifest = match &cli.out {
        Some(path) => {
            let entries: Vec<BasisEntry> = basis
                .elements()
                .iter()
                .map(|a| BasisEntry {
                    eigenvalue: [a.eigenvalue.value().re, a.eigenvalue.value().im],
                    provenance: a.provenance.to_string(),
                    operator: OperatorJson::from(&a.operator),
                })
                .collect();
            std::fs::write(path, serde_json::to_string(&entries)?)?;
            outputs.push(path.clone());
            Some(manifest_path(path, false))
        }
        None => None,
    };

    let text = match cli.format {
        Format::Json => pretty(&json!({
            "topology": t.kind(),
            "n_sites": t.n_sites(),
            "particles": particles,
            "sizes": sizes_json(sizes),
            "total": basis.len(),
            "gram_deviation": basis.gram_deviation(),
            "checks": checks,
            "passed": passed,
        }))?,
        Format::Csv => {
            let mut s = String::from("eigenvalue,analytic,oracle\n");
            for (k, l) in Eigenvalue::ALL.iter().enumerate() {
                let o = oracle_dims.map_or(String::new(), |d| d[k].to_string());
                let _ = writeln!(s, "{l},{},{o}", sizes[k]);
            }
            s
        }
    };
    print!("{text}");
    Ok(Outcome { passed, outputs, manifest })
}

fn write_state(cli: &Cli, file: &StateFile, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let Some(path) = &cli.out else { return Ok(()) };
    let text = match cli.format {
        Format::Json => serde_json::to_string(file)?,
        Format::Csv => {
            let m = Operator::try_from(&file.state)?;
            let mut s = String::from("row,col,re,im\n");
            operator_csv(&mut s, None, &m);
            s
        }
    };
    emit(Some(path), &text, outputs)
}

pub(super) fn evolve(cli: &Cli, args: &EvolveArgs) -> Result<Outcome> {
    let t = args.topology.build()?;
    let particles = args.particles as usize;
    let model = args.model.build(&t)?;
    let rho0 = args.init.density(&t, particles)?;
    let track = args.series.is_some() || args.check_converged;
    let mut outputs = Vec::new();
    let mut series: Vec<(usize, f64)> = Vec::new();
    let rho = match args.mode {
        Mode::Exact => {
            let channel = PercolationChannel::new(&t, &model, particles)?;
            let cycle = if track { Some(asymptotic_cycle(&rho0, &basis_for(&t, particles)?)?) } else { None };
            let mut rho = rho0.clone();
            for step in 0..=args.steps {
                if let Some(c) = &cycle {
                    series.push((step, hs_distance(&rho, c.phase(step))));
                }
                if step < args.steps {
                    rho = channel.apply(&rho)?;
                }
            }
            rho
        }
        Mode::Mc => {
            if track {
                return Err(Error::InvalidParameter("--series and --check-converged need --mode exact".into()));
            }
            let psi = args
                .init
                .state_vector(&t, particles)?
                .ok_or_else(|| Error::InvalidParameter("Monte-Carlo sampling needs a pure initial state".into()))?;
            monte_carlo_state(&psi, &t, &model, particles, args.steps, args.trajectories, cli.seed)?
        }
    };

    if let Some(path) = &args.series {
        let mut s = String::from("t,hs_distance\n");
        for (step, d) in &series {
            let _ = writeln!(s, "{step},{}", fmt_f(*d));
        }
        emit(Some(path), &s, &mut outputs)?;
    }
    let file = StateFile {
        topology: t.kind(),
        n_sites: t.n_sites(),
        particles,
        step: args.steps as u64,
        source: match args.mode {
            Mode::Exact => "evolve-exact".into(),
            Mode::Mc => format!("evolve-mc trajectories={} seed={}", args.trajectories, cli.seed),
        },
        state: OperatorJson::from(&rho),
    };
    write_state(cli, &file, &mut outputs)?;

    let final_distance = series.last().map(|s| s.1);
    // first step after which the distance stays below tol
    let mixing_time = if series.is_empty() {
        None
    } else {
        match series.iter().rposition(|s| s.1 >= args.tol) {
            None => Some(0),
            Some(k) if k + 1 < series.len() => Some(series[k + 1].0),
            Some(_) => None,
        }
    };
    let passed = !args.check_converged || final_distance.is_some_and(|d| d < args.tol);
    let purity = (&rho * &rho).trace().re;
    print!(
        "{}",
        pretty(&json!({
            "topology": t.kind(),
            "n_sites": t.n_sites(),
            "particles": particles,
            "steps": args.steps,
            "mode": args.mode,
            "trace": rho.trace().re,
            "purity": purity,
            "final_distance_to_cycle": final_distance,
            "mixing_time": mixing_time,
            "tol": args.tol,
            "passed": passed,
        }))?
    );
    let manifest = outputs.first().map(|p| manifest_path(p, false));
    Ok(Outcome { passed, outputs, manifest })
}

pub(super) fn asymptotic(cli: &Cli, args: &AsymptoticArgs) -> Result<Outcome> {
    let t = args.topology.build()?;
    let rho0 = args.init.density(&t, 2)?;
    let basis = orthonormal_basis(&t)?;
    let cycle = asymptotic_cycle(&rho0, &basis)?;
    let phases: Vec<u64> = match args.phase.as_str() {
        "all" => (0..4).collect(),
        p => vec![p.parse().map_err(|_| Error::Parse(format!("bad phase {p:?}")))?],
    };
    let many = phases.len() > 1;
    let mut outputs = Vec::new();
    let text = match cli.format {
        Format::Json => {
            let items: Vec<serde_json::Value> = phases
                .iter()
                .map(|&k| {
                    let rho = cycle.phase(k as usize);
                    let value = match args.emit {
                        AsymptoticEmit::State => serde_json::to_value(StateFile {
                            topology: t.kind(),
                            n_sites: t.n_sites(),
                            particles: 2,
                            step: k,
                            source: format!("asymptotic phase {k} of {}", args.init),
                            state: OperatorJson::from(rho),
                        })?,
                        AsymptoticEmit::Positions => {
                            let w = position_distribution(rho)?;
                            json!((0..w.nrows()).map(|x| w.row(x).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
                        }
                        AsymptoticEmit::Coins => serde_json::to_value(OperatorJson::from(&reduced_coin_state(rho)?))?,
                    };
                    Ok(json!({"phase": k, "value": value}))
                })
                .collect::<Result<_>>()?;
            // a single state phase is written as a bare state file so `entanglement` can read it
            if !many && args.emit == AsymptoticEmit::State {
                serde_json::to_string(&items[0]["value"])? + "\n"
            } else {
                pretty(&json!({
                    "topology": t.kind(),
                    "n_sites": t.n_sites(),
                    "init": args.init.to_string(),
                    "period": cycle.period,
                    "emit": args.emit,
                    "phases": items,
                }))?
            }
        }
        Format::Csv => {
            let mut s = String::new();
            let head = if many { "phase," } else { "" };
            match args.emit {
                AsymptoticEmit::Positions => {
                    let _ = writeln!(s, "{head}x,y,w");
                    for &k in &phases {
                        let w = position_distribution(cycle.phase(k as usize))?;
                        for x in 0..w.nrows() {
                            for y in 0..w.ncols() {
                                let p = if many { format!("{k},") } else { String::new() };
                                let _ = writeln!(s, "{p}{x},{y},{}", fmt_f(w[(x, y)]));
                            }
                        }
                    }
                }
                AsymptoticEmit::State | AsymptoticEmit::Coins => {
                    let _ = writeln!(s, "{head}row,col,re,im");
                    for &k in &phases {
                        let rho = cycle.phase(k as usize);
                        let m = if args.emit == AsymptoticEmit::Coins { reduced_coin_state(rho)? } else { rho.clone() };
                        operator_csv(&mut s, many.then_some(k), &m);
                    }
                }
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text, &mut outputs)?;
    let manifest = cli.out.as_ref().map(|p| manifest_path(p, false));
    Ok(Outcome { passed: true, outputs, manifest })
}

/// Reads a [`StateFile`] or a bare operator JSON.
pub fn read_state(path: &std::path::Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let op: OperatorJson = if value.get("state").is_some() {
        serde_json::from_value::<StateFile>(value)?.state
    } else {
        serde_json::from_value(value)?
    };
    Operator::try_from(&op)
}

fn square_side(dim: usize) -> Result<usize> {
    let d = (dim as f64).sqrt().round() as usize;
    if d * d != dim {
        return Err(Error::DimensionMismatch { expected: d * d, got: dim });
    }
    Ok(d)
}

pub(super) fn entanglement(cli: &Cli, args: &EntanglementArgs) -> Result<Outcome> {
    let rho = read_state(&args.input)?;
    let (m, dims) = match args.split {
        Split::Coins => {
            let m = if rho.nrows() == 4 { rho } else { reduced_coin_state(&rho)? };
            (m, (2, 2))
        }
        Split::Particles => {
            let d = square_side(rho.nrows())?;
            (rho, (d, d))
        }
    };
    let mut out = json!({"split": args.split, "dims": [dims.0, dims.1]});
    let mut csv = String::new();
    match args.emit {
        EntanglementEmit::PtSpectrum => {
            let spec = pt_spectrum(&m, dims)?;
            csv.push_str("index,eigenvalue\n");
            for (k, v) in spec.eigenvalues.iter().enumerate() {
                let _ = writeln!(csv, "{k},{}", fmt_f(*v));
            }
            out["pt_spectrum"] = serde_json::to_value(&spec)?;
        }
        EntanglementEmit::Negativity => {
            let spec = pt_spectrum(&m, dims)?;
            let _ = writeln!(csv, "quantity,value\nnegativity,{}\nmin_pt_eigenvalue,{}", fmt_f(spec.negativity), fmt_f(spec.min()));
            out["negativity"] = json!(spec.negativity);
            out["is_ppt"] = json!(spec.is_ppt);
        }
        EntanglementEmit::Concurrence => {
            if dims != (2, 2) {
                return Err(Error::InvalidParameter("concurrence is defined for two qubits; use --split coins".into()));
            }
            let c = concurrence(&m)?;
            let _ = writeln!(csv, "quantity,value\nconcurrence,{}", fmt_f(c));
            out["concurrence"] = json!(c);
        }
    }
    let text = match cli.format {
        Format::Json => pretty(&out)?,
        Format::Csv => csv,
    };
    let mut outputs = Vec::new();
    emit(cli.out.as_deref(), &text, &mut outputs)?;
    let manifest = cli.out.as_ref().map(|p| manifest_path(p, false));
    Ok(Outcome { passed: true, outputs, manifest })
}
