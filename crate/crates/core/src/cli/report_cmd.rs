use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{emit, fmt_f, manifest_path, Cli, Outcome, ReportArgs};
use crate::asymptotics::{line4_coin_cycle, line4_position_cycle, BellCoinState};
use crate::attractors::orthonormal_basis;
use crate::error::{Error, Result};
use crate::hilbert::Topology;
use crate::report::{
    adjudicate_claims, compare_line4, concurrence_surface, contour_agreement, line4_projection, steady_state_table,
};

/// |b|² and |c|² values of the steady-state table.
const TABLE_WEIGHTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Tolerance of `--check-claims`.
const CLAIM_TOL: f64 = 1e-10;

fn write_file(dir: &Path, name: &str, text: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    emit(Some(&dir.join(name)), text, outputs)
}

fn steady_csv(sizes: &[usize]) -> Result<String> {
    let mut s = String::from(
        "n,b2,c2,c1,c2_coefficient,c3,lambda1,lambda2,lambda3,numeric_pt_min,numeric_pt_max,pt_formula_deviation\n",
    );
    for r in steady_state_table(sizes, &TABLE_WEIGHTS)? {
        let vals = [
            r.b2,
            r.c2,
            r.c1,
            r.c2_coefficient,
            r.c3,
            r.lambda1,
            r.lambda2,
            r.lambda3,
            r.numeric_pt_min,
            r.numeric_pt_max,
            r.pt_formula_deviation,
        ];
        let cells: Vec<String> = vals.iter().map(|v| fmt_f(*v)).collect();
        let _ = writeln!(s, "{},{}", r.n_sites, cells.join(","));
    }
    Ok(s)
}

fn coin_of(args: &ReportArgs) -> Result<BellCoinState> {
    let coin = args
        .init
        .coin()
        .ok_or_else(|| Error::InvalidParameter(format!("--init {} is not a two-particle coin state", args.init)))?;
    if let crate::cli::InitSpec::Bell { x, y, .. } = args.init {
        if (x, y) != (0, 0) {
            return Err(Error::InvalidParameter("the four-site cycles start both walkers at site 0".into()));
        }
    }
    if let crate::cli::InitSpec::Basis(v) = &args.init {
        if v.iter().any(|b| b.site != 0) {
            return Err(Error::InvalidParameter("the four-site cycles start both walkers at site 0".into()));
        }
    }
    Ok(coin)
}

/// Writes the figure 2 files; returns the comparison JSON and the gap between phases 1 and 3.
fn figure2(dir: &Path, coin: &BellCoinState, outputs: &mut Vec<PathBuf>) -> Result<(serde_json::Value, f64)> {
    let t = Topology::line(4)?;
    let basis = orthonormal_basis(&t)?;
    let projected = line4_projection(&basis, &t, coin)?;
    let formula_pos = line4_position_cycle(coin);
    let formula_coin = line4_coin_cycle(coin);

    let mut pos = String::from("phase,x,y,w_formula,w_projection\n");
    let mut coins = String::from("phase,row,col,formula_re,formula_im,projection_re,projection_im\n");
    for (k, (rc, w)) in projected.iter().enumerate() {
        let fw = formula_pos.phase(k);
        let fc = formula_coin.phase(k);
        let mut grid = String::new();
        for x in 0..4 {
            let row: Vec<String> = (0..4).map(|y| fmt_f(w[(x, y)])).collect();
            let _ = writeln!(grid, "{}", row.join(","));
            for y in 0..4 {
                let _ = writeln!(pos, "{k},{x},{y},{},{}", fmt_f(fw[(x, y)]), fmt_f(w[(x, y)]));
            }
        }
        write_file(dir, &format!("figure2_phase{k}.csv"), &grid, outputs)?;
        for r in 0..4 {
            for c in 0..4 {
                let (f, p) = (fc[(r, c)], rc[(r, c)]);
                let _ = writeln!(coins, "{k},{r},{c},{},{},{},{}", fmt_f(f.re), fmt_f(f.im), fmt_f(p.re), fmt_f(p.im));
            }
        }
    }
    write_file(dir, "figure2_positions.csv", &pos, outputs)?;
    write_file(dir, "coin_cycle.csv", &coins, outputs)?;
    let odd_gap = (&projected[1].1 - &projected[3].1).amax();
    let cmp = compare_line4(&basis, &t, coin)?;
    Ok((serde_json::to_value(cmp)?, odd_gap))
}

fn figure1(dir: &Path, q: f64, grid: usize, outputs: &mut Vec<PathBuf>) -> Result<serde_json::Value> {
    let surface = concurrence_surface(q, grid, grid)?;
    let mut s = String::from("b,phi,concurrence,npt\n");
    for p in &surface {
        let _ = writeln!(s, "{},{},{},{}", fmt_f(p.b), fmt_f(p.phi), fmt_f(p.concurrence), p.npt as u8);
    }
    write_file(dir, "figure1_concurrence.csv", &s, outputs)?;
    Ok(serde_json::to_value(contour_agreement(&surface, grid, grid))?)
}

pub(super) fn report(cli: &Cli, args: &ReportArgs) -> Result<Outcome> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    std::fs::create_dir_all(&dir)?;
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    summary.insert("directory".into(), json!(dir));
    let everything = args.figure.is_none() && !args.check_claims;
    let mut passed = true;

    if everything || args.figure == Some(1) {
        summary.insert("figure1_contour_agreement".into(), figure1(&dir, args.q, args.grid, &mut outputs)?);
    }
    let mut line4 = None;
    if everything || args.figure == Some(2) {
        let coin = coin_of(args)?;
        let (cmp, odd_gap) = figure2(&dir, &coin, &mut outputs)?;
        summary.insert("figure2_odd_phase_gap".into(), json!(odd_gap));
        summary.insert("line4_formula_vs_projection".into(), cmp.clone());
        line4 = Some(cmp);
    }
    if everything {
        write_file(&dir, "steady_state.csv", &steady_csv(&args.sizes)?, &mut outputs)?;
    }
    if everything || args.check_claims {
        let claims = adjudicate_claims(args.claims_n)?;
        let hold = claims.formulas_hold(CLAIM_TOL);
        if args.check_claims {
            passed &= hold;
        }
        let doc = json!({"claims": claims, "formulas_hold": hold, "line4": line4});
        write_file(&dir, "discrepancies.json", &(serde_json::to_string_pretty(&doc)? + "\n"), &mut outputs)?;
        summary.insert("claims_formulas_hold".into(), json!(hold));
        summary.insert("claim_ppt_for_all_inputs_holds".into(), json!(claims.claim_ppt_for_all_inputs_holds));
        summary.insert("claim_b1_equivalence_holds".into(), json!(claims.claim_b1_equivalence_holds));
    }
    summary.insert("files".into(), json!(outputs));
    summary.insert("passed".into(), json!(passed));
    print!("{}", serde_json::to_string_pretty(&serde_json::Value::Object(summary))? + "\n");
    Ok(Outcome { passed, outputs, manifest: Some(manifest_path(&dir, true)) })
}
