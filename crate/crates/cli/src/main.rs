//! Command-line front end: reproducible spectrum/closeness experiments
//! with CSV output (header row, 12 significant digits, deterministic).

use clap::{Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use thinspec::closeness::{closeness_sweep, property_suite};
use thinspec::discrete::{
    decimation_level, discrete_laplacian, discrete_spectrum, sierpinski_levels,
};
use thinspec::error::{Error, Result};
use thinspec::graph::{generate_graph, graph_from_json, GraphKind, MetricGraph};
use thinspec::manifold::EmbeddedGraph;
use thinspec::quantum::{assemble_kirchhoff, eigenpairs, mu_preimages};

#[derive(Parser)]
#[command(name = "thinspec", about = "Metric-graph and thin-neighborhood spectral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kirchhoff Laplacian eigenvalues of a metric graph (1D P1 FEM)
    Spectrum {
        /// graph JSON file
        graph: PathBuf,
        #[arg(long, default_value_t = 6)]
        num_eigs: usize,
        #[arg(long, default_value_t = 0.01)]
        mesh_h: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Thin-neighborhood sweep: mesh the ε-neighborhood for each ε, measure
    /// δ-closeness against the metric graph, report eigenvalue errors
    Sweep {
        /// graph JSON file with a planar embedding (straight edges)
        graph: PathBuf,
        /// comma-separated, positive, strictly decreasing
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// transversal mesh resolution (cells across the strip width)
        #[arg(long, default_value_t = 6)]
        mesh_across: usize,
        #[arg(long, default_value_t = 6)]
        num_eigs: usize,
        #[arg(long, default_value_t = 12.0)]
        lambda_max: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sierpiński decimation: level sets of p(z) = z(5−4z), the finite
    /// gasket spectrum, and the metric-graph eigenvalues they induce
    Sierpinski {
        #[arg(long)]
        generations: usize,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 40.0)]
        lambda_max: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Bound-verification battery over seeded random δ-close pairs
    ClosenessRandom {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{:.11e}", x)
}

fn write_out(out_dir: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), content)?;
    }
    print!("{content}");
    Ok(())
}

fn load_graph(path: &PathBuf) -> Result<(MetricGraph, Option<thinspec::graph::EmbeddingJson>)> {
    let text = fs::read_to_string(path)?;
    graph_from_json(&text)
}

fn cmd_spectrum(graph: &PathBuf, num_eigs: usize, mesh_h: f64, out_dir: &Option<PathBuf>) -> Result<()> {
    let (g, _) = load_graph(graph)?;
    let fem = assemble_kirchhoff(&g, mesh_h)?;
    let eigs = eigenpairs(&fem, num_eigs)?;
    let vals: Vec<f64> = eigs.iter().map(|e| e.lambda).collect();
    let mut csv = String::from("index,eigenvalue,est_multiplicity\n");
    for (i, &l) in vals.iter().enumerate() {
        // cluster size within a relative tolerance as a multiplicity hint
        let tol = 1e-6 * (1.0 + l.abs());
        let mult = vals.iter().filter(|&&m| (m - l).abs() <= tol).count();
        csv.push_str(&format!("{i},{},{mult}\n", sig12(l)));
    }
    write_out(out_dir, "spectrum.csv", &csv)
}

fn cmd_sweep(
    graph: &PathBuf,
    eps: &[f64],
    mesh_across: usize,
    num_eigs: usize,
    lambda_max: f64,
    out_dir: &Option<PathBuf>,
) -> Result<()> {
    if eps.iter().any(|&e| e <= 0.0) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParam("--eps must be positive and strictly decreasing".into()));
    }
    let (g, emb) = load_graph(graph)?;
    let eg = match &emb {
        Some(e) => {
            let eg = EmbeddedGraph::from_metric_with_curves(&g, e)?;
            if eg.edges.iter().any(|ed| !ed.is_straight()) {
                return Err(Error::Unsupported("sweep requires straight edges".into()));
            }
            eg
        }
        None => EmbeddedGraph::from_metric(&g)?,
    };
    let rows = closeness_sweep(&eg, eps, mesh_across, num_eigs, lambda_max)
        .map_err(|e| Error::InvalidParam(format!("sweep failed (largest ε first): {e}")))?;
    let mut csv = String::from(
        "eps,delta_scale,delta_scale_p,delta_adj,delta_comm,delta_inv,delta_inv_p,delta,\
         resolvent_defect,bound_4delta,dbar_spectra",
    );
    for k in 0..num_eigs {
        csv.push_str(&format!(",graph_eig_{k},manifold_eig_{k},err_{k}"));
    }
    csv.push('\n');
    for r in &rows {
        let rep = &r.report;
        let cols = [
            r.eps,
            rep.d_scale,
            rep.d_scale_p,
            rep.d_adj,
            rep.d_comm,
            rep.d_inv,
            rep.d_inv_p,
            rep.delta(),
            r.resolvent_defect,
            r.bound_4delta,
            r.d_bar,
        ];
        csv.push_str(&cols.map(sig12).join(","));
        for k in 0..num_eigs {
            let (gk, mk) = (r.graph_eigs.get(k), r.manifold_eigs.get(k));
            match (gk, mk) {
                (Some(&a), Some(&b)) => {
                    csv.push_str(&format!(",{},{},{}", sig12(a), sig12(b), sig12((a - b).abs())))
                }
                _ => csv.push_str(",,,"),
            }
        }
        csv.push('\n');
    }
    write_out(out_dir, "sweep.csv", &csv)?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.report.delta()).collect();
    let dec = deltas.windows(2).all(|w| w[1] < w[0]);
    println!("# delta strictly decreasing over eps: {dec}");
    let res_ok = rows.iter().all(|r| r.resolvent_defect <= r.bound_4delta + 1e-9);
    println!("# resolvent defect <= 4*delta on every row: {res_ok}");
    if let Some(k) = (1..num_eigs).find(|&k| {
        rows.iter().all(|r| r.graph_eigs.get(k).zip(r.manifold_eigs.get(k)).is_some())
    }) {
        let errs: Vec<f64> = rows
            .iter()
            .map(|r| (r.graph_eigs[k] - r.manifold_eigs[k]).abs())
            .collect();
        let mono = errs.windows(2).all(|w| w[1] < w[0]);
        println!("# eigenvalue {k} error decreasing: {mono}");
    }
    Ok(())
}

fn cmd_sierpinski(generations: usize, levels: usize, lambda_max: f64, out_dir: &Option<PathBuf>) -> Result<()> {
    if generations == 0 {
        return Err(Error::InvalidParam("--generations must be >= 1".into()));
    }
    if generations > 8 {
        return Err(Error::InvalidParam(format!(
            "--generations {generations} refused: the dense solver stops at generation 8 ({} vertices)",
            (3usize.pow(8) + 3) / 2
        )));
    }
    let d = sierpinski_levels(levels);
    let g = generate_graph(GraphKind::SierpinskiMetric(generations, 1.0))?;
    let spec = discrete_spectrum(&discrete_laplacian(&g.to_discrete())?)?;
    let mut csv = String::from("kind,index,value,detail\n");
    for (i, &z) in d.iter().enumerate() {
        let lvl = decimation_level(z, levels).map(|j| j.to_string()).unwrap_or_default();
        csv.push_str(&format!("level_set,{i},{},{lvl}\n", sig12(z)));
    }
    for (i, &mu) in spec.iter().enumerate() {
        csv.push_str(&format!("graph_spectrum,{i},{},\n", sig12(mu)));
    }
    // metric-graph eigenvalues induced by each level value strictly inside
    // (0,2); the complement intervals between them are the spectral gaps
    let mut idx = 0usize;
    for &mu in &d {
        if mu <= 1e-9 || mu >= 2.0 - 1e-9 {
            continue;
        }
        for lam in mu_preimages(mu, 1.0, lambda_max)? {
            csv.push_str(&format!("metric_preimage,{idx},{},mu={}\n", sig12(lam), sig12(mu)));
            idx += 1;
        }
    }
    write_out(out_dir, "sierpinski.csv", &csv)
}

fn cmd_closeness_random(trials: usize, seed: u64, out_dir: &Option<PathBuf>) -> Result<()> {
    let out = property_suite(seed, trials)?;
    let mut txt = format!(
        "trials = {}\nviolations = {}\nworst_excess = {}\n",
        out.trials,
        out.violations,
        if out.worst_excess.is_finite() { sig12(out.worst_excess) } else { "n/a".into() }
    );
    for n in &out.notes {
        txt.push_str(&format!("note: {n}\n"));
    }
    write_out(out_dir, "closeness_random.txt", &txt)?;
    if out.violations > 0 {
        return Err(Error::InvalidParam(format!("{} bound violations", out.violations)));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Spectrum { graph, num_eigs, mesh_h, out_dir } => {
            cmd_spectrum(graph, *num_eigs, *mesh_h, out_dir)
        }
        Command::Sweep { graph, eps, mesh_across, num_eigs, lambda_max, out_dir } => {
            cmd_sweep(graph, eps, *mesh_across, *num_eigs, *lambda_max, out_dir)
        }
        Command::Sierpinski { generations, levels, lambda_max, out_dir } => {
            cmd_sierpinski(*generations, *levels, *lambda_max, out_dir)
        }
        Command::ClosenessRandom { trials, seed, out_dir } => {
            cmd_closeness_random(*trials, *seed, out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
