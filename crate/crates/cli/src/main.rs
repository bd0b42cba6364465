//! Command-line front end: reads scenario JSON, runs one library routine
//! and writes JSON, CSV or SVG.

mod output;
mod render;
mod verify;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;
use urbanbranch::branched::interior_vertices;
use urbanbranch::network::build_routing_graph;
use urbanbranch::transport::urban_cost_matrix;
use urbanbranch::{
    flux_to_urban, momentum_residual, solve_beckmann, solve_branched, urban_to_flux, verify_equivalence,
    wasserstein_urban, CostFunction, ExtReal, MassFlux, Point, Scenario, StreetNetwork,
};

use output::{emit, fmt, json};

#[derive(Parser)]
#[command(name = "urbanbranch", version, about = "Branched transport and urban planning on finite instances")]
struct Cli {
    /// Worker threads for the branched solver (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe a cost, or tabulate tau or its maintenance cost as CSV.
    Cost {
        /// Cost JSON, or a scenario whose `tau` is used.
        #[arg(long)]
        spec: PathBuf,
        /// `b=LO..HI[:STEP]` for eps(b), `m=LO..HI[:STEP]` for tau(m); step 0.1 by default.
        #[arg(long)]
        table: Option<Table>,
    },
    /// Urban distances between the atoms, or between two points.
    Distance {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated coordinates, e.g. `0,0`.
        #[arg(long, value_parser = parse_point, requires = "to")]
        from: Option<Point<f64>>,
        #[arg(long, value_parser = parse_point, requires = "from")]
        to: Option<Point<f64>>,
    },
    /// Optimal transport for the urban metric of the scenario network.
    Wasserstein {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Cheapest flow of the measures through the routing graph.
    Beckmann {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Branched transport by enumeration of tree topologies.
    Branched {
        #[arg(long)]
        scenario: PathBuf,
        /// Report every distinct optimal flux.
        #[arg(long)]
        ties: bool,
    },
    /// Build a network from a flux (forward) or a flux from a network (backward).
    Bridge {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Direction::Forward)]
        direction: Direction,
        /// Keep roads whose friction equals the ambient cost.
        #[arg(long)]
        keep_free_roads: bool,
    },
    /// Check the energy sandwich on a scenario or on the bundled fixtures.
    Verify {
        #[arg(long, required_unless_present = "fixtures", conflicts_with = "fixtures")]
        scenario: Option<PathBuf>,
        #[arg(long, value_parser = fixture_names())]
        fixtures: Option<String>,
        /// Require the three energies to agree even when the tree
        /// enumeration is not exhaustive or the flux was supplied.
        #[arg(long, requires = "scenario")]
        strict: bool,
    },
    /// SVG picture of the network and a flux.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = FluxSource::Auto)]
        flux: FluxSource,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FluxSource {
    /// The scenario flux if given, else Beckmann on the network, else branched.
    Auto,
    Given,
    Beckmann,
    Branched,
    None,
}

fn fixture_names() -> clap::builder::PossibleValuesParser {
    let mut names = vec!["all"];
    names.extend(verify::NAMES);
    clap::builder::PossibleValuesParser::new(names)
}

#[derive(Clone, Debug)]
struct Table {
    variable: char,
    values: Vec<f64>,
}

impl FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("expected b=LO..HI[:STEP] or m=LO..HI[:STEP], got {s:?}");
        let (var, range) = s.split_once('=').ok_or_else(bad)?;
        let variable = match var.trim() {
            "b" => 'b',
            "m" => 'm',
            _ => return Err(bad()),
        };
        let (range, step) = match range.split_once(':') {
            Some((r, st)) => (r, st.trim().parse::<f64>().map_err(|_| bad())?),
            None => (range, 0.1),
        };
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && step > 0.0 && step.is_finite()) {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if n > 1_000_000 {
            return Err(format!("{n} rows requested, at most 1000000"));
        }
        let values = (0..n).map(|k| output::round_sig(lo + k as f64 * step)).collect();
        Ok(Table { variable, values })
    }
}

fn parse_point(s: &str) -> std::result::Result<Point<f64>, String> {
    let coords: std::result::Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
    match coords {
        Ok(c) if !c.is_empty() && c.iter().all(|x| x.is_finite()) => Ok(Point::new(c)),
        _ => Err(format!("expected comma-separated coordinates, got {s:?}")),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("invalid input in {}", path.display()))
}

fn network(s: &Scenario<f64>) -> Result<&StreetNetwork<f64>> {
    s.network.as_ref().ok_or_else(|| anyhow!("the scenario has no network"))
}

fn ext(x: ExtReal<f64>) -> String {
    x.finite().map_or_else(|| "inf".into(), fmt)
}

/// Failed verifications are reported through the exit code, not as errors.
enum Outcome {
    Done,
    VerificationFailed,
}

fn cost(spec: &Path, table: Option<Table>, out: Option<&Path>) -> Result<()> {
    let value: serde_json::Value = read_json(spec)?;
    let source = value.get("tau").cloned().unwrap_or(value);
    let tau: CostFunction<f64> =
        serde_json::from_value(source).with_context(|| format!("invalid cost in {}", spec.display()))?;
    let Some(table) = table else {
        let (slope, attained) = tau.asymptotic_slope();
        let summary = json!({
            "tau": tau,
            "a": tau.tau_prime_zero(),
            "jump_at_zero": tau.jump_at_zero(),
            "asymptotic_slope": slope,
            "slope_attained": attained,
        });
        return emit(out, &json(&summary)?);
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if table.variable == 'b' {
        let mc = tau.maintenance();
        w.write_record(["b", "epsilon"])?;
        for &b in &table.values {
            w.write_record([fmt(b), ext(mc.eval(b))])?;
        }
    } else {
        w.write_record(["m", "tau", "friction"])?;
        for &m in &table.values {
            let friction = if m > 0.0 { fmt(tau.friction_from_mass(m)?) } else { ext(tau.tau_prime_zero()) };
            w.write_record([fmt(m), fmt(tau.eval_tau(m)?), friction])?;
        }
    }
    emit(out, &String::from_utf8(w.into_inner()?)?)
}

fn terminals(s: &Scenario<f64>) -> Vec<Point<f64>> {
    s.mu_plus.points().chain(s.mu_minus.points()).cloned().collect()
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = cli.out.as_deref();
    let text = match cli.command {
        Command::Cost { spec, table } => {
            cost(&spec, table, out)?;
            return Ok(Outcome::Done);
        }
        Command::Distance { scenario, from, to } => {
            let s: Scenario<f64> = read_json(&scenario)?;
            let net = network(&s)?;
            match (from, to) {
                (Some(x), Some(y)) => {
                    let g = build_routing_graph(net, &[x.clone(), y.clone()], s.refinement)?;
                    let route = g.urban_distance(&x, &y)?;
                    json(&json!({ "distance": route.value, "path": g.polyline(&route.nodes) }))?
                }
                _ => {
                    let g = build_routing_graph(net, &terminals(&s), s.refinement)?;
                    let matrix = urban_cost_matrix(&g, &s.mu_plus, &s.mu_minus)?;
                    json(&json!({ "nodes": g.nodes().len(), "distances": matrix }))?
                }
            }
        }
        Command::Wasserstein { scenario } => {
            let s: Scenario<f64> = read_json(&scenario)?;
            let w = wasserstein_urban(network(&s)?, &s.mu_plus, &s.mu_minus, s.refinement)?;
            json(&json!({
                "value": w.value,
                "plan": w.solution.plan.weights(),
                "source_potential": w.solution.source_potential,
                "target_potential": w.solution.target_potential,
                "cost_matrix": w.cost_matrix,
            }))?
        }
        Command::Beckmann { scenario } => {
            let s: Scenario<f64> = read_json(&scenario)?;
            let net = network(&s)?;
            let g = build_routing_graph(net, &terminals(&s), s.refinement)?;
            let sol = solve_beckmann(&g, &s.mu_plus, &s.mu_minus)?;
            json(&json!({ "value": sol.value, "nodes": g.nodes().len(), "flux": sol.flux }))?
        }
        Command::Branched { scenario, ties } => {
            let mut s: Scenario<f64> = read_json(&scenario)?;
            s.config.report_ties |= ties;
            let sol = solve_branched(&s.mu_plus, &s.mu_minus, &s.tau, &s.config)?;
            let branch_points: Vec<_> = interior_vertices(&sol.flux)
                .into_iter()
                .map(|v| {
                    let r = momentum_residual(&sol.flux, &s.tau, &v).map(|r| r.norm());
                    r.map(|r| json!({ "p": v, "residual": r }))
                })
                .collect::<urbanbranch::Result<_>>()?;
            json(&json!({
                "value": sol.value,
                "flux": sol.flux,
                "branch_points": branch_points,
                "ties": sol.ties,
                "topologies": sol.topologies,
                "exhaustive": sol.exhaustive,
                "skipped_steiner_levels": sol.skipped_steiner_levels,
            }))?
        }
        Command::Bridge { scenario, direction, keep_free_roads } => {
            let s: Scenario<f64> = read_json(&scenario)?;
            match direction {
                Direction::Forward => {
                    let flux = match &s.flux {
                        Some(f) => f.clone(),
                        None => solve_branched(&s.mu_plus, &s.mu_minus, &s.tau, &s.config)?.flux,
                    };
                    let r = flux_to_urban(&flux, &s.tau, !keep_free_roads)?;
                    json(&json!({
                        "J": r.certificate.j,
                        "U": r.certificate.u,
                        "holds": r.certificate.holds,
                        "residuals": r.certificate.residuals,
                        "network": r.network,
                        "flux": r.flux,
                    }))?
                }
                Direction::Backward => {
                    let r = urban_to_flux(network(&s)?, &s.tau, &s.mu_plus, &s.mu_minus, s.refinement)?;
                    json(&json!({
                        "J": r.certificate.j,
                        "U": r.certificate.u,
                        "holds": r.certificate.holds,
                        "flux": r.flux,
                    }))?
                }
            }
        }
        Command::Verify { scenario, fixtures, strict } => {
            let checks = match (scenario, fixtures) {
                (Some(path), _) => {
                    let s: Scenario<f64> = read_json(&path)?;
                    let r = verify_equivalence(&s)?;
                    let equality = r.equality_required || strict;
                    let pass = r.ordered && (!equality || r.spread <= urbanbranch::Finite(urbanbranch::bridge::EQUIVALENCE_TOL));
                    let detail = format!(
                        "J* = {}, U = {}, J roundtrip = {}, spread {} ({})",
                        fmt(r.j_star),
                        ext(r.u),
                        fmt(r.j_roundtrip),
                        ext(r.spread),
                        if equality { "equality checked" } else { "inequalities only" }
                    );
                    vec![verify::Check { name: path.display().to_string(), pass, detail }]
                }
                (None, Some(name)) => {
                    let names: Vec<&str> = if name == "all" { verify::NAMES.to_vec() } else { vec![name.as_str()] };
                    names.into_iter().map(verify::run).collect::<urbanbranch::Result<_>>()?
                }
                (None, None) => bail!("give --scenario or --fixtures"),
            };
            let failed = checks.iter().filter(|c| !c.pass).count();
            let mut report: String = checks.iter().map(|c| c.line() + "\n").collect();
            report += &format!("{} passed, {failed} failed\n", checks.len() - failed);
            output::print(&report)?;
            if let Some(path) = out {
                emit(Some(path), &json(&checks)?)?;
            }
            return Ok(if failed == 0 { Outcome::Done } else { Outcome::VerificationFailed });
        }
        Command::Render { scenario, flux } => {
            let s: Scenario<f64> = read_json(&scenario)?;
            let chosen: Option<MassFlux<f64>> = match flux {
                FluxSource::None => None,
                FluxSource::Given => Some(s.flux.clone().ok_or_else(|| anyhow!("the scenario has no flux"))?),
                FluxSource::Beckmann => {
                    let g = build_routing_graph(network(&s)?, &terminals(&s), s.refinement)?;
                    Some(solve_beckmann(&g, &s.mu_plus, &s.mu_minus)?.flux)
                }
                FluxSource::Branched => Some(solve_branched(&s.mu_plus, &s.mu_minus, &s.tau, &s.config)?.flux),
                FluxSource::Auto => match (&s.flux, &s.network) {
                    (Some(f), _) => Some(f.clone()),
                    (None, Some(net)) => {
                        let g = build_routing_graph(net, &terminals(&s), s.refinement)?;
                        Some(solve_beckmann(&g, &s.mu_plus, &s.mu_minus)?.flux)
                    }
                    (None, None) => Some(solve_branched(&s.mu_plus, &s.mu_minus, &s.tau, &s.config)?.flux),
                },
            };
            render::svg(s.network.as_ref(), chosen.as_ref(), &s.mu_plus, &s.mu_minus)?
        }
    };
    emit(out, &text)?;
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
