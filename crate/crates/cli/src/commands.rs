use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use storage_game::equilibrium::{
    solve_certified, solve_equilibrium, verify_equilibrium, write_investor_csv, write_price_csv,
    EquilibriumReport,
};
use storage_game::market_data::{calibrate, load_market_csv, ScenarioSet};
use storage_game::model::{GameInstance, InvestorSpec};
use storage_game::qp::{build_equilibrium_qp, write_text};
use storage_game::solver::{solve_qp, write_iteration_log, SolveSettings};
use storage_game::sweep::{
    efficiency_point, efficiency_types, investor_count_point, write_efficiency_csv,
    write_investor_count_csv,
};
use storage_game::synthetic::{bundled_scenarios, write_market_csv, SyntheticMarket, DEFAULT_SEED};

use crate::args::{Cli, CountRange, GameArgs, TemplateArgs};

pub const INVESTOR_SWEEP_FILE: &str = "investor_sweep.csv";
pub const EFFICIENCY_SWEEP_FILE: &str = "efficiency_sweep.csv";

fn settings(cli: &Cli) -> SolveSettings {
    SolveSettings {
        kkt_tol: cli.tol,
        seed: cli.seed.unwrap_or(0),
        ..SolveSettings::default()
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let mut w = create(dir, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {name}"))?;
    Ok(dir.join(name))
}

fn load_scenarios(cli: &Cli) -> Result<ScenarioSet> {
    let Some(path) = &cli.scenarios else {
        return Ok(bundled_scenarios());
    };
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let records = load_market_csv(path)?;
        return Ok(calibrate(&records)?.scenarios);
    }
    ScenarioSet::load(path).with_context(|| format!("loading {}", path.display()))
}

fn load_template(args: &TemplateArgs, id: &str) -> Result<InvestorSpec> {
    let mut spec = match &args.template {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => InvestorSpec::reference(id),
    };
    if let Some(h) = args.min_duration {
        spec.min_duration = h;
    }
    if let Some(h) = args.max_duration {
        spec.max_duration = h;
    }
    spec.validate()?;
    Ok(spec)
}

fn load_game(cli: &Cli, args: &GameArgs) -> Result<GameInstance> {
    match (&args.game, args.investors) {
        (Some(path), _) => {
            GameInstance::load(path).with_context(|| format!("loading {}", path.display()))
        }
        (None, Some(n)) => {
            let template = load_template(&args.template, "inv")?;
            Ok(GameInstance::homogeneous(
                &template,
                n as usize,
                load_scenarios(cli)?,
            )?)
        }
        (None, None) => bail!("pass either --game or --investors"),
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

pub fn calibrate_cmd(cli: &Cli, data: &Path) -> Result<()> {
    let records = load_market_csv(data).with_context(|| format!("loading {}", data.display()))?;
    let cal = calibrate(&records)?;
    println!(
        "{:<8} {:>12} {:>12} {:>12}  representative day",
        "month", "slope", "intercept", "points"
    );
    for m in &cal.months {
        println!(
            "{:<8} {:>12.6e} {:>12.3} {:>12}  {} (distance {:.3})",
            m.month.to_string(),
            m.fit.slope,
            m.fit.intercept,
            m.fit.points,
            m.representative.date,
            m.representative.distance
        );
    }
    if cal.months.len() == 1 {
        eprintln!("warning: only one month of data; competition results will be single-scenario");
    }
    let path = match &cli.scenarios {
        Some(p) => p.clone(),
        None => cli.out.join("scenarios.json"),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(&path, cal.scenarios.to_json() + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {} scenarios to {}",
        cal.scenarios.len(),
        path.display()
    );
    Ok(())
}

fn print_report(report: &EquilibriumReport) {
    println!(
        "{:<12} {:>14} {:>12} {:>14} {:>14}",
        "investor", "capacity_mwh", "power_mw", "profit", "gap"
    );
    for o in &report.investors {
        let gap = o
            .best_response_gap
            .map(|g| format!("{g:.3e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<12} {:>14.3} {:>12.3} {:>14.3} {:>14}",
            o.id, o.capacity, o.power, o.profit, gap
        );
    }
    println!(
        "total: capacity {:.3} MWh, power {:.3} MW, profit {:.3}/day, {} iterations",
        report.total_capacity, report.total_power, report.total_profit, report.iterations
    );
    if !report.simultaneous.is_empty() {
        eprintln!(
            "warning: {} slots with simultaneous charge and discharge",
            report.simultaneous.len()
        );
    }
}

pub fn solve_cmd(
    cli: &Cli,
    args: &GameArgs,
    dump_qp: bool,
    iteration_log: bool,
    skip_verify: bool,
) -> Result<()> {
    let game = load_game(cli, args)?;
    let settings = settings(cli);
    if dump_qp || iteration_log {
        let (_, qp) = build_equilibrium_qp(&game)?;
        if dump_qp {
            write_file(&cli.out, "qp.txt", |w| write_text(&qp, w))?;
        }
        if iteration_log {
            let logged = SolveSettings {
                record_iterations: true,
                ..settings.clone()
            };
            let result = solve_qp(&qp, &logged)?;
            write_file(&cli.out, "iterations.csv", |w| {
                write_iteration_log(&result.log, w)
            })?;
        }
    }
    let report = if skip_verify {
        solve_equilibrium(&game, &settings)?
    } else {
        solve_certified(&game, &settings)?
    };
    print_report(&report);
    write_file(&cli.out, "report.json", |w| {
        writeln!(w, "{}", report.to_json())
    })?;
    write_file(&cli.out, "investors.csv", |w| {
        write_investor_csv(&report, w)
    })?;
    write_file(&cli.out, "prices.csv", |w| write_price_csv(&report, w))?;
    match &report.certification {
        Some(c) if !c.passed => bail!(
            "equilibrium not certified: worst gap/tolerance {:.3e}",
            c.worst_ratio()
        ),
        Some(c) => println!("certified: worst gap/tolerance {:.3e}", c.worst_ratio()),
        None => {}
    }
    Ok(())
}

pub fn verify_cmd(cli: &Cli, args: &GameArgs, report: &Path) -> Result<()> {
    let game = load_game(cli, args)?;
    let text =
        fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let report = EquilibriumReport::from_json(&text)
        .with_context(|| format!("parsing {}", report.display()))?;
    let cert = verify_equilibrium(&game, &report, &settings(cli))?;
    println!(
        "{:<12} {:>14} {:>14} {:>14}",
        "investor", "profit", "gap", "tolerance"
    );
    for ((o, gap), tol) in report
        .investors
        .iter()
        .zip(&cert.gaps)
        .zip(&cert.tolerances)
    {
        println!(
            "{:<12} {:>14.3} {:>14.3e} {:>14.3e}",
            o.id, o.profit, gap, tol
        );
    }
    let json = serde_json::to_string_pretty(&cert)?;
    write_file(&cli.out, "certification.json", |w| writeln!(w, "{json}"))?;
    if !cert.passed {
        bail!(
            "not a Nash equilibrium: worst gap/tolerance {:.3e}",
            cert.worst_ratio()
        );
    }
    println!("certified: worst gap/tolerance {:.3e}", cert.worst_ratio());
    Ok(())
}

pub fn sweep_investors_cmd(cli: &Cli, range: CountRange, template: &TemplateArgs) -> Result<()> {
    let template = load_template(template, "inv")?;
    let scenarios = load_scenarios(cli)?;
    let settings = settings(cli);
    let rows = thread_pool(cli.jobs)?.install(|| {
        range
            .counts()
            .par_iter()
            .map(|&n| investor_count_point(&template, &scenarios, n, &settings))
            .collect::<Vec<_>>()
    });
    for r in &rows {
        match &r.outcome {
            Ok(m) => println!(
                "I = {:>2}: profit/investor {:>12.3}, capacity/investor {:>10.3} MWh, total capacity {:>10.3} MWh, gap {:.2e}{}",
                r.investors,
                m.per_investor_profit,
                m.per_investor_capacity,
                m.total_capacity,
                m.max_gap,
                if m.certified { "" } else { " (not certified)" }
            ),
            Err(e) => println!("I = {:>2}: failed: {e}", r.investors),
        }
    }
    let path = write_file(&cli.out, INVESTOR_SWEEP_FILE, |w| {
        write_investor_count_csv(&rows, w)
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn sweep_efficiency_cmd(cli: &Cli, range: CountRange, template: &TemplateArgs) -> Result<()> {
    let types = efficiency_types(&load_template(template, "inv")?);
    let scenarios = load_scenarios(cli)?;
    let settings = settings(cli);
    let rows = thread_pool(cli.jobs)?.install(|| {
        range
            .counts()
            .par_iter()
            .map(|&n| efficiency_point(&types, &scenarios, n, &settings))
            .collect::<Vec<_>>()
    });
    let share = |s: Option<f64>| s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    for r in &rows {
        match &r.outcome {
            Ok(m) => println!(
                "n3 = {:>2}: profits {:>10.3} / {:>10.3} / {:>10.3}, shares {} / {} / {}{}",
                r.type3_count,
                m.type1_profit,
                m.type2_profit,
                m.type3_total_profit,
                share(m.type1_share),
                share(m.type2_share),
                share(m.type3_share),
                if m.certified { "" } else { " (not certified)" }
            ),
            Err(e) => println!("n3 = {:>2}: failed: {e}", r.type3_count),
        }
    }
    let path = write_file(&cli.out, EFFICIENCY_SWEEP_FILE, |w| {
        write_efficiency_csv(&rows, w)
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn synth_data_cmd(cli: &Cli, year: i32) -> Result<()> {
    let market = SyntheticMarket {
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        ..SyntheticMarket::default()
    };
    let records = market.generate(year);
    let path = write_file(&cli.out, &format!("synthetic_{year}.csv"), |w| {
        write_market_csv(&records, w)
    })?;
    println!(
        "wrote {} hourly records to {}",
        records.len(),
        path.display()
    );
    Ok(())
}
