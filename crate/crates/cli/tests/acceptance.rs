//! End-to-end acceptance suite. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use adrx_cli::{execute, Cli, Table};
use adrx_core::analytic::{m_click_probability, poisson_pmf, RateSequence};
use adrx_core::bounds::{gram_srm_oracle, helstrom_mpsk};
use adrx_core::signal::displaced_rates;
use adrx_core::strategy::first_click_crossover;
use adrx_core::PskAlphabet;
use clap::Parser;

type Check = Result<String, String>;

fn cli(line: &str) -> Table {
    let argv = std::iter::once("adrx").chain(line.split_whitespace());
    let mut parsed = Cli::try_parse_from(argv).unwrap_or_else(|e| panic!("bad arguments '{line}': {e}"));
    execute(&mut parsed.command).unwrap_or_else(|e| panic!("'{line}' failed: {e}"))
}

/// (p_err, std_err, sql, helstrom) per sweep row.
fn sweep_rows(line: &str) -> Vec<(f64, f64, f64, f64, f64)> {
    let t = cli(&format!("sweep {line}"));
    (0..t.rows.len())
        .map(|i| {
            let f = |c| t.float(i, c).unwrap();
            (f("alpha_sq"), f("p_err"), f("std_err"), f("sql"), f("helstrom"))
        })
        .collect()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn poisson_reduction() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [0.1, 0.5, 1.0, 2.0, 5.0] {
        for m in 0..=10 {
            let seq = RateSequence::constant(n, m + 1).map_err(|e| e.to_string())?;
            let got = m_click_probability(&seq, m).map_err(|e| e.to_string())?;
            let want = poisson_pmf(n, m as u64).map_err(|e| e.to_string())?;
            worst = worst.max((got - want).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    ensure(secs < 1.0, format!("took {secs:.2} s"))?;
    Ok(format!("max deviation {worst:.1e} in {secs:.3} s"))
}

fn analytic_mc_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for alpha_sq in [0.25, 0.5, 1.0, 2.0] {
        for beta_sq in [0.0, 0.1, 0.23, 0.5] {
            let alphabet = PskAlphabet::from_mean_photons(4, alpha_sq).unwrap();
            let exact = adrx_core::analytic::cyclic_error_probability(&alphabet, f64::sqrt(beta_sq), 1e-12)
                .map_err(|e| e.to_string())?
                .p_err;
            let rows = sweep_rows(&format!(
                "--powers {alpha_sq} --strategy cyclic --beta-policy fixed --beta-sq {beta_sq} --trials 1000000 --seed 11"
            ));
            let (_, p, se, _, _) = rows[0];
            let z = (p - exact).abs() / se;
            worst = worst.max(z);
            ensure(z <= 4.0, format!("α²={alpha_sq} β²={beta_sq}: MC {p} vs exact {exact} ({z:.2}σ)"))?;
        }
    }
    Ok(format!("16 points, worst deviation {worst:.2}σ"))
}

fn table_one_trace() -> Check {
    let t = cli("trace --alpha-sq 0.5 --beta-sq 0.23 --clicks 0.15,0.35,0.54,0.71");
    let p1: Vec<f64> = (1..=4).map(|k| t.float(0, &format!("p_{k}")).unwrap()).collect();
    for (k, want) in [(2, 0.277), (3, 0.403), (4, 0.277)] {
        ensure((p1[k - 1] - want).abs() <= 0.002, format!("t1 posterior of state {k}: {} vs {want}", p1[k - 1]))?;
    }
    let first = t.float(0, "interval_probe").unwrap();
    let second = t.float(1, "interval_probe").unwrap();
    ensure(first == 1.0 && second == 3.0, format!("probe sequence starts {first} -> {second}"))?;
    let last = t.rows.len() - 1;
    let decision = t.float(last, "decision").unwrap();
    ensure(decision == 3.0, format!("final hypothesis {decision}"))?;
    Ok(format!(
        "t1 = ({:.3}, {:.3}, {:.3}, {:.3}), probes 1 -> 3, final state 3 with posterior {:.3}",
        p1[0],
        p1[1],
        p1[2],
        p1[3],
        t.float(last, "p_3").unwrap()
    ))
}

fn first_click_flip() -> Check {
    let alphabet = PskAlphabet::from_mean_photons(4, 0.5).unwrap();
    let rates = displaced_rates(&alphabet, 1, 0.23f64.sqrt()).unwrap();
    let t = first_click_crossover(rates.get(2), rates.get(3)).ok_or("no crossover")?;
    ensure((t - 0.376).abs() <= 0.005, format!("crossover at {t}"))?;
    let before = cli(&format!("trace --alpha-sq 0.5 --beta-sq 0.23 --clicks {}", t - 1e-3));
    let after = cli(&format!("trace --alpha-sq 0.5 --beta-sq 0.23 --clicks {}", t + 1e-3));
    let (b, a) = (before.float(0, "decision").unwrap(), after.float(0, "decision").unwrap());
    ensure(b == 3.0 && a != 3.0, format!("argmax {b} before, {a} after"))?;
    Ok(format!("argmax flips at t1 = {t:.4}"))
}

fn optimal_displacement() -> Check {
    let start = Instant::now();
    let t = cli("optimize --m 4 --log-grid 0.0001:4:20 --method analytic");
    let b: Vec<f64> = (0..t.rows.len()).map(|i| t.float(i, "beta_opt_sq").unwrap()).collect();
    ensure((b[0] - 1.2).abs() <= 0.15, format!("β_opt²(1e-4) = {}", b[0]))?;
    ensure(b.windows(2).all(|w| w[1] <= w[0]), format!("not non-increasing: {b:?}"))?;
    ensure(b[19] < 0.1, format!("β_opt²(4) = {}", b[19]))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("β_opt²(1e-4) = {:.4}, β_opt²(4) = {:.2e}, monotone, {secs:.2} s", b[0], b[19]))
}

struct Sub {
    m: usize,
    alpha_sq: f64,
    cyclic: (f64, f64),
    bayes: (f64, f64),
    sql: f64,
    helstrom: f64,
}

fn sub_sql_runs() -> Vec<Sub> {
    let mut out = Vec::new();
    for (m, powers) in [(4, "0.1,0.25,0.5,1,1.5,2"), (8, "0.5,1,2")] {
        let c = sweep_rows(&format!(
            "--m {m} --powers {powers} --strategy cyclic --beta-policy analytic --trials 1000000 --seed 21"
        ));
        let b = sweep_rows(&format!(
            "--m {m} --powers {powers} --strategy bayesian --beta-policy mc --trials 1000000 --seed 21"
        ));
        for (c, b) in c.iter().zip(&b) {
            out.push(Sub { m, alpha_sq: c.0, cyclic: (c.1, c.2), bayes: (b.1, b.2), sql: c.3, helstrom: c.4 });
        }
    }
    out
}

fn sub_sql(runs: &[Sub]) -> Check {
    let mut margin = f64::INFINITY;
    let mut failed = Vec::new();
    for r in runs {
        for (name, (p, se)) in [("cyclic", r.cyclic), ("bayesian", r.bayes)] {
            let z = (r.sql - p) / se;
            margin = margin.min(z);
            if z <= 4.0 {
                failed.push(format!("M={} α²={} {name} {p:.4} vs SQL {:.4} ({z:+.1}σ)", r.m, r.alpha_sq, r.sql));
            }
            if p < r.helstrom - 4.0 * se {
                failed.push(format!("M={} α²={} {name} {p:.4} below Helstrom {:.4}", r.m, r.alpha_sq, r.helstrom));
            }
        }
    }
    ensure(failed.is_empty(), format!("{} of {} checks fail: {}", failed.len(), 4 * runs.len(), failed.join("; ")))?;
    Ok(format!("{} points, smallest margin below SQL {margin:.1}σ, none below Helstrom", runs.len()))
}

fn bondurant_crossing() -> Check {
    let rows = sweep_rows("--powers 0.4,0.5,0.6,0.7,0.8,0.9,1.0 --strategy cyclic --beta-policy zero --trials 1000000 --seed 31");
    let z: Vec<f64> = rows.iter().map(|r| (r.1 - r.3) / r.2).collect();
    ensure(z[0] > 4.0, format!("α²=0.4 only {:.1}σ above SQL", z[0]))?;
    ensure(z[z.len() - 1] < -4.0, format!("α²=1.0 only {:.1}σ below SQL", -z[z.len() - 1]))?;
    let i = z.iter().position(|&v| v < 0.0).ok_or("no crossing")?;
    ensure(z[i..].iter().all(|&v| v < 0.0), "SQL crossed more than once")?;
    Ok(format!(
        "crossing between α² = {} and {} ({:+.1}σ at 0.4, {:+.1}σ at 1.0)",
        rows[i - 1].0,
        rows[i].0,
        z[0],
        z[z.len() - 1]
    ))
}

fn strategy_ordering(runs: &[Sub]) -> Check {
    let mut gain_at_2 = None;
    for r in runs {
        let s = (r.cyclic.1.powi(2) + r.bayes.1.powi(2)).sqrt();
        ensure(
            r.bayes.0 <= r.cyclic.0 + 4.0 * s,
            format!("M={} α²={}: Bayesian {} vs cyclic {}", r.m, r.alpha_sq, r.bayes.0, r.cyclic.0),
        )?;
        if r.m == 4 && r.alpha_sq == 2.0 {
            let z = (r.cyclic.0 - r.bayes.0) / s;
            ensure(z > 4.0, format!("α²=2: Bayesian ahead by only {z:.1}σ"))?;
            gain_at_2 = Some(z);
        }
    }
    let z = gain_at_2.ok_or("α²=2 missing")?;
    Ok(format!("Bayesian never worse; ahead by {z:.1}σ at α²=2"))
}

fn quantum_efficiency() -> Check {
    let mut margin = f64::INFINITY;
    let cyc = sweep_rows("--powers 1,1.5,2 --strategy cyclic --eta 0.7 --beta-policy analytic --trials 1000000 --seed 41");
    let bay = sweep_rows("--powers 1 --strategy bayesian --eta 0.6 --beta-policy mc --trials 1000000 --seed 41");
    for (label, rows) in [("cyclic η=0.7", cyc), ("bayesian η=0.6", bay)] {
        for (a, p, se, sql, _) in rows {
            let z = (sql - p) / se;
            margin = margin.min(z);
            ensure(z > 4.0, format!("{label} α²={a}: {p} vs SQL {sql} ({z:.1}σ)"))?;
        }
    }
    Ok(format!("all below SQL, smallest margin {margin:.1}σ"))
}

fn imperfection_monotonicity() -> Check {
    let (beta, _) = adrx_cli::commands::analytic_beta(4, 1.0, 1.0, 1e-7).map_err(|e| e.to_string())?;
    let beta_sq = beta * beta;
    let ramps: [(&str, [f64; 4]); 4] = [
        ("n-th", [0.0, 0.2, 0.4, 0.8]),
        ("dead-time", [0.0, 0.05, 0.10, 0.20]),
        ("dark-rate", [0.0, 0.2, 0.4, 0.8]),
        ("eta", [1.0, 0.9, 0.8, 0.7]),
    ];
    let mut checked = 0;
    for strategy in ["cyclic", "bayesian"] {
        for (flag, values) in ramps {
            let mut prev: Option<(f64, f64)> = None;
            for v in values {
                let rows = sweep_rows(&format!(
                    "--powers 1 --strategy {strategy} --beta-policy fixed --beta-sq {beta_sq} --{flag} {v} --trials 1000000 --seed 51"
                ));
                let (p, se) = (rows[0].1, rows[0].2);
                if let Some((q, qse)) = prev {
                    let s = (se * se + qse * qse).sqrt();
                    ensure(p >= q - 4.0 * s, format!("{strategy} {flag}={v}: {p} < previous {q}"))?;
                }
                prev = Some((p, se));
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} ramp points non-decreasing for both strategies"))
}

fn dead_time_robustness() -> Check {
    let rows = sweep_rows("--powers 1,2 --strategy bayesian --dead-time 0.2 --beta-policy mc --trials 1000000 --seed 61");
    let mut margin = f64::INFINITY;
    for (a, p, se, sql, _) in rows {
        let z = (sql - p) / se;
        margin = margin.min(z);
        ensure(z > 4.0, format!("α²={a}: {p} vs SQL {sql} ({z:.1}σ)"))?;
    }
    Ok(format!("below SQL at α² = 1, 2; smallest margin {margin:.1}σ"))
}

fn helstrom_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for m in [2, 4, 8] {
        for alpha_sq in [0.1, 0.5, 1.0, 2.0] {
            let alpha = f64::sqrt(alpha_sq);
            let a = helstrom_mpsk(alpha, m).map_err(|e| e.to_string())?;
            let b = gram_srm_oracle(alpha, m, 80).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
            ensure((a - b).abs() <= 1e-8, format!("M={m} α²={alpha_sq}: {a} vs oracle {b}"))?;
            if m == 2 {
                let closed = 0.5 * (1.0 - (1.0 - (-4.0 * alpha_sq).exp()).sqrt());
                ensure((a - closed).abs() <= 1e-10, format!("M=2 α²={alpha_sq}: {a} vs {closed}"))?;
            }
        }
    }
    Ok(format!("12 points, worst deviation {worst:.1e}"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        let path = dir.path().join(format!("w{workers}.csv"));
        let code = adrx_cli::run([
            "adrx", "sweep", "--powers", "0.5,1,2", "--strategy", "bayesian", "--n-th", "0.1", "--dead-time", "0.05",
            "--trials", "300000", "--seed", "71", "--workers", &workers.to_string(), "--output",
            path.to_str().unwrap(),
        ]);
        ensure(code == 0, format!("exit code {code}"))?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(outputs.iter().all(|o| *o == outputs[0]), "outputs differ between worker counts")?;
    Ok(format!("workers 1, 4, 8 give identical {} byte CSV", outputs[0].len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, f: &dyn Fn() -> Check| {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    };
    report(1, "Poisson reduction", &poisson_reduction);
    report(2, "analytic/Monte Carlo equivalence", &analytic_mc_equivalence);
    report(3, "posterior trace", &table_one_trace);
    report(4, "first-click crossover", &first_click_flip);
    report(5, "optimal displacement", &optimal_displacement);
    let runs = sub_sql_runs();
    report(6, "below the heterodyne limit", &|| sub_sql(&runs));
    report(7, "Bondurant crossing", &bondurant_crossing);
    report(8, "strategy ordering", &|| strategy_ordering(&runs));
    report(9, "quantum efficiency", &quantum_efficiency);
    report(10, "imperfection monotonicity", &imperfection_monotonicity);
    report(11, "dead-time robustness", &dead_time_robustness);
    report(12, "Helstrom oracle", &helstrom_oracle);
    report(13, "determinism across workers", &determinism);
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 13 acceptance criteria passed");
}
