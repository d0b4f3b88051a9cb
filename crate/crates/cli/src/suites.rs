//! The `verify` suites: each one sweeps a grid or a seeded corpus through
//! the corresponding core checks and reports one row per case. A row with
//! `ok == false` is a violation; the command exits nonzero if any exist.

use rayon::prelude::*;
use serde_json::{json, Value};

use omegalab::bounds::lower_bound_report;
use omegalab::coding;
use omegalab::construction::{self, Adversary, AdversaryPolicy, Outcome};
use omegalab::corpus;
use omegalab::dyadic::Dyadic;
use omegalab::games::{self, UseSpec};
use omegalab::machines;
use omegalab::usefn::{self, Signature, UseTable};

use crate::report::{dyadic_fields, parse_range, row, Report, Row};
use crate::VerifyArgs;

pub fn run(args: VerifyArgs, workers: usize) -> Result<usize, String> {
    let suite = args
        .suite
        .clone()
        .or_else(|| args.suite_flag.clone())
        .ok_or("no suite named; try --help")?;
    let seed = args.seed.unwrap_or(7);
    let mut meta = Row::new();
    meta.insert("seed".into(), seed.into());
    meta.insert("workers".into(), workers.into());

    let rows = match suite.as_str() {
        "atomic" => atomic(&args, &mut meta)?,
        "general" => general(&args, seed, &mut meta),
        "dominance" => dominance(&args, seed, &mut meta),
        "accumulation" => accumulation(&mut meta),
        "truncsums" => truncsums(&args, seed, &mut meta),
        "construction" => construction_suite(&mut meta)?,
        "coding" => coding_suite(&args, seed, &mut meta),
        "kc" => kc(&args, seed, &mut meta),
        "reduction" => reduction(&args, seed, &mut meta),
        "condensation" => condensation(&mut meta)?,
        other => {
            return Err(format!(
                "unknown suite '{other}' (expected atomic, general, dominance, accumulation, \
                 truncsums, construction, coding, kc, reduction, condensation)"
            ))
        }
    };

    let violations =
        rows.iter().filter(|r| r.get("ok") != Some(&Value::Bool(true))).count();
    let report =
        Report { command: "verify", name: suite, meta, rows, violations };
    report.write(&args.out, args.format)?;
    Ok(violations)
}

fn grid(arg: &Option<String>, default: (u64, u64)) -> Result<Vec<u64>, String> {
    let (lo, hi) = match arg {
        Some(s) => parse_range(s)?,
        None => default,
    };
    Ok((lo..=hi).collect())
}

/// Final value of the constant-offset game versus its closed form.
fn atomic(args: &VerifyArgs, meta: &mut Row) -> Result<Vec<Row>, String> {
    let ns = grid(&args.n, (1, 10))?;
    let ks = grid(&args.k, (0, 8))?;
    let cs = grid(&args.c, (0, 6))?;
    meta.insert(
        "grids".into(),
        json!({
            "n": format!("{}..{}", ns[0], ns[ns.len() - 1]),
            "k": format!("{}..{}", ks[0], ks[ks.len() - 1]),
            "c": format!("{}..{}", cs[0], cs[cs.len() - 1]),
        }),
    );
    let mut cases = Vec::new();
    for &n in &ns {
        for &k in &ks {
            for &c in &cs {
                cases.push((n, k, c));
            }
        }
    }
    Ok(cases
        .into_par_iter()
        .map(|(n, k, c)| {
            let predicted = games::predict_atomic(n, k, c);
            let played = games::HloadConfig::new(UseSpec::Offset { c }, k, k + n)
                .map(|cfg| cfg.with_record_limit(0))
                .and_then(|cfg| games::hload(&cfg, &mut games::LeastEffort));
            let mut r = row(vec![("n", n.into()), ("k", k.into()), ("c", c.into())]);
            match played {
                Ok(trace) => {
                    let gamma = &trace.final_state.gamma;
                    dyadic_fields(&mut r, "gamma", gamma);
                    dyadic_fields(&mut r, "predicted", &predicted);
                    r.insert("steps".into(), trace.total_steps.into());
                    r.insert("ok".into(), (gamma == &predicted).into());
                }
                Err(e) => {
                    r.insert("error".into(), e.to_string().into());
                    r.insert("ok".into(), false.into());
                }
            }
            r
        })
        .collect())
}

/// All valid (k, t, m) for one signature: the game final versus the
/// truncation constraint and the closed-form floor.
fn check_signature(sig: &Signature) -> Result<u64, String> {
    let spec = UseSpec::PlusSignature(sig.clone());
    let constants: Vec<u64> = sig.entries().iter().map(|e| e.constant).collect();
    let mut checked = 0;
    for k in 0..sig.len() {
        let hi_k = u64::try_from(&sig.entries()[k].hi).map_err(|e| e.to_string())?;
        for t in 0..=k {
            let run = &sig.entries()[k - t];
            let rlo = u64::try_from(&run.lo).map_err(|e| e.to_string())?;
            let rhi = u64::try_from(&run.hi).map_err(|e| e.to_string())?;
            for m in rlo - 1..=rhi {
                let pred = games::predict_general(sig, k, t, m).map_err(|e| e.to_string())?;
                let gamma = if m == hi_k {
                    Dyadic::zero()
                } else {
                    games::least_effort_final(&spec, m, hi_k).map_err(|e| e.to_string())?
                };
                let truncated =
                    omegalab::bounds::truncate(&gamma.shl(m), k - t, &constants);
                if truncated != pred.constraint {
                    return Err(format!(
                        "constraint mismatch at k={k} t={t} m={m}: {truncated} != {}",
                        pred.constraint
                    ));
                }
                if let Some(floor) = pred.floor {
                    if gamma < floor {
                        return Err(format!("floor violated at k={k} t={t} m={m}"));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn seeded_signatures(seed: u64, count: usize) -> Vec<Signature> {
    let mut r = corpus::rng(seed);
    (0..count).map(|_| corpus::gen_signature(&mut r)).collect()
}

fn general(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    let count = args.count.unwrap_or(200);
    meta.insert("count".into(), count.into());
    seeded_signatures(seed, count)
        .into_par_iter()
        .enumerate()
        .map(|(case, sig)| {
            let mut r = row(vec![
                ("case", case.into()),
                ("runs", sig.len().into()),
                ("signature", serde_json::to_value(&sig).expect("signature serializes")),
            ]);
            match check_signature(&sig) {
                Ok(checked) => {
                    r.insert("cases_checked".into(), checked.into());
                    r.insert("ok".into(), true.into());
                }
                Err(e) => {
                    r.insert("error".into(), e.into());
                    r.insert("ok".into(), false.into());
                }
            }
            r
        })
        .collect()
}

/// The twenty-game grid shared by the dominance and accumulation suites.
fn game_grid() -> Vec<(u64, u64, u64)> {
    let mut grid = Vec::new();
    for lo in 0..5u64 {
        for width in 1..=4u64 {
            grid.push((lo, width, (lo + width) % 5));
        }
    }
    grid
}

fn dominance(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    let count = args.count.unwrap_or(100) as u64;
    meta.insert("count".into(), count.into());
    game_grid()
        .into_par_iter()
        .enumerate()
        .map(|(case, (lo, width, c))| {
            let config = games::HloadConfig::new(UseSpec::Offset { c }, lo, lo + width)
                .expect("grid games are well formed")
                .with_record_limit(0);
            let mut holds = true;
            let mut first_failure = None;
            for run in 0..count {
                let mut alt =
                    games::RandomOverResponder::seeded(seed ^ (case as u64) << 32 | run, 3);
                match games::compare_strategies(&config, &mut alt) {
                    Ok(rep) if rep.holds && rep.final_least <= rep.final_alt => {}
                    _ => {
                        holds = false;
                        first_failure = first_failure.or(Some(run));
                    }
                }
            }
            let mut r = row(vec![
                ("case", case.into()),
                ("lo", lo.into()),
                ("width", width.into()),
                ("c", c.into()),
                ("responders", count.into()),
            ]);
            if let Some(run) = first_failure {
                r.insert("first_failure".into(), run.into());
            }
            r.insert("ok".into(), holds.into());
            r
        })
        .collect()
}

fn accumulation(_meta: &mut Row) -> Vec<Row> {
    game_grid()
        .into_iter()
        .enumerate()
        .map(|(case, (lo, width, c))| {
            let config = games::HloadConfig::new(UseSpec::Offset { c }, lo, lo + width)
                .expect("grid games are well formed")
                .with_record_limit(0);
            let offset = Dyadic::new(3u8, lo);
            let mut r = row(vec![
                ("case", case.into()),
                ("lo", lo.into()),
                ("width", width.into()),
                ("c", c.into()),
            ]);
            dyadic_fields(&mut r, "offset", &offset);
            match games::accumulation_check(&config, &offset) {
                Ok(rep) => {
                    let exact = rep.final_shifted == &rep.final_base + &offset;
                    r.insert("steps".into(), rep.total_steps.into());
                    r.insert("ok".into(), (rep.holds && exact).into());
                }
                Err(e) => {
                    r.insert("error".into(), e.to_string().into());
                    r.insert("ok".into(), false.into());
                }
            }
            r
        })
        .collect()
}

fn truncsums(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    let count = args.count.unwrap_or(200);
    meta.insert("count".into(), count.into());
    seeded_signatures(seed, count)
        .into_par_iter()
        .enumerate()
        .map(|(case, sig)| {
            let mut pairs = 0u64;
            let mut ok = true;
            let mut detail = None;
            for k in 1..sig.len() {
                for t in 0..k {
                    match lower_bound_report(&sig, k, t) {
                        Ok(rep) if rep.holds => pairs += 1,
                        Ok(_) => {
                            ok = false;
                            detail = detail.or(Some(format!("bound fails at k={k} t={t}")));
                        }
                        Err(e) => {
                            ok = false;
                            detail = detail.or(Some(e.to_string()));
                        }
                    }
                }
            }
            let mut r = row(vec![
                ("case", case.into()),
                ("runs", sig.len().into()),
                ("pairs_checked", pairs.into()),
            ]);
            if let Some(d) = detail {
                r.insert("error".into(), d.into());
            }
            r.insert("ok".into(), ok.into());
            r
        })
        .collect()
}

fn construction_suite(meta: &mut Row) -> Result<Vec<Row>, String> {
    meta.insert("plans".into(), json!([1, 2, 3]));
    (1..=3usize)
        .map(|e_count| {
            let sig = corpus::plan_signature(e_count).map_err(|e| e.to_string())?;
            let plan = usefn::build_plan(&sig, e_count).map_err(|e| e.to_string())?;
            let pool = Adversary::pool(&plan, AdversaryPolicy::LeastEffort { cap: true })
                .map_err(|e| e.to_string())?;
            let budget = construction::default_stage_budget(&plan);
            let run = construction::run_construction(&plan, pool, budget, 0)
                .map_err(|e| e.to_string())?;
            let met = run.trace.outcomes.iter().all(|rep| {
                rep.outcome != Outcome::Open
                    && !rep.gamma_exceeded_one
                    && rep.actions_taken <= rep.action_budget
            });
            let bounded = run.final_alpha() <= &Dyadic::one() && run.final_beta() <= &Dyadic::one();
            let mut r = row(vec![
                ("e_count", e_count.into()),
                ("total_stages", run.trace.total_stages.into()),
                ("digest", format!("{:016x}", run.trace.digest).into()),
                ("budget_exhausted", run.trace.budget_exhausted.into()),
            ]);
            dyadic_fields(&mut r, "alpha", run.final_alpha());
            dyadic_fields(&mut r, "beta", run.final_beta());
            r.insert("ok".into(), (met && bounded && !run.trace.budget_exhausted).into());
            Ok(r)
        })
        .collect()
}

fn coding_suite(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    let count = args.count.unwrap_or(500);
    meta.insert("count".into(), count.into());
    let mut r = corpus::rng(seed);
    let cases: Vec<(coding::ApproxSequence, u32, u64)> = (0..count)
        .map(|_| {
            use rand::Rng;
            let a = corpus::gen_monotone_approx(&mut r);
            let n = r.gen_range(1..=12u32);
            let index = r.gen_range(1..1u64 << n);
            (a, n, index)
        })
        .collect();
    cases
        .into_par_iter()
        .enumerate()
        .map(|(case, (a, n, index))| {
            let mut r = row(vec![
                ("case", case.into()),
                ("stages", a.stages().into()),
                ("n", n.into()),
                ("probe_index", index.into()),
            ]);
            let outcome = (|| -> Result<(bool, u64, bool), omegalab::Error> {
                let coded = coding::encode_set(&a, n)?;
                let dec = coding::decode_real(&coded, &a, n)?;
                let roundtrip = dec.prefix == a.final_value().prefix(u64::from(n))
                    && dec.set_bits_read < (1u64 << n);
                let mut oracle = coding::RealOracle::new(a.final_value().clone());
                let sb = coding::set_from_real(&mut oracle, &a, index)?;
                let probe = sb.bit == coded.bit(index)?
                    && sb.digits_consulted <= u64::from(index.ilog2()) + 1;
                Ok((roundtrip, dec.set_bits_read, probe))
            })();
            match outcome {
                Ok((roundtrip, bits_read, probe)) => {
                    r.insert("set_bits_read".into(), bits_read.into());
                    r.insert("roundtrip".into(), roundtrip.into());
                    r.insert("probe".into(), probe.into());
                    r.insert("ok".into(), (roundtrip && probe).into());
                }
                Err(e) => {
                    r.insert("error".into(), e.to_string().into());
                    r.insert("ok".into(), false.into());
                }
            }
            r
        })
        .collect()
}

fn kc(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    use rand::Rng;
    let count = args.count.unwrap_or(100);
    meta.insert("count".into(), count.into());
    let mut rows = Vec::new();
    let mut rng = corpus::rng(seed);
    for case in 0..count {
        let mut kc = machines::KCState::new();
        let mut ok = true;
        let mut detail = None;
        for _ in 0..30 {
            let len = rng.gen_range(0..=12u64);
            let fits = Dyadic::inv_pow2(len) <= kc.remaining_weight();
            let granted = match kc.alloc(len) {
                Ok(word) => word.len() as u64 == len,
                Err(_) => false,
            };
            if granted != fits || kc.check_invariants().is_err() {
                ok = false;
                detail = detail.or(Some(format!("allocation of 2^-{len} misbehaved")));
            }
        }
        let mut r = row(vec![
            ("case", case.into()),
            ("phase", "alloc".into()),
            ("requests", 30.into()),
        ]);
        if let Some(d) = detail {
            r.insert("error".into(), d.into());
        }
        r.insert("ok".into(), ok.into());
        rows.push(r);
    }
    for case in 0..30 {
        let coupled = corpus::gen_coupled_case(&mut rng);
        let mut r = row(vec![("case", case.into()), ("phase", "build".into())]);
        match machines::build_reduction(&coupled.enumeration, &coupled.g, &coupled.omega) {
            Ok(tables) => {
                let weight = tables.total_request_weight();
                dyadic_fields(&mut r, "request_weight", &weight);
                let ok = weight < Dyadic::one() && tables.kc.check_invariants().is_ok();
                r.insert("ok".into(), ok.into());
            }
            Err(e) => {
                r.insert("error".into(), e.to_string().into());
                r.insert("ok".into(), false.into());
            }
        }
        rows.push(r);
    }
    rows
}

fn reduction(args: &VerifyArgs, seed: u64, meta: &mut Row) -> Vec<Row> {
    use rand::Rng;
    let count = args.count.unwrap_or(100);
    meta.insert("count".into(), count.into());
    let mut rows = Vec::new();
    let mut rng = corpus::rng(seed);

    for case in 0..count {
        let coupled = corpus::gen_coupled_case(&mut rng);
        let mut r = row(vec![("case", case.into()), ("phase", "decide".into())]);
        let outcome = (|| -> Result<usize, String> {
            let tables =
                machines::build_reduction(&coupled.enumeration, &coupled.g, &coupled.omega)
                    .map_err(|e| e.to_string())?;
            let mut arguments = 0;
            for n in tables.threshold + 1..=coupled.g.len() {
                let oracle =
                    coupled.omega.final_value().prefix(coupled.g.get(n).expect("covered"));
                let d = machines::decide_member(
                    n,
                    &oracle,
                    &coupled.g,
                    &tables,
                    &coupled.enumeration,
                    &coupled.omega,
                )
                .map_err(|e| e.to_string())?;
                let truth = coupled.enumeration.iter().any(|&(m, _)| m == n);
                if (d.bit == 1) != truth {
                    return Err(format!("argument {n} decided wrongly"));
                }
                arguments += 1;
            }
            Ok(arguments)
        })();
        match outcome {
            Ok(arguments) => {
                r.insert("arguments".into(), arguments.into());
                r.insert("ok".into(), true.into());
            }
            Err(e) => {
                r.insert("error".into(), e.into());
                r.insert("ok".into(), false.into());
            }
        }
        rows.push(r);
    }

    for case in 0..count {
        let stages = rng.gen_range(2..=16usize);
        let scale = rng.gen_range(1..=12u64);
        let a = corpus::gen_monotone_approx_sized(&mut rng, stages, scale);
        let omega = corpus::gen_monotone_approx_sized(&mut rng, stages, scale);
        let mut gv: Vec<u64> = (0..12).map(|_| rng.gen_range(1..=6)).collect();
        gv.sort_unstable();
        let g = UseTable::new(gv).expect("sorted");
        let mut r = row(vec![("case", case.into()), ("phase", "solovay".into())]);
        match machines::solovay_items(&a, &omega, &g) {
            Ok(ledger) => {
                r.insert("items".into(), ledger.items.len().into());
                dyadic_fields(&mut r, "weight", &ledger.weight);
                dyadic_fields(&mut r, "bound", &ledger.bound);
                r.insert("ok".into(), (ledger.weight <= ledger.bound).into());
            }
            Err(e) => {
                r.insert("error".into(), e.to_string().into());
                r.insert("ok".into(), false.into());
            }
        }
        rows.push(r);
    }

    for case in 0..count / 2 {
        let omega = corpus::gen_monotone_approx(&mut rng);
        let mut gv: Vec<u64> = (0..8).map(|_| rng.gen_range(1..=6)).collect();
        gv.sort_unstable();
        let g = UseTable::new(gv).expect("sorted");
        let mut ok = true;
        let mut detail = None;
        for n in 1..=g.len() {
            let oracle = omega.final_value().prefix(n + g.get(n).expect("covered"));
            match machines::reduce_real(n, &oracle, &g, &omega, &omega) {
                Ok(rp) if rp.prefix == omega.final_value().prefix(n) => {}
                Ok(_) => {
                    ok = false;
                    detail = detail.or(Some(format!("self-reduction differs at n={n}")));
                }
                Err(e) => {
                    ok = false;
                    detail = detail.or(Some(e.to_string()));
                }
            }
        }
        let mut r = row(vec![
            ("case", case.into()),
            ("phase", "self_reduce".into()),
            ("lengths", g.len().into()),
        ]);
        if let Some(d) = detail {
            r.insert("error".into(), d.into());
        }
        r.insert("ok".into(), ok.into());
        rows.push(r);
    }
    rows
}

fn condensation(meta: &mut Row) -> Result<Vec<Row>, String> {
    meta.insert("terms".into(), 4096.into());
    let tables: [(&str, Vec<Dyadic>); 2] = [
        ("log-steps", (1..=4096u64).map(|i| Dyadic::inv_pow2(u64::from(i.ilog2()))).collect()),
        ("geometric", (1..=4096u64).map(Dyadic::inv_pow2).collect()),
    ];
    let mut rows = Vec::new();
    for (name, f) in &tables {
        let report = usefn::condensation_check(f, 12).map_err(|e| e.to_string())?;
        for lvl in &report.levels {
            let sandwich = lvl.block_tail <= lvl.condensed && lvl.condensed <= lvl.doubled_tail;
            let mut r = row(vec![("table", (*name).into()), ("t", lvl.t.into())]);
            dyadic_fields(&mut r, "block_tail", &lvl.block_tail);
            dyadic_fields(&mut r, "condensed", &lvl.condensed);
            dyadic_fields(&mut r, "doubled_tail", &lvl.doubled_tail);
            r.insert("ok".into(), (lvl.holds && sandwich).into());
            rows.push(r);
        }
    }
    Ok(rows)
}
