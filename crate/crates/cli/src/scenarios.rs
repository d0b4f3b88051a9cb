//! The `run` scenarios: execute one engine run and write its trace. Errors
//! from the core surface verbatim.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use omegalab::coding::{self, ApproxSequence};
use omegalab::construction::{self, Adversary, AdversaryPolicy};
use omegalab::corpus;
use omegalab::dyadic::Dyadic;
use omegalab::games::{self, MoveOrder, UseSpec};
use omegalab::machines;
use omegalab::usefn::{self, ConstructionPlan, UseTable};

use crate::report::{bit_string, dyadic_fields, emit, parse_range, Format};
use crate::RunArgs;

pub fn run(args: RunArgs) -> Result<usize, String> {
    match args.scenario.as_str() {
        "hload" => hload(&args),
        "construct" => construct(&args),
        "encode" => encode(&args),
        "reduce" => reduce(&args),
        other => Err(format!(
            "unknown scenario '{other}' (expected hload, construct, encode, reduce)"
        )),
    }?;
    Ok(0)
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, String> {
    value.as_ref().ok_or_else(|| format!("missing --{flag}"))
}

fn read_approx(path: &PathBuf) -> Result<ApproxSequence, String> {
    let body =
        fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    serde_json::from_str(&body).map_err(|e| format!("parsing {}: {e}", path.display()))
}

/// "x+<c>" or "x+g" with the table taken from --g.
fn parse_use_spec(args: &RunArgs) -> Result<UseSpec, String> {
    let h = required(&args.h, "h")?;
    if h == "x+g" {
        let g = required(&args.g, "g")?;
        let values: Vec<u64> =
            serde_json::from_str(g).map_err(|e| format!("parsing --g: {e}"))?;
        return Ok(UseSpec::PlusTable(UseTable::new(values).map_err(|e| e.to_string())?));
    }
    match h.strip_prefix("x+").and_then(|c| c.parse::<u64>().ok()) {
        Some(c) => Ok(UseSpec::Offset { c }),
        None => Err(format!("bad --h '{h}': expected \"x+<c>\" or \"x+g\"")),
    }
}

fn write_scenario(
    args: &RunArgs,
    json_body: Value,
    csv_body: String,
) -> Result<(), String> {
    let body = match args.format {
        Format::Json => serde_json::to_string_pretty(&json_body).expect("scenario serializes"),
        Format::Csv => csv_body,
    };
    emit(&args.out, &body)
}

fn hload(args: &RunArgs) -> Result<(), String> {
    let spec = parse_use_spec(args)?;
    let (lo, hi) = parse_range(required(&args.interval, "interval")?)?;
    let order = match args.order.as_deref() {
        None | Some("alpha_first") => MoveOrder::AlphaFirst,
        Some("beta_first") => MoveOrder::BetaFirst,
        Some(other) => return Err(format!("bad --order '{other}'")),
    };
    let mut config = games::HloadConfig::new(spec, lo, hi)
        .map_err(|e| e.to_string())?
        .with_order(order);
    if let Some(limit) = args.record_limit {
        config = config.with_record_limit(limit);
    }
    let trace = games::hload(&config, &mut games::LeastEffort).map_err(|e| e.to_string())?;

    let mut head = Map::new();
    head.insert("scenario".into(), "hload".into());
    dyadic_fields(&mut head, "final_gamma", &trace.final_state.gamma);
    head.insert("total_steps".into(), trace.total_steps.into());
    head.insert("digest".into(), format!("{:016x}", trace.digest).into());
    head.insert("trace".into(), serde_json::to_value(&trace).expect("trace serializes"));
    write_scenario(args, Value::Object(head), trace.to_csv())
}

fn parse_adversaries(
    spec: &str,
    plan: &ConstructionPlan,
) -> Result<Vec<Adversary>, String> {
    let mut pool = Vec::new();
    for part in spec.split(',') {
        let (name, count) = match part.split_once(':') {
            Some((name, count)) => {
                (name, count.parse::<usize>().map_err(|_| format!("bad count in '{part}'"))?)
            }
            None => (part, 1),
        };
        let policy = match name {
            "least_effort" => AdversaryPolicy::LeastEffort { cap: true },
            "uncapped" => AdversaryPolicy::LeastEffort { cap: false },
            "silent" => AdversaryPolicy::Silent,
            other => return Err(format!("unknown adversary policy '{other}'")),
        };
        for _ in 0..count {
            let e = pool.len();
            pool.push(Adversary::new(plan, e, policy).map_err(|e| e.to_string())?);
        }
    }
    Ok(pool)
}

fn construct(args: &RunArgs) -> Result<(), String> {
    let plan: ConstructionPlan = match (&args.plan, args.e_count) {
        (Some(path), _) => {
            let body = fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            serde_json::from_str(&body).map_err(|e| format!("parsing {}: {e}", path.display()))?
        }
        (None, Some(e_count)) => {
            let sig = corpus::plan_signature(e_count).map_err(|e| e.to_string())?;
            usefn::build_plan(&sig, e_count).map_err(|e| e.to_string())?
        }
        (None, None) => return Err("missing --plan or --e-count".into()),
    };
    let adversaries = match &args.adversaries {
        Some(spec) => parse_adversaries(spec, &plan)?,
        None => Adversary::pool(&plan, AdversaryPolicy::LeastEffort { cap: true })
            .map_err(|e| e.to_string())?,
    };
    let budget = args.stage_budget.unwrap_or_else(|| construction::default_stage_budget(&plan));
    let record_limit = args.record_limit.unwrap_or(4096);
    let run = construction::run_construction(&plan, adversaries, budget, record_limit)
        .map_err(|e| e.to_string())?;

    let mut head = Map::new();
    head.insert("scenario".into(), "construct".into());
    head.insert("requirements".into(), run.trace.requirements.into());
    head.insert("boundaries".into(), json!(plan.boundaries));
    head.insert("total_stages".into(), run.trace.total_stages.into());
    head.insert("digest".into(), format!("{:016x}", run.trace.digest).into());
    dyadic_fields(&mut head, "final_alpha", run.final_alpha());
    dyadic_fields(&mut head, "final_beta", run.final_beta());
    head.insert(
        "outcomes".into(),
        serde_json::to_value(&run.trace.outcomes).expect("outcomes serialize"),
    );
    head.insert("trace".into(), serde_json::to_value(&run.trace).expect("trace serializes"));
    write_scenario(args, Value::Object(head), run.trace.to_csv())
}

fn encode(args: &RunArgs) -> Result<(), String> {
    let a = read_approx(required(&args.approx, "approx")?)?;
    let n = *required(&args.n, "n")? as u32;
    let coded = coding::encode_set(&a, n).map_err(|e| e.to_string())?;
    let bits = coded.to_string();
    let json_body = json!({
        "scenario": "encode",
        "n": n,
        "length": bits.len(),
        "bits": bits,
    });
    write_scenario(args, json_body, format!("n,length,bits\n{n},{},{bits}\n", bits.len()))
}

fn reduce(args: &RunArgs) -> Result<(), String> {
    let omega = read_approx(required(&args.omega, "omega")?)?;
    let a = match &args.a {
        Some(path) => read_approx(path)?,
        None => omega.clone(),
    };
    let g_text = required(&args.g, "g")?;
    let values: Vec<u64> =
        serde_json::from_str(g_text).map_err(|e| format!("parsing --g: {e}"))?;
    let g = UseTable::new(values).map_err(|e| e.to_string())?;
    let n = *required(&args.n, "n")?;
    let gn = g.get(n).ok_or(format!("--g does not cover position {n}"))?;
    let len = n + gn;
    let oracle = omega.final_value().prefix(len);
    let rp = machines::reduce_real(n, &oracle, &g, &a, &omega).map_err(|e| e.to_string())?;

    let mut head = Map::new();
    head.insert("scenario".into(), "reduce".into());
    head.insert("n".into(), n.into());
    head.insert("use_length".into(), len.into());
    head.insert("oracle_bits".into(), bit_string(&oracle, len).into());
    head.insert("prefix_bits".into(), bit_string(&rp.prefix, n).into());
    head.insert("match_stage".into(), rp.match_stage.into());
    dyadic_fields(&mut head, "prefix_value", &Dyadic::new(rp.prefix.clone(), n));
    let csv = format!(
        "n,use_length,oracle_bits,prefix_bits,match_stage\n{n},{len},{},{},{}\n",
        bit_string(&oracle, len),
        bit_string(&rp.prefix, n),
        rp.match_stage
    );
    write_scenario(args, Value::Object(head), csv)
}
