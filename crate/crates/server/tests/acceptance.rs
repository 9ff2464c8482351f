#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use rand::Rng;
use tower::ServiceExt;

use fraudaware_core::analytics::{build_report, generate_cohort, CohortSpec};
use fraudaware_core::mlcore::*;
use fraudaware_core::personalize::{build_training_table, train_pipeline, KnowledgePool, PipelineConfig};
use fraudaware_core::rng::seeded;
use fraudaware_core::session::{fold_footprint, DigitalFootprint, SessionEvent, SessionId, SessionState, Side, XpRules};
use fraudaware_core::simkit::{generate_scenario, Authenticity, ScenarioConfig};
use fraudaware_core::Money;
use fraudaware_server::bots::{run_bot_session, BotPolicy};
use fraudaware_server::service::SessionAnalytics;
use fraudaware_server::{router, MemoryStore, Service, ServiceConfig};

const KEY_FEATURES: [&str; 5] = ["age", "t_market_page", "n_untrusted_read", "n_fraud_bought", "n_trusted_read"];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn default_cohort() -> Vec<DigitalFootprint> {
    generate_cohort(&CohortSpec::default_spec()).expect("default cohort")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let table = build_training_table(&default_cohort()).map_err(|e| e.to_string())?;
    let model = train_pipeline(&table, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let acc = |k: ClassifierKind| model.classifier(k).map(|c| c.mean_accuracy).ok_or(format!("{k:?} missing"));
    let (dt, gbt, mlp) = (
        acc(ClassifierKind::DecisionTree)?,
        acc(ClassifierKind::GradientBoostedTrees)?,
        acc(ClassifierKind::Perceptron)?,
    );
    let detail = format!("DT {dt:.3}, GBT {gbt:.3}, MLP {mlp:.3}, {elapsed:.1} s");
    ensure(dt >= 0.65 && gbt >= 0.75 && mlp >= 0.85, || format!("floors missed: {detail}"))?;
    ensure(mlp >= gbt - 0.05 && gbt >= dt - 0.05, || format!("ordering missed: {detail}"))?;
    ensure(elapsed < 30.0, || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn criterion_2() -> Outcome {
    let table = build_training_table(&default_cohort()).map_err(|e| e.to_string())?;
    let (z, _) = standardize(&table).map_err(|e| e.to_string())?;
    let elbow = elbow_select(&z, 1..=8, 42).map_err(|e| e.to_string())?;
    let curve: Vec<String> = elbow.curve.iter().map(|(k, i)| format!("{k}:{i:.1}")).collect();
    ensure(elbow.curve.len() == 8, || "curve does not cover k=1..8".into())?;
    ensure(elbow.curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9), || format!("curve increases: {curve:?}"))?;
    ensure(elbow.chosen_k == 2, || format!("chose k={}: {curve:?}", elbow.chosen_k))?;
    Ok(format!("k=2, curve {}", curve.join(" ")))
}

fn criterion_3() -> Outcome {
    let table = build_training_table(&default_cohort()).map_err(|e| e.to_string())?;
    let (z, _) = standardize(&table).map_err(|e| e.to_string())?;
    let pca = pca_fit(&z, 2).map_err(|e| e.to_string())?;
    let top = pca_top_features(&pca, 5).map_err(|e| e.to_string())?;
    let hits = top.iter().filter(|f| KEY_FEATURES.contains(&f.as_str())).count();
    ensure(hits >= 4, || format!("{hits}/5 expected features in {top:?}"))?;
    Ok(format!("{hits}/5 in {top:?}"))
}

fn criterion_4() -> Outcome {
    let report = build_report(&default_cohort(), "default", None, "fixed").map_err(|e| e.to_string())?;
    let trap = report.novice_trap_fraction().ok_or("no trap fraction")?;
    let ratio = report.market_dwell_ratio().ok_or("no dwell ratio")?;
    let detail = format!("trap fraction {trap:.4}, dwell ratio {ratio:.3}");
    ensure(trap >= 0.7 && (1.5..=2.5).contains(&ratio), || detail.clone())?;
    Ok(detail)
}

fn criterion_5() -> Outcome {
    let mut kmeans = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed % 7) as usize;
        let d = 1 + (seed / 7 % 3) as usize;
        let x = oracles::random_matrix(seed, n, d, if seed % 2 == 0 { Some(4) } else { None }, None);
        let m = kmeans_fit(&x, 2, seed).map_err(|e| e.to_string())?;
        let best = oracles::kmeans2_optimum(&x);
        ensure((m.inertia - best).abs() <= 1e-9 * best.max(1.0), || {
            format!("k-means seed {seed}: {} vs optimum {best}", m.inertia)
        })?;
        kmeans += 1;
    }

    let (mut trees, mut gap_cases, mut worst_gap) = (0, 0, 0.0f64);
    for seed in 0..300u64 {
        let n = 4 + (seed % 9) as usize;
        let d = 1 + (seed % 2) as usize;
        let x = oracles::random_matrix(seed, n, d, Some(6), Some(2));
        for depth in 1..=2 {
            let t = tree_fit(&x, Some(depth), 1).map_err(|e| e.to_string())?;
            let acc = accuracy(|r| t.predict(r), &x).map_err(|e| e.to_string())?;
            let greedy = oracles::greedy_tree_accuracy(&x, depth);
            let best = oracles::best_tree_accuracy(&x, depth);
            ensure(acc == greedy, || format!("tree seed {seed} depth {depth}: {acc} vs enumeration {greedy}"))?;
            ensure(acc <= best + 1e-12, || format!("tree seed {seed} beats the optimum"))?;
            if best - acc > 1e-12 {
                gap_cases += 1;
                worst_gap = worst_gap.max(best - acc);
            }
            trees += 1;
        }
    }

    let mut worst_grad = 0.0f64;
    for seed in 0..10u64 {
        let x = oracles::random_matrix(seed, 6, 3, None, Some(2));
        for activation in [Activation::Relu, Activation::Tanh] {
            let net = Mlp::init(3, vec![0, 1], &MlpParams { activation, seed, hidden: vec![8], ..Default::default() });
            let err = oracles::mlp_gradient_error(&net, &x, 1e-5);
            ensure(err < 1e-4, || format!("MLP gradient seed {seed} {activation:?}: {err}"))?;
            worst_grad = worst_grad.max(err);
        }
    }

    let mut worst_cos = 1.0f64;
    for seed in 0..10u64 {
        let raw = oracles::random_matrix(seed, 60, 5, None, None);
        let x = raw
            .map_rows(|r| vec![r[0], r[0] * 2.0 + r[1] * 0.5, r[2] - r[0], r[3] * 0.3 + r[1], r[4] * 0.1])
            .map_err(|e| e.to_string())?;
        let model = pca_fit(&x, 3).map_err(|e| e.to_string())?;
        let (z, _) = standardize(&x).map_err(|e| e.to_string())?;
        let reference = oracles::power_iteration(oracles::covariance(&z), 3, 5000);
        for (c, (_, v)) in model.components.iter().zip(&reference) {
            let cos: f64 = c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs();
            ensure(cos > 0.999, || format!("PCA seed {seed}: |cos| {cos}"))?;
            worst_cos = worst_cos.min(cos);
        }
    }

    for seed in 0..20u64 {
        let x = oracles::random_matrix(seed, 30, 3, None, Some(2));
        let m = gbt_fit(&x, &GbtParams { n_rounds: 100, ..Default::default() }).map_err(|e| e.to_string())?;
        ensure(m.loss_history.len() == 101, || "GBT history length".into())?;
        ensure(m.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("GBT loss rose on seed {seed}"))?;
    }

    Ok(format!(
        "k-means {kmeans}/{kmeans}, tree {trees}/{trees} vs greedy enumeration \
         (max-accuracy gap on {gap_cases}, worst {worst_gap:.3}), MLP grad err <= {worst_grad:.1e}, \
         PCA |cos| >= {worst_cos:.6}, GBT 20/20 monotone"
    ))
}

fn fraud_shape() -> Result<usize, String> {
    let config = ScenarioConfig::default_config();
    let mut checked = 0;
    for seed in 0..100u64 {
        let scenario = generate_scenario(&config, seed).map_err(|e| e.to_string())?;
        for s in scenario.stocks.iter().filter(|s| s.authenticity == Authenticity::Fraud) {
            let peak = s.peak().ok_or("empty history")?;
            let p = &s.params;
            ensure((p.pump_start..=p.pump_end()).contains(&peak.tick), || {
                format!("seed {seed} {}: peak at {} outside {}..={}", s.id, peak.tick, p.pump_start, p.pump_end())
            })?;
            let last = s.price_history.last().ok_or("empty history")?.price;
            ensure(last <= p.crash_floor * peak.price, || format!("seed {seed} {}: final {last} > floor", s.id))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn trade_conservation() -> Result<usize, String> {
    let config = ScenarioConfig::default_config();
    let mut fills = 0;
    for seed in 0..5u64 {
        let scenario = generate_scenario(&config, seed).map_err(|e| e.to_string())?;
        let mut state = SessionState::new(SessionId::new("acc"), 30, &scenario, XpRules::default());
        let mut rng = seeded(1000 + seed);
        let mut ledger = Money::ZERO;
        let mut shares_ledger = vec![0i64; scenario.stocks.len()];
        for i in 0..1000u32 {
            if rng.random_bool(0.05) {
                state.advance(1, &scenario);
            }
            let idx = rng.random_range(0..scenario.stocks.len());
            let stock = scenario.stocks[idx].id.clone();
            let side = if rng.random_bool(0.6) { Side::Buy } else { Side::Sell };
            let shares = rng.random_range(0..200u64);
            let before = state.portfolio.clone();
            match state.trade(&scenario, &stock, side, shares, f64::from(i)) {
                Ok((fill, _)) => {
                    let signed = if side == Side::Buy { shares as i64 } else { -(shares as i64) };
                    ensure(fill.cash_delta == Money::from_cents(-signed * fill.price.cents()), || "cash delta".into())?;
                    ensure(state.portfolio.cash - before.cash == fill.cash_delta, || "cash moved wrong".into())?;
                    ledger += fill.cash_delta;
                    shares_ledger[idx] += signed;
                    fills += 1;
                }
                Err(_) => ensure(state.portfolio == before, || format!("failed trade {i} changed the portfolio"))?,
            }
            ensure(!state.portfolio.cash.is_negative(), || "negative cash".into())?;
        }
        ensure(state.portfolio.cash == scenario.initial_cash + ledger, || format!("seed {seed}: cash ledger"))?;
        for (i, s) in scenario.stocks.iter().enumerate() {
            ensure(state.portfolio.shares(&s.id) as i64 == shares_ledger[i], || format!("seed {seed}: shares of {}", s.id))?;
        }
        let replayed =
            SessionState::replay(SessionId::new("acc"), 30, &scenario, XpRules::default(), state.events()).map_err(|e| e.to_string())?;
        ensure(replayed.portfolio == state.portfolio, || format!("seed {seed}: replayed portfolio differs"))?;
    }
    Ok(fills)
}

async fn get_json<T: serde::de::DeserializeOwned>(app: &axum::Router, uri: &str) -> Result<T, String> {
    let res = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).map_err(|e| e.to_string())?)
        .await
        .map_err(|e| e.to_string())?;
    let status = res.status();
    let bytes = res.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    ensure(status.is_success(), || format!("{uri}: {status} {}", String::from_utf8_lossy(&bytes)))?;
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}

async fn bot_replay() -> Result<usize, String> {
    let scenario = generate_scenario(&ScenarioConfig::default_config(), 42).map_err(|e| e.to_string())?;
    let svc = Arc::new(
        Service::open(scenario, "default-42", KnowledgePool::default_pool(), Arc::new(MemoryStore::new()), ServiceConfig::default())
            .map_err(|e| e.to_string())?,
    );
    let app = router(svc.clone());
    for seed in 1..=20u64 {
        let policy = if seed % 2 == 0 { BotPolicy::experienced(seed) } else { BotPolicy::novice(seed) };
        let run = run_bot_session(&svc, &policy).map_err(|e| e.to_string())?;
        let id = run.session_id.as_str();
        let events: Vec<SessionEvent> = get_json(&app, &format!("/v1/sessions/{id}/events")).await?;
        let reported: SessionAnalytics = get_json(&app, &format!("/v1/sessions/{id}/analytics")).await?;
        let replayed = fold_footprint(&events, policy.age).map_err(|e| e.to_string())?;
        ensure(replayed == reported.footprint, || format!("seed {seed}: replay {replayed:?} != server {:?}", reported.footprint))?;
        ensure(events == run.events, || format!("seed {seed}: event log differs from the bot's view"))?;
    }
    Ok(20)
}

fn criterion_6() -> Outcome {
    let frauds = fraud_shape()?;
    let fills = trade_conservation()?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let bots = rt.block_on(bot_replay())?;
    Ok(format!("{frauds} fraud stocks shaped, 5000 trade events ({fills} fills) conserved, {bots}/20 bot replays match"))
}

fn criterion_7() -> Outcome {
    let run = || -> Result<[String; 4], String> {
        let scenario = generate_scenario(&ScenarioConfig::default_config(), 42).map_err(|e| e.to_string())?;
        let cohort = default_cohort();
        let table = build_training_table(&cohort).map_err(|e| e.to_string())?;
        let model = train_pipeline(&table, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let report = build_report(&cohort, "default", Some(&model), "fixed").map_err(|e| e.to_string())?;
        Ok([
            scenario.to_json(),
            serde_json::to_string(&cohort).map_err(|e| e.to_string())?,
            model.to_json(),
            report.to_json(),
        ])
    };
    let (a, b) = (run()?, run()?);
    for (name, (x, y)) in ["scenario", "cohort", "training", "report"].iter().zip(a.iter().zip(&b)) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    let bytes: usize = a.iter().map(String::len).sum();
    Ok(format!("scenario, cohort, training and report identical ({bytes} bytes)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 pipeline accuracy", criterion_1),
        ("2 elbow", criterion_2),
        ("3 feature selection", criterion_3),
        ("4 insights", criterion_4),
        ("5 ML oracle suite", criterion_5),
        ("6 simulation suite", criterion_6),
        ("7 determinism", criterion_7),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
