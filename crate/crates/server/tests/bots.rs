use std::sync::Arc;

use fraudaware_core::personalize::{InvestorType, KnowledgePool};
use fraudaware_core::simkit::{generate_scenario, ScenarioConfig};
use fraudaware_server::bots::{run_bot_session, BotPolicy};
use fraudaware_server::{MemoryStore, Service, ServiceConfig};

fn service() -> Service {
    let scenario = generate_scenario(&ScenarioConfig::default_config(), 42).unwrap();
    Service::open(scenario, "default-42", KnowledgePool::default_pool(), Arc::new(MemoryStore::new()), ServiceConfig::default())
        .unwrap()
}

// Frozen from a calibration run over seeds 1..=20: novices 19/20 trapped, experienced 17/20 reporting.
#[test]
fn policy_calibration_over_twenty_seeds() {
    let svc = service();
    svc.train(&Default::default()).unwrap();
    let mut trapped = 0;
    let mut novice_hits = 0;
    for seed in 1..=20 {
        let run = run_bot_session(&svc, &BotPolicy::novice(seed)).unwrap();
        trapped += usize::from(run.footprint.n_fraud_bought >= 1);
        novice_hits += usize::from(run.feedback.unwrap().predicted_type == InvestorType::Novice);
    }
    let mut reporting = 0;
    let mut experienced_hits = 0;
    for seed in 1..=20 {
        let run = run_bot_session(&svc, &BotPolicy::experienced(seed)).unwrap();
        reporting += usize::from(run.footprint.n_frauds_reported >= 1);
        experienced_hits += usize::from(run.feedback.unwrap().predicted_type != InvestorType::Novice);
    }
    assert!(trapped >= 14, "{trapped}/20 novice runs bought a fraud stock");
    assert!(reporting >= 12, "{reporting}/20 experienced runs reported");
    assert_eq!((trapped, reporting), (19, 17));
    assert!(novice_hits >= 18 && experienced_hits >= 18, "{novice_hits} {experienced_hits}");
}
