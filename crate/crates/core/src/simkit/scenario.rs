use rand::Rng;

use super::config::{ScenarioConfig, StockConfig};
use super::price::{delist_fake, step_fraud_price, step_real_price};
use super::types::*;
use super::SimError;
use crate::rng;
use crate::Money;

/// Materializes price histories, the news schedule and the chat script.
///
/// Deterministic in `(config, seed)`.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario, SimError> {
    config.validate()?;
    let last = config.horizon - 1;
    let mut stocks = Vec::with_capacity(config.stocks.len());
    let mut articles = Vec::new();

    for (index, sc) in config.stocks.iter().enumerate() {
        let stock_seed = rng::derive_seed(seed, index as u64 + 1);
        let mut schedule_rng = rng::seeded(rng::derive_seed(stock_seed, 0x5EED));
        let params = process_params(config, sc, stock_seed, &mut schedule_rng);
        let stock = build_stock(config, sc, params)?;

        let mut untrusted_seen = 0u32;
        for ac in &sc.articles {
            let tick = match (ac.tick, ac.trust, stock.authenticity) {
                (Some(t), _, _) => t,
                (None, SourceTrust::Untrusted, Authenticity::Fraud) => {
                    let t = params.pump_start + untrusted_seen % params.pump_len;
                    untrusted_seen += 1;
                    t
                }
                (None, _, Authenticity::Fake) => {
                    let end = stock.delist_tick.unwrap_or(config.horizon).min(config.horizon);
                    schedule_rng.random_range(0..end)
                }
                (None, _, _) => schedule_rng.random_range(0..=last),
            };
            let trap_tag = (ac.trust == SourceTrust::Untrusted
                && stock.authenticity == Authenticity::Fraud)
                .then_some(ScamTag::PennyStockPumpAndDump);
            articles.push(NewsArticle {
                id: ArticleId::new(format!("A{:03}", articles.len() + 1)),
                stock_id: stock.id.clone(),
                headline: ac.headline.clone(),
                body: ac.body.clone(),
                sentiment: ac.sentiment,
                source_trust: ac.trust,
                publish_tick: tick,
                trap_tag,
            });
        }
        stocks.push(stock);
    }
    articles.sort_by(|a, b| a.publish_tick.cmp(&b.publish_tick).then_with(|| a.id.cmp(&b.id)));

    let chat_script = config
        .chat
        .iter()
        .enumerate()
        .map(|(i, c)| ChatMessage {
            id: MessageId::new(format!("M{:03}", i + 1)),
            author: c.author,
            text: c.text.clone(),
            trap_tag: (c.author == ChatAuthor::Recruiter).then_some(ScamTag::PyramidScheme),
            reply_options: c.reply_options.clone(),
            publish_tick: c.tick,
        })
        .collect();

    Ok(Scenario {
        seed,
        horizon: config.horizon,
        difficulty: config.difficulty,
        stocks,
        articles,
        chat_script,
        initial_cash: Money::from_quote(config.initial_cash),
        initial_xp: config.initial_xp,
    })
}

fn process_params(
    config: &ScenarioConfig,
    sc: &StockConfig,
    stock_seed: u64,
    schedule_rng: &mut impl Rng,
) -> PriceProcessParams {
    let (drift, volatility) = config.walk_for(sc);
    let mut params = PriceProcessParams::random_walk(stock_seed, drift, volatility);
    if sc.authenticity == Authenticity::Fraud {
        let f = &config.process.fraud;
        params.pump_start = sc
            .pump_start
            .unwrap_or_else(|| schedule_rng.random_range(f.pump_start[0]..=f.pump_start[1]));
        params.pump_len = sc.pump_len.unwrap_or(f.pump_len);
        params.dump_len = sc.dump_len.unwrap_or(f.dump_len);
        params.pump_multiple = sc.pump_multiple.unwrap_or(f.pump_multiple);
        params.crash_floor = sc.crash_floor.unwrap_or(f.crash_floor);
    }
    params
}

fn build_stock(config: &ScenarioConfig, sc: &StockConfig, params: PriceProcessParams) -> Result<Stock, SimError> {
    let mut history = Vec::with_capacity(config.horizon as usize);
    history.push(PricePoint { tick: 0, price: sc.initial_price });
    let mut prev = sc.initial_price;
    for tick in 1..config.horizon {
        prev = match sc.authenticity {
            Authenticity::Fraud => step_fraud_price(prev, &params, tick, config.horizon)?,
            Authenticity::Real | Authenticity::Fake => step_real_price(prev, &params, tick)?,
        };
        history.push(PricePoint { tick, price: prev });
    }
    let delist_tick = (sc.authenticity == Authenticity::Fake)
        .then(|| sc.delist_tick.unwrap_or(config.process.fake.delist_tick));
    let stock = Stock {
        id: StockId::new(sc.id.clone()),
        ticker: sc.ticker.clone(),
        name: sc.name.clone(),
        authenticity: sc.authenticity,
        sector: sc.sector.clone(),
        price_history: history,
        float_shares: sc.float_shares,
        params,
        delist_tick,
    };
    match delist_tick {
        Some(tick) => delist_fake(&stock, tick),
        None => Ok(stock),
    }
}
