use super::{make_bundle, predict_type, FeedbackBundle, KnowledgePool, PipelineModel};
use crate::mlcore::ClassifierKind;
use crate::session::{decode_event, FootprintFolder, SessionEvent, SessionId};

pub const DEFAULT_FEEDBACK_CADENCE: usize = 25;

/// Re-predicts the investor type every `cadence` accepted events and emits a bundle
/// when the type or difficulty changes. The first evaluation always emits.
pub struct FeedbackLoop<'a> {
    model: &'a PipelineModel,
    pool: &'a KnowledgePool,
    kind: ClassifierKind,
    session_id: Option<SessionId>,
    cadence: usize,
    folder: FootprintFolder,
    since_eval: usize,
    last: Option<FeedbackBundle>,
    malformed: usize,
    line_no: usize,
}

impl<'a> FeedbackLoop<'a> {
    pub fn new(
        model: &'a PipelineModel,
        pool: &'a KnowledgePool,
        kind: ClassifierKind,
        session_id: Option<SessionId>,
        age: u32,
        cadence: usize,
    ) -> Self {
        Self {
            model,
            pool,
            kind,
            session_id,
            cadence: cadence.max(1),
            folder: FootprintFolder::new(age),
            since_eval: 0,
            last: None,
            malformed: 0,
            line_no: 0,
        }
    }

    /// Events skipped because they failed to decode or broke start/end nesting.
    pub fn malformed(&self) -> usize {
        self.malformed
    }

    pub fn latest(&self) -> Option<&FeedbackBundle> {
        self.last.as_ref()
    }

    pub fn push_line(&mut self, line: &str) -> Option<FeedbackBundle> {
        self.line_no += 1;
        if line.trim().is_empty() {
            return None;
        }
        match decode_event(line, self.line_no) {
            Ok(e) => self.push(&e),
            Err(_) => {
                self.malformed += 1;
                None
            }
        }
    }

    pub fn push(&mut self, event: &SessionEvent) -> Option<FeedbackBundle> {
        if !self.folder.accepts(event) {
            self.malformed += 1;
            return None;
        }
        self.folder.push(event);
        self.since_eval += 1;
        if self.since_eval >= self.cadence {
            self.evaluate()
        } else {
            None
        }
    }

    /// Evaluates pending events, or the zero footprint when nothing was ever evaluated.
    pub fn flush(&mut self) -> Option<FeedbackBundle> {
        if self.since_eval > 0 || self.last.is_none() {
            self.evaluate()
        } else {
            None
        }
    }

    fn evaluate(&mut self) -> Option<FeedbackBundle> {
        self.since_eval = 0;
        let footprint = self.folder.snapshot();
        let (t, confidence) = predict_type(self.model, &footprint, self.kind).ok()?;
        let bundle = make_bundle(self.pool, self.session_id.clone(), t, confidence);
        let changed = self
            .last
            .as_ref()
            .is_none_or(|prev| prev.predicted_type != bundle.predicted_type || prev.difficulty != bundle.difficulty);
        self.last = Some(bundle.clone());
        changed.then_some(bundle)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackRun {
    pub bundles: Vec<FeedbackBundle>,
    pub malformed: usize,
}

/// Runs a whole JSONL event log through a [`FeedbackLoop`].
pub fn feedback_loop<I, S>(
    model: &PipelineModel,
    pool: &KnowledgePool,
    kind: ClassifierKind,
    session_id: Option<SessionId>,
    age: u32,
    lines: I,
    cadence: usize,
) -> FeedbackRun
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut fl = FeedbackLoop::new(model, pool, kind, session_id, age, cadence);
    let mut bundles: Vec<FeedbackBundle> = lines.into_iter().filter_map(|l| fl.push_line(l.as_ref())).collect();
    bundles.extend(fl.flush());
    FeedbackRun { bundles, malformed: fl.malformed() }
}
