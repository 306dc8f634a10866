use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use dcalm::dataset::{Corpus, HumanOracle};
use dcalm::harness::CorpusSource;
use dcalm::learner::TrainConfig;
use dcalm::metrics::DistributionReport;
use dcalm::strategies::{ActiveLearningRun, RoundRecord, StrategyConfig, StrategyKind};
use dcalm::InstanceId;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::ServiceError;

type Result<T, E = ServiceError> = std::result::Result<T, E>;

/// Experiment description of one annotation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub corpus: CorpusSource,
    #[serde(default)]
    pub learner: TrainConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingLabels,
    Training,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingItem {
    pub id: InstanceId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: Uuid,
    pub pending: Vec<PendingItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<Vec<PendingItem>>,
    pub report: DistributionReport,
    pub dev_macro_f1: Option<f64>,
    pub dev_error_counts: BTreeMap<String, u64>,
}

/// Dev-side summary of a finished round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub labeled_count: usize,
    pub label_counts: BTreeMap<String, u64>,
    pub dev_macro_f1: Option<f64>,
    pub dev_accuracy: Option<f64>,
    pub dev_error_counts: BTreeMap<String, u64>,
}

/// Test-set results, released once the session is finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub macro_f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub error_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: Uuid,
    pub state: SessionState,
    pub strategy: StrategyKind,
    pub budget: usize,
    pub batch_size: usize,
    pub labeled: usize,
    pub class_names: Vec<String>,
    pub pending: Vec<PendingItem>,
    pub rounds: Vec<RoundSummary>,
    pub report: Option<DistributionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created {
        session_id: Uuid,
        config: Box<SessionConfig>,
    },
    /// Keyed by the decimal instance id.
    LabelsSubmitted {
        labels: BTreeMap<String, String>,
    },
}

struct Session {
    id: Uuid,
    run: Mutex<ActiveLearningRun>,
    snapshot: RwLock<SessionSnapshot>,
    log: Option<Mutex<File>>,
    log_path: Option<PathBuf>,
}

fn named(names: &[String], values: &[u64]) -> BTreeMap<String, u64> {
    names.iter().cloned().zip(values.iter().copied()).collect()
}

impl Session {
    fn start(id: Uuid, config: &SessionConfig) -> Result<Session> {
        let corpus = config.corpus.load().map_err(ServiceError::InvalidConfig)?;
        corpus.require_pool_text().map_err(ServiceError::InvalidConfig)?;
        let mut run = ActiveLearningRun::new(Arc::new(corpus), config.strategy.clone(), config.learner.clone())
            .map_err(ServiceError::InvalidConfig)?;
        run.plan().map_err(ServiceError::InvalidConfig)?;
        let snapshot = snapshot_of(id, &run);
        Ok(Session {
            id,
            run: Mutex::new(run),
            snapshot: RwLock::new(snapshot),
            log: None,
            log_path: None,
        })
    }

    fn snapshot(&self) -> SessionSnapshot {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn append(&self, event: &Event) -> Result<()> {
        let (Some(log), Some(path)) = (&self.log, &self.log_path) else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(event).map_err(|e| log_error(path, e))?;
        line.push(b'\n');
        let mut file = log.lock().expect("log lock");
        file.write_all(&line).map_err(|e| log_error(path, e))?;
        file.sync_data().map_err(|e| log_error(path, e))
    }

    /// Validates a full answer to the pending batch, then labels, retrains and
    /// plans the next batch. Nothing changes unless every check passes.
    fn submit(&self, answers: &BTreeMap<String, String>, persist: bool) -> Result<SubmitResponse> {
        let mut run = self.run.lock().expect("run lock");
        let labels = validate(self.id, &run, answers)?;
        let corpus = Arc::clone(run.corpus());
        let mut oracle = HumanOracle::new(
            labels
                .iter()
                .map(|(&id, name)| (id, corpus.class_index(name).expect("validated class")))
                .collect::<HashMap<_, _>>(),
        );
        self.snapshot.write().expect("snapshot lock").state = SessionState::Training;
        let outcome = run.commit(&mut oracle).map(|_| ()).and_then(|_| run.plan().map(|_| ()));
        *self.snapshot.write().expect("snapshot lock") = snapshot_of(self.id, &run);
        outcome?;
        if persist {
            let labels = labels.into_iter().map(|(id, c)| (id.to_string(), c)).collect();
            self.append(&Event::LabelsSubmitted { labels })?;
        }
        let snapshot = self.snapshot();
        let last = run.log().last().expect("a round was just committed");
        let names = corpus.class_names();
        Ok(SubmitResponse {
            state: snapshot.state,
            pending: (snapshot.state == SessionState::AwaitingLabels).then_some(snapshot.pending),
            report: snapshot.report.expect("a round was just committed"),
            dev_macro_f1: last.dev_macro_f1,
            dev_error_counts: named(names, &last.dev_error_counts),
        })
    }
}

fn validate(
    session: Uuid,
    run: &ActiveLearningRun,
    answers: &BTreeMap<String, String>,
) -> Result<BTreeMap<InstanceId, String>> {
    let Some(plan) = run.pending() else {
        return Err(ServiceError::NothingPending(session));
    };
    let pending: BTreeSet<InstanceId> = plan.ids().into_iter().collect();
    let mut labels = BTreeMap::new();
    let mut unknown = Vec::new();
    for (key, class) in answers {
        match key.trim().parse::<InstanceId>() {
            Ok(id) if pending.contains(&id) => {
                labels.insert(id, class.clone());
            }
            _ => unknown.push(key.clone()),
        }
    }
    if !unknown.is_empty() {
        return Err(ServiceError::UnknownIds(unknown));
    }
    let missing: Vec<InstanceId> = pending.iter().filter(|id| !labels.contains_key(id)).copied().collect();
    if !missing.is_empty() {
        return Err(ServiceError::Partial(missing));
    }
    for (&id, class) in &labels {
        if run.corpus().class_index(class).is_none() {
            return Err(ServiceError::InvalidClass {
                id,
                class: class.clone(),
            });
        }
    }
    Ok(labels)
}

fn pending_items(corpus: &Corpus, ids: &[InstanceId]) -> Vec<PendingItem> {
    ids.iter()
        .map(|&id| PendingItem {
            id,
            text: corpus
                .get(id)
                .and_then(|i| i.text.clone())
                .unwrap_or_default(),
        })
        .collect()
}

fn round_summary(names: &[String], r: &RoundRecord) -> RoundSummary {
    RoundSummary {
        round: r.round,
        labeled_count: r.labeled_count,
        label_counts: named(names, &r.label_counts),
        dev_macro_f1: r.dev_macro_f1,
        dev_accuracy: r.dev_accuracy,
        dev_error_counts: named(names, &r.dev_error_counts),
    }
}

fn snapshot_of(id: Uuid, run: &ActiveLearningRun) -> SessionSnapshot {
    let corpus = run.corpus();
    let names = corpus.class_names();
    let finished = run.is_finished();
    let state = if finished {
        SessionState::Finished
    } else {
        SessionState::AwaitingLabels
    };
    let pending = run
        .pending()
        .map(|p| pending_items(corpus, &p.ids()))
        .unwrap_or_default();
    let test = finished.then(|| run.log().last()).flatten().map(|last| TestSummary {
        macro_f1: last.test_macro_f1,
        accuracy: last.test_accuracy,
        error_counts: named(names, &last.test_error_counts),
    });
    SessionSnapshot {
        session_id: id,
        state,
        strategy: run.strategy().kind,
        budget: run.strategy().budget,
        batch_size: run.strategy().batch_size,
        labeled: run.labeling().labeled().len(),
        class_names: names.to_vec(),
        pending,
        rounds: run.log().rounds.iter().map(|r| round_summary(names, r)).collect(),
        report: run.report(!finished),
        test,
    }
}

fn log_error(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Log {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Registry of live sessions, optionally backed by an event-log directory.
pub struct SessionManager {
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
    state_dir: Option<PathBuf>,
}

impl SessionManager {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        SessionManager {
            sessions: RwLock::new(HashMap::new()),
            state_dir: None,
        }
    }

    /// Opens `state_dir`, replaying every `<session id>.jsonl` event log in it.
    ///
    /// A final line without a trailing newline is an interrupted write; it is
    /// dropped and the file truncated before new events are appended.
    pub fn open(state_dir: &Path) -> Result<Self> {
        fs::create_dir_all(state_dir).map_err(|e| log_error(state_dir, e))?;
        let manager = SessionManager {
            sessions: RwLock::new(HashMap::new()),
            state_dir: Some(state_dir.to_path_buf()),
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(state_dir)
            .map_err(|e| log_error(state_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let session = replay(&path)?;
            manager
                .sessions
                .write()
                .expect("sessions lock")
                .insert(session.id, Arc::new(session));
        }
        Ok(manager)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, id: &str) -> Result<Arc<Session>> {
        let uuid = Uuid::parse_str(id).map_err(|_| ServiceError::UnknownSession(id.to_string()))?;
        self.sessions
            .read()
            .expect("sessions lock")
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Starts a session and issues its bootstrap batch.
    pub fn create(&self, config: SessionConfig) -> Result<CreateResponse> {
        let id = Uuid::new_v4();
        let mut session = Session::start(id, &config)?;
        if let Some(dir) = &self.state_dir {
            let path = dir.join(format!("{id}.jsonl"));
            let file = OpenOptions::new()
                .create_new(true)
                .append(true)
                .open(&path)
                .map_err(|e| log_error(&path, e))?;
            session.log = Some(Mutex::new(file));
            session.log_path = Some(path);
            session.append(&Event::Created {
                session_id: id,
                config: Box::new(config),
            })?;
        }
        let pending = session.snapshot().pending;
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(id, Arc::new(session));
        Ok(CreateResponse {
            session_id: id,
            pending,
        })
    }

    /// Answers the pending batch of a session. Keys are instance ids, values
    /// class names; the keys must be exactly the pending ids.
    pub fn submit(&self, id: &str, answers: &BTreeMap<String, String>) -> Result<SubmitResponse> {
        self.get(id)?.submit(answers, true)
    }

    pub fn status(&self, id: &str) -> Result<SessionSnapshot> {
        Ok(self.get(id)?.snapshot())
    }

    /// Latest distribution report; test errors stay empty until the session finishes.
    pub fn report(&self, id: &str) -> Result<Option<DistributionReport>> {
        Ok(self.get(id)?.snapshot().report)
    }
}

fn replay(path: &Path) -> Result<Session> {
    let file = File::open(path).map_err(|e| log_error(path, e))?;
    let mut reader = BufReader::new(file);
    let mut events = Vec::new();
    let mut good_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| log_error(path, e))?;
        if read == 0 || !line.ends_with('\n') {
            break;
        }
        let event: Event = serde_json::from_str(&line)
            .map_err(|e| log_error(path, format!("line {}: {e}", events.len() + 1)))?;
        events.push(event);
        good_len += read as u64;
    }
    let mut events = events.into_iter();
    let Some(Event::Created { session_id, config }) = events.next() else {
        return Err(log_error(path, "log does not start with a created event"));
    };
    let mut session = Session::start(session_id, &config)?;
    for event in events {
        let Event::LabelsSubmitted { labels } = event else {
            return Err(log_error(path, "duplicate created event"));
        };
        session.submit(&labels, false)?;
    }
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| log_error(path, e))?;
    file.set_len(good_len).map_err(|e| log_error(path, e))?;
    session.log = Some(Mutex::new(file));
    session.log_path = Some(path.to_path_buf());
    Ok(session)
}
