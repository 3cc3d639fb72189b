use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use silverqa_core::gold::{
    cohen_kappa, common_selections, derive_all_gold, validate_response, AnnotationResponse,
    AnnotationTask, GoldRecord, KappaResult, TaskStatus, Verdict,
};
use silverqa_core::store::{append_jsonl, read_jsonl, write_jsonl};
use silverqa_core::Error;

/// Annotators who must answer a task before it is marked done.
pub const DEFAULT_ANNOTATORS_PER_TASK: usize = 2;
/// Tasks handed out per request.
pub const DEFAULT_BATCH: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Storage(#[from] Error),
}

/// Tasks plus the append-only response log of one annotation campaign.
///
/// ```text
/// <dir>/tasks.jsonl       one AnnotationTask per line
/// <dir>/responses.jsonl   every submission, in arrival order
/// <dir>/gold.jsonl        derived snapshot, rewritten on export
/// ```
#[derive(Debug)]
pub struct GoldStore {
    dir: PathBuf,
    annotators_per_task: usize,
    tasks: Vec<AnnotationTask>,
    index: HashMap<String, usize>,
    log: Vec<AnnotationResponse>,
    latest: BTreeMap<(String, String), AnnotationResponse>,
}

impl GoldStore {
    pub fn tasks_path(dir: &Path) -> PathBuf {
        dir.join("tasks.jsonl")
    }

    pub fn responses_path(dir: &Path) -> PathBuf {
        dir.join("responses.jsonl")
    }

    pub fn gold_path(dir: &Path) -> PathBuf {
        dir.join("gold.jsonl")
    }

    /// Writes a fresh task file. Existing responses are left alone.
    pub fn create(dir: &Path, tasks: &[AnnotationTask]) -> Result<(), StoreError> {
        let mut ids = BTreeSet::new();
        if let Some(t) = tasks.iter().find(|t| !ids.insert(t.task_id.as_str())) {
            return Err(StoreError::Invalid(format!("duplicate task id `{}`", t.task_id)));
        }
        write_jsonl(&Self::tasks_path(dir), tasks)?;
        Ok(())
    }

    pub fn open(dir: &Path, annotators_per_task: usize) -> Result<Self, StoreError> {
        if annotators_per_task == 0 {
            return Err(StoreError::Invalid("annotators_per_task must be at least 1".into()));
        }
        let mut store = Self {
            dir: dir.to_path_buf(),
            annotators_per_task,
            tasks: Vec::new(),
            index: HashMap::new(),
            log: Vec::new(),
            latest: BTreeMap::new(),
        };
        store.reload()?;
        Ok(store)
    }

    /// Re-reads tasks and the response log from disk.
    pub fn reload(&mut self) -> Result<(), StoreError> {
        let tasks: Vec<AnnotationTask> = read_jsonl(&Self::tasks_path(&self.dir))?;
        let responses_path = Self::responses_path(&self.dir);
        let log: Vec<AnnotationResponse> = if responses_path.exists() {
            read_jsonl(&responses_path)?
        } else {
            Vec::new()
        };
        self.index = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.task_id.clone(), i))
            .collect();
        self.latest = silverqa_core::gold::latest_responses(&log);
        self.tasks = tasks;
        self.log = log;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn annotators_per_task(&self) -> usize {
        self.annotators_per_task
    }

    fn respondents(&self, task_id: &str) -> usize {
        self.latest.keys().filter(|(t, _)| t == task_id).count()
    }

    pub fn status(&self, task_id: &str) -> TaskStatus {
        if self.respondents(task_id) >= self.annotators_per_task {
            TaskStatus::Done
        } else {
            TaskStatus::Open
        }
    }

    fn with_status(&self, t: &AnnotationTask) -> AnnotationTask {
        AnnotationTask {
            status: self.status(&t.task_id),
            ..t.clone()
        }
    }

    pub fn task(&self, task_id: &str) -> Result<AnnotationTask, StoreError> {
        self.index
            .get(task_id)
            .map(|&i| self.with_status(&self.tasks[i]))
            .ok_or_else(|| StoreError::NotFound(format!("no task `{task_id}`")))
    }

    pub fn tasks(&self) -> Vec<AnnotationTask> {
        self.tasks.iter().map(|t| self.with_status(t)).collect()
    }

    /// Up to `limit` open tasks the annotator has not answered yet, in task
    /// order, and how many such tasks exist in total.
    pub fn next_tasks(&self, annotator: &str, limit: usize) -> (Vec<AnnotationTask>, usize) {
        let pending: Vec<&AnnotationTask> = self
            .tasks
            .iter()
            .filter(|t| self.status(&t.task_id) == TaskStatus::Open)
            .filter(|t| {
                !self
                    .latest
                    .contains_key(&(t.task_id.clone(), annotator.to_string()))
            })
            .collect();
        let total = pending.len();
        (
            pending.into_iter().take(limit).map(|t| self.with_status(t)).collect(),
            total,
        )
    }

    /// Validates, appends to the log, then applies. A later submission by
    /// the same annotator replaces the earlier one.
    pub fn submit(
        &mut self,
        task_id: &str,
        annotator_id: &str,
        verdict: Verdict,
        submitted_at: DateTime<Utc>,
    ) -> Result<AnnotationResponse, StoreError> {
        let task = self.task(task_id)?;
        let resp = AnnotationResponse {
            task_id: task_id.to_string(),
            annotator_id: annotator_id.trim().to_string(),
            verdict,
            submitted_at,
        };
        validate_response(&task, &resp).map_err(|e| StoreError::Invalid(e.to_string()))?;
        append_jsonl(&Self::responses_path(&self.dir), &resp)?;
        self.latest.insert(
            (resp.task_id.clone(), resp.annotator_id.clone()),
            resp.clone(),
        );
        self.log.push(resp.clone());
        Ok(resp)
    }

    /// Every submission in arrival order, replaced ones included.
    pub fn log(&self) -> &[AnnotationResponse] {
        &self.log
    }

    pub fn latest(&self) -> &BTreeMap<(String, String), AnnotationResponse> {
        &self.latest
    }

    pub fn gold(&self) -> Vec<GoldRecord> {
        derive_all_gold(&self.tasks, &self.log)
    }

    pub fn write_gold_snapshot(&self) -> Result<Vec<GoldRecord>, StoreError> {
        let gold = self.gold();
        write_jsonl(&Self::gold_path(&self.dir), &gold)?;
        Ok(gold)
    }

    /// Kappa over the tasks both annotators answered.
    pub fn iaa(&self, a: &str, b: &str) -> Result<(KappaResult, usize), StoreError> {
        let (common, sa, sb) = common_selections(&self.latest, a, b);
        if common.is_empty() {
            return Err(StoreError::Invalid(format!(
                "annotators `{a}` and `{b}` share no answered task"
            )));
        }
        let tasks: Vec<AnnotationTask> = self
            .tasks
            .iter()
            .filter(|t| common.contains(&t.task_id))
            .cloned()
            .collect();
        let k = cohen_kappa(&sa, &sb, &tasks).map_err(|e| StoreError::Invalid(e.to_string()))?;
        Ok((k, tasks.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use silverqa_core::gold::TaskParagraph;

    fn task(id: &str, p: usize) -> AnnotationTask {
        AnnotationTask {
            task_id: id.into(),
            qa_id: id.into(),
            language: "hi".into(),
            title: "t".into(),
            question: "q?".into(),
            paragraphs: (0..p).map(|i| TaskParagraph { index: i, text: format!("p{i}") }).collect(),
            status: TaskStatus::Open,
        }
    }

    fn sel(v: &[usize]) -> Verdict {
        Verdict::Selections { paragraphs: v.iter().copied().collect() }
    }

    fn store(n: usize) -> (tempfile::TempDir, GoldStore) {
        let dir = tempfile::tempdir().unwrap();
        let tasks: Vec<_> = (0..n).map(|i| task(&format!("t{i}"), 4)).collect();
        GoldStore::create(dir.path(), &tasks).unwrap();
        let s = GoldStore::open(dir.path(), 2).unwrap();
        (dir, s)
    }

    #[test]
    fn submit_validate_and_complete() {
        let (_d, mut s) = store(2);
        let now = DateTime::UNIX_EPOCH;
        s.submit("t0", "a", sel(&[1, 2]), now).unwrap();
        assert!(matches!(s.submit("t0", "a", sel(&[9]), now), Err(StoreError::Invalid(_))));
        assert!(matches!(s.submit("nope", "a", sel(&[1]), now), Err(StoreError::NotFound(_))));
        assert_eq!(s.status("t0"), TaskStatus::Open);
        s.submit("t0", "b", Verdict::Nota, now).unwrap();
        assert_eq!(s.status("t0"), TaskStatus::Done);
        assert_eq!(s.log().len(), 2);
    }

    #[test]
    fn resubmission_replaces_and_survives_reload() {
        let (dir, mut s) = store(1);
        let now = DateTime::UNIX_EPOCH;
        s.submit("t0", "a", sel(&[1]), now).unwrap();
        s.submit("t0", "a", sel(&[1]), now).unwrap();
        s.submit("t0", "a", sel(&[3]), now).unwrap();
        assert_eq!(s.latest().len(), 1);
        let reopened = GoldStore::open(dir.path(), 2).unwrap();
        assert_eq!(reopened.log().len(), 3);
        assert_eq!(reopened.gold()[0].gold_ids, [3].into());
    }

    #[test]
    fn queue_skips_answered_and_done() {
        let (_d, mut s) = store(10);
        let now = DateTime::UNIX_EPOCH;
        let (first, total) = s.next_tasks("a", DEFAULT_BATCH);
        assert_eq!((first.len(), total), (8, 10));
        s.submit("t0", "a", sel(&[0]), now).unwrap();
        s.submit("t1", "b", sel(&[0]), now).unwrap();
        s.submit("t1", "c", sel(&[0]), now).unwrap();
        let (next, total) = s.next_tasks("a", 100);
        assert_eq!(total, 8);
        assert_eq!(next[0].task_id, "t2");
    }

    #[test]
    fn agreement_on_common_tasks() {
        let (_d, mut s) = store(3);
        let now = DateTime::UNIX_EPOCH;
        for t in ["t0", "t1"] {
            s.submit(t, "a", sel(&[0, 1]), now).unwrap();
            s.submit(t, "b", sel(&[0, 1]), now).unwrap();
        }
        s.submit("t2", "a", sel(&[3]), now).unwrap();
        let (k, n) = s.iaa("a", "b").unwrap();
        assert_eq!(n, 2);
        assert_eq!(k.kappa, Some(1.0));
        assert!(s.iaa("a", "zed").is_err());
    }

    #[test]
    fn duplicate_task_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(GoldStore::create(dir.path(), &[task("x", 1), task("x", 2)]).is_err());
    }
}
