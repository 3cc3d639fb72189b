use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use silverqa_core::gold::{AnnotationTask, GoldRecord, TaskParagraph, TaskStatus};
use silverqa_goldserve::{router, AppState, GoldStore};
use tower::ServiceExt;

fn task(id: &str, p: usize) -> AnnotationTask {
    AnnotationTask {
        task_id: id.into(),
        qa_id: id.into(),
        language: "sw".into(),
        title: "Kichwa".into(),
        question: "Kwa nini?".into(),
        paragraphs: (0..p).map(|i| TaskParagraph { index: i, text: format!("aya {i}") }).collect(),
        status: TaskStatus::Open,
    }
}

fn setup(n: usize, static_dir: Option<std::path::PathBuf>) -> (tempfile::TempDir, axum::Router) {
    let dir = tempfile::tempdir().unwrap();
    let tasks: Vec<_> = (0..n).map(|i| task(&format!("q{i}"), 4)).collect();
    GoldStore::create(dir.path(), &tasks).unwrap();
    let store = GoldStore::open(dir.path(), 2).unwrap();
    (dir, router(AppState::new(store), static_dir))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

fn selections(annotator: &str, p: &[usize]) -> Value {
    json!({ "annotator_id": annotator, "verdict": { "kind": "selections", "paragraphs": p } })
}

#[tokio::test]
async fn queue_submit_and_export() {
    let (dir, app) = setup(3, None);
    let (s, v) = call(&app, "GET", "/api/tasks?annotator=ann1&limit=2", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["tasks"].as_array().unwrap().len(), 2);
    assert_eq!(v["remaining"], 3);
    assert!(v["tasks"][0].get("silver_ids").is_none());

    let (s, v) = call(&app, "POST", "/api/task/q0/response", Some(selections("ann1", &[1, 2]))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["status"], "open");
    let (s, v) = call(&app, "POST", "/api/task/q0/response", Some(selections("ann2", &[2, 3]))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "done");

    let (_, v) = call(&app, "GET", "/api/tasks?annotator=ann3", None).await;
    assert_eq!(v["remaining"], 2);

    let (s, v) = call(&app, "GET", "/api/export/gold", None).await;
    assert_eq!(s, StatusCode::OK);
    let gold: Vec<GoldRecord> = serde_json::from_value(v).unwrap();
    let q0 = gold.iter().find(|g| g.qa_id == "q0").unwrap();
    assert_eq!(q0.gold_ids, [1, 2, 3].into());
    assert!(GoldStore::gold_path(dir.path()).exists());
}

#[tokio::test]
async fn errors_are_json_with_codes() {
    let (_dir, app) = setup(1, None);
    let (s, v) = call(&app, "GET", "/api/task/missing", None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));

    let (s, v) = call(&app, "POST", "/api/task/q0/response", Some(selections("a", &[7]))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid")));

    let (s, v) = call(&app, "POST", "/api/task/q0/response", Some(json!({"annotator_id": "a"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));

    let (s, _) = call(&app, "GET", "/api/tasks", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "GET", "/api/tasks?annotator=a&limit=x", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "GET", "/api/nothing/here", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/api/iaa?a=x&b=y", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn nota_and_agreement() {
    let (_dir, app) = setup(2, None);
    for q in ["q0", "q1"] {
        for a in ["a", "b"] {
            call(&app, "POST", &format!("/api/task/{q}/response"), Some(selections(a, &[0, 1]))).await;
        }
    }
    let (s, v) = call(&app, "GET", "/api/iaa?a=a&b=b", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["kappa"], 1.0);
    assert_eq!(v["common_tasks"], 2);

    let nota = json!({ "annotator_id": "c", "verdict": { "kind": "nota" } });
    let (s, _) = call(&app, "POST", "/api/task/q0/response", Some(nota)).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn static_files_served_beside_api() {
    let web = tempfile::tempdir().unwrap();
    std::fs::write(web.path().join("index.html"), "<h1>annotate</h1>").unwrap();
    let (_dir, app) = setup(1, Some(web.path().to_path_buf()));
    let (s, v) = call(&app, "GET", "/index.html", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, Value::String("<h1>annotate</h1>".into()));
    let (s, _) = call(&app, "GET", "/api/task/q0", None).await;
    assert_eq!(s, StatusCode::OK);
}

#[test]
fn real_socket_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    GoldStore::create(dir.path(), &[task("q0", 3)]).unwrap();
    let state = AppState::new(GoldStore::open(dir.path(), 2).unwrap());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(silverqa_goldserve::serve(
            "127.0.0.1:0".parse().unwrap(),
            state,
            None,
            move |addr| tx.send(addr).unwrap(),
        ))
        .unwrap();
    });
    let addr = rx.recv().unwrap();
    let text = ureq::get(&format!("http://{addr}/api/task/q0"))
        .call()
        .unwrap()
        .body_mut()
        .read_to_string()
        .unwrap();
    let body: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(body["paragraphs"].as_array().unwrap().len(), 3);
    let resp = ureq::post(&format!("http://{addr}/api/task/q0/response"))
        .header("content-type", "application/json")
        .send(selections("a", &[2]).to_string())
        .unwrap();
    assert_eq!(resp.status(), 200);
    let log = std::fs::read_to_string(GoldStore::responses_path(dir.path())).unwrap();
    assert_eq!(log.lines().count(), 1);
}
