use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bizvor::api::{router, Store};
use bizvor_core::network::PartnerId;
use bizvor_core::scenario::{build_case, CaseParams, Scenario};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn scenario() -> Scenario {
    build_case(&CaseParams {
        count: 80,
        regions: 3,
        seed: 12,
        ..CaseParams::default()
    })
    .unwrap()
}

fn app() -> Router {
    router(Store::new().with("case", scenario(), None))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, if_match: Option<u64>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    if let Some(rev) = if_match {
        req = req.header("if-match", rev.to_string());
    }
    let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn call_raw(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body.to_string())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn hash(app: &Router) -> String {
    call(app, "GET", "/scenarios/case/hash", None, None).await.1["hash"].as_str().unwrap().to_string()
}

async fn members(app: &Router) -> Vec<PartnerId> {
    let (_, map) = call(app, "GET", "/scenarios/case/map", None, None).await;
    let anchor = map["anchor"].as_u64();
    map["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["partner"].as_u64().unwrap())
        .filter(|&id| Some(id) != anchor)
        .collect()
}

#[tokio::test]
async fn lists_and_maps() {
    let app = app();
    let (status, list) = call(&app, "GET", "/scenarios", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list[0]["id"], "case");
    let (status, map) = call(&app, "GET", "/scenarios/case/map", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(map["cells"].as_array().unwrap().len() as u64, list[0]["partners"].as_u64().unwrap());
    assert!(map["forces"].is_array() && map["consistence"].is_array());
    assert_eq!(map["revision"], 0);
    let (status, err) = call(&app, "GET", "/scenarios/nope/map", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "not_found");
}

#[tokio::test]
async fn step_advances_one_tick() {
    let app = app();
    let (status, body) = call(&app, "POST", "/scenarios/case/step", Some(json!({ "ticks": 1 })), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tick"], 1);
    assert_eq!(body["revision"], 1);
    let events = body["events"].as_array().unwrap();
    assert!(!events.is_empty());
    assert_eq!(events.last().unwrap()["event"]["kind"], "advanced");
    let (_, map) = call(&app, "GET", "/scenarios/case/map", None, None).await;
    assert_eq!(map["tick"], 1);
}

#[tokio::test]
async fn invalid_bodies_name_the_field() {
    let app = app();
    let (status, err) = call_raw(&app, "POST", "/scenarios/case/step", r#"{"ticks": "many"}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["path"], "ticks");
    let (status, err) = call(&app, "POST", "/scenarios/case/step", Some(json!({ "ticks": 0 })), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["path"], "ticks");
    let id = members(&app).await[0];
    let uri = format!("/scenarios/case/partners/{id}/move");
    for body in [r#"{"x": 1e999, "y": 0}"#, r#"{"x": 0, "y": "NaN"}"#] {
        let (status, err) = call_raw(&app, "POST", &uri, body).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert!(err["path"] == "x" || err["path"] == "y", "{err}");
    }
    let (status, _) = call(&app, "POST", "/scenarios/case/partners/999999/move", Some(json!({ "x": 1.0, "y": 1.0 })), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn partner_lifecycle_is_logged() {
    let app = app();
    let body = json!({ "region": "R01", "goals": ["goal-00"], "footprint": { "skills": 0.7 }, "x": 13.25, "y": -41.5 });
    let (status, added) = call(&app, "POST", "/scenarios/case/partners", Some(body), None).await;
    assert_eq!(status, StatusCode::CREATED);
    let pid = added["partner"].as_u64().unwrap();
    let (status, moved) = call(&app, "POST", &format!("/scenarios/case/partners/{pid}/move"), Some(json!({ "x": 20.0, "y": -40.0 })), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(moved["trace"]["steps"].is_array());
    let (status, removed) = call(&app, "DELETE", &format!("/scenarios/case/partners/{pid}"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "DELETE", &format!("/scenarios/case/partners/{pid}"), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let seqs = [&added, &moved, &removed].map(|v| v["seq"].as_u64().unwrap());
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    let (_, log) = call(&app, "GET", "/scenarios/case/events", None, None).await;
    let kinds: Vec<&str> = log.as_array().unwrap().iter().map(|e| e["event"]["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["partner_added", "partner_moved", "partner_removed"]);

    let (_, map) = call(&app, "GET", "/scenarios/case/map", None, None).await;
    let anchor = map["anchor"].as_u64().unwrap();
    let (status, _) = call(&app, "DELETE", &format!("/scenarios/case/partners/{anchor}"), None, None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn replacing_tables_recomputes_forces() {
    let app = app();
    let table = json!({ "rows": [{ "name": "common ends", "predicate": { "kind": "shared_goals", "min": 1 }, "weight": 2.0 }] });
    let (status, body) = call(&app, "PUT", "/scenarios/case/tables", Some(table), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let forces = body["forces"].as_array().unwrap();
    assert!(!forces.is_empty());
    assert!(forces.iter().all(|f| f["force"] == 0.0 || f["force"] == 2.0));
    let (status, err) = call_raw(&app, "PUT", "/scenarios/case/tables", r#"{"rows": [{"name": "x", "predicate": {"kind": "bogus"}, "weight": 1}]}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(err["path"].as_str().unwrap().starts_with("rows[0]"), "{err}");
}

#[tokio::test]
async fn whatif_projects_then_commits() {
    let app = app();
    let before = hash(&app).await;
    let id = members(&app).await[0];
    let (status, proj) = call(&app, "POST", "/scenarios/case/whatif", Some(json!({ "action": "sever", "partner": id })), None).await;
    assert_eq!(status, StatusCode::OK, "{proj}");
    assert!(proj["projection"]["fulfillment_delta"].as_f64().unwrap() <= 0.0);
    let (status, _) = call(&app, "POST", "/scenarios/case/whatif", Some(json!({ "action": "entrust", "partner": id })), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(hash(&app).await, before);

    let token = proj["token"].as_str().unwrap();
    let (status, _) = call(&app, "DELETE", &format!("/scenarios/case/whatif/{token}"), None, None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(hash(&app).await, before);
    let (status, _) = call(&app, "POST", "/scenarios/case/commit", Some(json!({ "token": token })), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, proj) = call(&app, "POST", "/scenarios/case/whatif", Some(json!({ "action": "sever", "partner": id })), None).await;
    let token = proj["token"].as_str().unwrap().to_string();
    let (status, body) = call(&app, "POST", "/scenarios/case/commit", Some(json!({ "token": token })), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_ne!(hash(&app).await, before);
    let (_, kpis) = call(&app, "GET", "/scenarios/case/kpis", None, None).await;
    let after = proj["projection"]["after"]["fulfillment_rate"].as_f64().unwrap();
    assert_eq!(kpis["kpis"]["fulfillment_rate"].as_f64().unwrap(), after);

    let (status, _) = call(&app, "POST", "/scenarios/case/whatif", Some(json!({ "action": "sever", "partner": 999_999 })), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stale_tokens_and_revisions_conflict() {
    let app = app();
    let id = members(&app).await[1];
    let (_, proj) = call(&app, "POST", "/scenarios/case/whatif", Some(json!({ "action": "sever", "partner": id })), None).await;
    call(&app, "POST", "/scenarios/case/step", Some(json!({ "ticks": 1 })), Some(0)).await;
    let (status, _) = call(&app, "POST", "/scenarios/case/commit", Some(json!({ "token": proj["token"] })), None).await;
    assert!(status == StatusCode::NOT_FOUND || status == StatusCode::CONFLICT);
    let (status, err) = call(&app, "POST", "/scenarios/case/step", Some(json!({ "ticks": 1 })), Some(0)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "conflict");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conflicting_mutations() {
    let app = app();
    let ids = members(&app).await;
    let moves = ids.iter().take(2).enumerate().map(|(i, &id)| {
        let app = app.clone();
        tokio::spawn(async move {
            let uri = format!("/scenarios/case/partners/{id}/move");
            call(&app, "POST", &uri, Some(json!({ "x": 5.0 + i as f64, "y": 7.0 })), Some(0)).await.0
        })
    });
    let mut statuses = Vec::new();
    for h in moves.collect::<Vec<_>>() {
        statuses.push(h.await.unwrap());
    }
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    let (_, log) = call(&app, "GET", "/scenarios/case/events", None, None).await;
    assert_eq!(log.as_array().unwrap().len(), 1);
}

#[test]
fn store_writes_back_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.json");
    let s = scenario();
    bizvor_core::scenario::save_scenario(&s, &path).unwrap();
    let store = Store::new().with("case", s, Some(path.clone()));
    let app = router(store.clone());
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (status, _) = rt.block_on(call(&app, "POST", "/scenarios/case/step", Some(json!({ "ticks": 2 })), None));
    assert_eq!(status, StatusCode::OK);
    let saved = bizvor_core::scenario::load_scenario(&path).unwrap();
    let (live, revision) = store.snapshot("case").unwrap();
    assert_eq!(saved, live);
    assert_eq!((saved.tick, revision), (2, 1));
}
