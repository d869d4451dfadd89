use std::fs;
use std::path::Path;
use std::sync::Arc;

use adk_core::geometry::{LabelSource, LabelStatus};
use adk_core::manifest::{DatasetManifest, ImageRecord, Split};
use adk_core::raster::Raster;
use adk_core::{Annotation, BBox};
use adk_review::{router, LabelSet, ReviewStore};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let images = ["a", "b", "c"]
        .iter()
        .map(|id| ImageRecord { id: id.to_string(), path: format!("images/{id}.png"), width: 64, height: 48, split: Split::Val })
        .collect();
    DatasetManifest::new(vec!["corn".into(), "weed".into()], images).unwrap().save(&dir.path().join("manifest.json")).unwrap();
    fs::create_dir_all(dir.path().join("images")).unwrap();
    Raster::filled(64, 48, 3, 10).save(&dir.path().join("images/a.png")).unwrap();
    let proposals: Vec<Annotation> = [(0, 1.0), (1, 20.0), (0, 40.0)]
        .iter()
        .map(|&(c, x)| Annotation::proposed(c, BBox::new(x, 5.0, x + 10.0, 15.0).unwrap()))
        .collect();
    fs::create_dir_all(dir.path().join("proposals")).unwrap();
    fs::write(dir.path().join("proposals/a.json"), serde_json::to_string(&proposals).unwrap()).unwrap();
    dir
}

fn app(root: &Path) -> Router {
    router(Arc::new(ReviewStore::open(root, None).unwrap()), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn labels(app: &Router, id: &str) -> LabelSet {
    let (s, v) = call_json(app, Method::GET, &format!("/api/labels/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    serde_json::from_value(v).unwrap()
}

#[tokio::test]
async fn manifest_image_and_progress() {
    let dir = dataset();
    let app = app(dir.path());
    let (s, v) = call_json(&app, Method::GET, "/api/manifest", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["classes"], json!(["corn", "weed"]));
    assert_eq!(v["images"].as_array().unwrap().len(), 3);
    assert_eq!(v["images"][0]["status"], "pending");

    let req = Request::get("/api/image/a").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[1..4], b"PNG");

    let (s, v) = call_json(&app, Method::GET, "/api/progress", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"total": 3, "completed": 0, "in_progress": 0, "pending": 3}));

    let (s, body) = call(&app, Method::GET, "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/"));
}

#[tokio::test]
async fn unmodified_put_bumps_revision() {
    let dir = dataset();
    let app = app(dir.path());
    let before = labels(&app, "a").await;
    assert_eq!(before.revision, 0);
    assert_eq!(before.annotations.len(), 3);
    let (s, v) = call_json(&app, Method::PUT, "/api/labels/a", Some(serde_json::to_value(&before).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], 1);
    let after = labels(&app, "a").await;
    assert_eq!(after.annotations, before.annotations);
    assert_eq!(after.revision, 1);
}

#[tokio::test]
async fn review_round_trip() {
    let dir = dataset();
    let app = app(dir.path());
    let mut set = labels(&app, "a").await;
    let mut saves = 0;
    for (i, status) in [(0, LabelStatus::Accepted), (1, LabelStatus::Accepted), (2, LabelStatus::Rejected)] {
        set.annotations[i].transition(status).unwrap();
        let (s, v) = call_json(&app, Method::PUT, "/api/labels/a", Some(serde_json::to_value(&set).unwrap())).await;
        assert_eq!(s, StatusCode::OK);
        set = serde_json::from_value(v).unwrap();
        saves += 1;
    }
    set.annotations.push(Annotation::human(1, BBox::new(2.0, 30.0, 12.0, 40.0).unwrap()));
    let (s, _) = call_json(&app, Method::PUT, "/api/labels/a", Some(serde_json::to_value(&set).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    saves += 1;

    let got = labels(&app, "a").await;
    assert_eq!(got.revision, saves);
    let count = |st: LabelStatus, src: LabelSource| got.annotations.iter().filter(|a| a.status == st && a.source == src).count();
    assert_eq!(count(LabelStatus::Accepted, LabelSource::Model), 2);
    assert_eq!(count(LabelStatus::Rejected, LabelSource::Model), 1);
    assert_eq!(count(LabelStatus::Accepted, LabelSource::Human), 1);

    // the label file carries the three active boxes and not the rejected one
    let text = fs::read_to_string(dir.path().join("labels/a.txt")).unwrap();
    assert_eq!(text.lines().count(), 3);

    let (s, v) = call_json(&app, Method::POST, "/api/labels/a/complete", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "completed");
    let (_, v) = call_json(&app, Method::GET, "/api/progress", None).await;
    assert_eq!(v, json!({"total": 3, "completed": 1, "in_progress": 0, "pending": 2}));
}

#[tokio::test]
async fn stale_revision_conflicts() {
    let dir = dataset();
    let app = app(dir.path());
    let base = labels(&app, "a").await;
    let mut first = base.clone();
    first.annotations.truncate(1);
    let mut second = base.clone();
    second.annotations.truncate(2);

    let (a, b) = tokio::join!(
        call_json(&app, Method::PUT, "/api/labels/a", Some(serde_json::to_value(&first).unwrap())),
        call_json(&app, Method::PUT, "/api/labels/a", Some(serde_json::to_value(&second).unwrap())),
    );
    let statuses = [a.0, b.0];
    assert!(statuses.contains(&StatusCode::OK) && statuses.contains(&StatusCode::CONFLICT), "{statuses:?}");
    let (winner, loser) = if a.0 == StatusCode::OK { (&first, b) } else { (&second, a) };
    assert_eq!(loser.1["revision"], 1);

    let stored = labels(&app, "a").await;
    assert_eq!(stored.annotations, winner.annotations);
    let restarted = labels(&self::app(dir.path()), "a").await;
    assert_eq!(restarted, stored);
}

#[tokio::test]
async fn many_concurrent_writers_one_winner_each_round() {
    let dir = dataset();
    let app = app(dir.path());
    for round in 0..5u64 {
        let base = labels(&app, "b").await;
        assert_eq!(base.revision, round);
        let tasks: Vec<_> = (0..8)
            .map(|i| {
                let app = app.clone();
                let mut set = base.clone();
                set.annotations = vec![Annotation::human(0, BBox::new(i as f64, 0.0, i as f64 + 5.0, 5.0).unwrap())];
                tokio::spawn(async move { call_json(&app, Method::PUT, "/api/labels/b", Some(serde_json::to_value(&set).unwrap())).await.0 })
            })
            .collect();
        let mut ok = 0;
        for t in tasks {
            match t.await.unwrap() {
                StatusCode::OK => ok += 1,
                StatusCode::CONFLICT => {}
                other => panic!("unexpected {other}"),
            }
        }
        assert_eq!(ok, 1);
    }
}

#[tokio::test]
async fn writes_survive_restart() {
    let dir = dataset();
    {
        let app = app(dir.path());
        let set = LabelSet { revision: 0, annotations: vec![Annotation::human(1, BBox::new(1.5, 2.0, 30.0, 40.0).unwrap())] };
        let (s, _) = call_json(&app, Method::PUT, "/api/labels/c", Some(serde_json::to_value(&set).unwrap())).await;
        assert_eq!(s, StatusCode::OK);
        let (s, _) = call_json(&app, Method::POST, "/api/labels/b/complete", None).await;
        assert_eq!(s, StatusCode::OK);
    }
    let app = app(dir.path());
    let got = labels(&app, "c").await;
    assert_eq!(got.revision, 1);
    assert_eq!(got.annotations[0].bbox, BBox::new(1.5, 2.0, 30.0, 40.0).unwrap());
    let (_, v) = call_json(&app, Method::GET, "/api/manifest", None).await;
    assert_eq!(v["images"][1]["status"], "completed");
    assert_eq!(v["images"][2]["status"], "in_progress");
}

#[tokio::test]
async fn error_statuses() {
    let dir = dataset();
    let app = app(dir.path());
    assert_eq!(call(&app, Method::GET, "/api/labels/zzz", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::GET, "/api/image/zzz", None).await.0, StatusCode::NOT_FOUND);
    // listed in the manifest but the file is missing
    assert_eq!(call(&app, Method::GET, "/api/image/b", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::POST, "/api/labels/zzz/complete", None).await.0, StatusCode::NOT_FOUND);
    let empty = json!({"revision": 0, "annotations": []});
    assert_eq!(call(&app, Method::PUT, "/api/labels/zzz", Some(empty)).await.0, StatusCode::NOT_FOUND);

    let req = Request::put("/api/labels/a").body(Body::from("{not json")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
    let missing_field = json!({"annotations": []});
    assert_eq!(call(&app, Method::PUT, "/api/labels/a", Some(missing_field)).await.0, StatusCode::BAD_REQUEST);
    let bad_box = json!({"revision": 0, "annotations": [
        {"class_id": 0, "x1": 10.0, "y1": 0.0, "x2": 5.0, "y2": 4.0, "status": "accepted", "source": "human"}
    ]});
    assert_eq!(call(&app, Method::PUT, "/api/labels/a", Some(bad_box)).await.0, StatusCode::BAD_REQUEST);
    let stale = json!({"revision": 7, "annotations": []});
    assert_eq!(call(&app, Method::PUT, "/api/labels/a", Some(stale)).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn serves_ui_bundle_when_given() {
    let dir = dataset();
    let ui = tempfile::tempdir().unwrap();
    fs::write(ui.path().join("index.html"), "<html>review</html>").unwrap();
    let app = router(Arc::new(ReviewStore::open(dir.path(), None).unwrap()), Some(ui.path().to_path_buf()));
    let (s, body) = call(&app, Method::GET, "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, b"<html>review</html>");
    assert_eq!(call(&app, Method::GET, "/api/progress", None).await.0, StatusCode::OK);
}
