mod common;

use std::collections::HashSet;
use std::sync::Arc;

use common::TestService;
use reqwest::StatusCode;
use serde_json::Value;
use termrec_core::engine::ModelSnapshot;
use termrec_fixture::FixtureServer;

async fn built(language: &str) -> (FixtureServer, tempfile::TempDir, TestService, String, String) {
    let fixture = FixtureServer::with_default_records().await;
    let dir = tempfile::tempdir().unwrap();
    let svc = TestService::start(&dir.path().join("s.db")).await;
    let key = svc.create_account("prov").await;
    let repo = svc.register_repository(&key, &fixture.url(), language).await;
    assert_eq!(svc.run_job(&key, &repo, "full").await["state"], "done");
    (fixture, dir, svc, key, repo)
}

#[tokio::test(flavor = "multi_thread")]
async fn recommend_xml_and_json() {
    let (_f, _d, svc, key, repo) = built("de").await;
    let (status, xml) = svc.get_xml(&key, &format!("/repositories/{repo}/recommend?term=Geld&limit=10")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(xml.starts_with(r#"<recommendations term="geld" metric="jaccard" snapshot=""#), "{xml}");
    assert!(xml.contains("<recommendation><name>Geldpolitik</name><confidence>0.75</confidence><vocabulary>harvested-subjects</vocabulary></recommendation>"), "{xml}");

    let (status, json) = svc.get_json(&key, &format!("/repositories/{repo}/recommend?term=Geld&limit=10")).await;
    assert_eq!(status, StatusCode::OK);
    let recs = json["recommendations"].as_array().unwrap();
    assert!(!recs.is_empty() && recs.len() <= 10);
    assert_eq!(recs[0]["name"], "Geldpolitik");
    assert_eq!(xml.matches("<recommendation>").count(), recs.len());

    let (_, nwd) = svc.get_json(&key, &format!("/repositories/{repo}/recommend?term=Geld&metric=nwd")).await;
    assert_eq!(nwd["metric"], "nwd");
    let (status, _) = svc.get_json(&key, &format!("/repositories/{repo}/recommend?term=Geld&metric=learned")).await;
    assert_eq!(status, StatusCode::NOT_IMPLEMENTED);
    let (status, _) = svc.get_json(&key, &format!("/repositories/{repo}/recommend?term=Geld&metric=cosine")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    svc.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn error_statuses() {
    let (f, _d, svc, key, repo) = built("en").await;
    let rec = |q: &str| format!("/repositories/{repo}/recommend?{q}");

    let (status, body) = svc.get_xml("0123456789", &rec("term=youth")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(body, r#"<error status="401">invalid API key</error>"#);

    let (status, body) = svc.get_json(&key, &rec("term=the%20of%20and")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(svc.get_json(&key, &rec("")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(svc.get_json(&key, &rec("term=youth&limit=101")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(svc.get_json(&key, &rec("term=youth&limit=0")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(svc.get_json(&key, &rec("term=youth&limit=x")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(svc.get_json(&key, &rec("term=youth&limit=100")).await.0, StatusCode::OK);

    // unknown-only query: valid, just nothing to say
    let (status, body) = svc.get_json(&key, &rec("term=zzzzqx")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["recommendations"], Value::Array(vec![]));

    let unbuilt = svc.register_repository(&key, &f.url(), "en").await;
    let (status, body) = svc.get_json(&key, &format!("/repositories/{unbuilt}/recommend?term=youth")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "model not built");

    let other = svc.create_account("other").await;
    assert_eq!(svc.get_json(&other, &rec("term=youth")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(svc.get_json(&key, "/repositories/nope/recommend?term=youth").await.0, StatusCode::NOT_FOUND);
    svc.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn expand_cloud_and_biblio() {
    let (_f, _d, svc, key, repo) = built("en").await;
    let p = |s: &str| format!("/repositories/{repo}/{s}");

    let (_, rec) = svc.get_json(&key, &p("recommend?term=youth%20unemployment&limit=5")).await;
    let (status, exp) = svc.get_json(&key, &p("expand?term=youth%20unemployment")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(exp["original"], serde_json::json!(["youth", "unemployment"]));
    let names: Vec<&Value> = rec["recommendations"].as_array().unwrap().iter().map(|r| &r["name"]).collect();
    let added: Vec<&Value> = exp["added"].as_array().unwrap().iter().collect();
    assert_eq!(names, added);
    let (_, none) = svc.get_json(&key, &p("expand?term=youth%20unemployment&n=0")).await;
    assert_eq!(none["added"], Value::Array(vec![]));
    assert_eq!(svc.get_json(&key, &p("expand?term=youth&n=21")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, xml) = svc.get_xml(&key, &p("expand?term=youth&n=1")).await;
    assert!(xml.starts_with("<expansion "), "{xml}");

    let (status, cloud) = svc.get_json(&key, &p("cloud?term=unemployment&k=2")).await;
    assert_eq!(status, StatusCode::OK);
    let terms = cloud["terms"].as_array().unwrap();
    assert!(terms.len() <= 2 && !terms.is_empty());
    assert_eq!(terms[0]["weight"], 1.0);
    assert_eq!(terms[0]["bucket"], 5);
    assert_eq!(svc.get_json(&key, &p("cloud?term=unemployment&k=101")).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, top) = svc.get_json(&key, &p("biblio/top-terms")).await;
    let rows = top["terms"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.windows(2).all(|w| w[0]["df"].as_u64() >= w[1]["df"].as_u64()));
    assert_eq!(top["field"], "subject");
    let (_, free) = svc.get_json(&key, &p("biblio/top-terms?field=free&k=3")).await;
    assert_eq!(free["terms"].as_array().unwrap().len(), 3);
    assert_eq!(svc.get_json(&key, &p("biblio/top-terms?field=title")).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, coword) = svc.get_json(&key, &p("biblio/coword?k=4")).await;
    assert_eq!(coword["pairs"].as_array().unwrap().len(), 4);

    let (_, trend) = svc.get_json(&key, &p("biblio/trend?term=labour%20market%20policy")).await;
    let total: u64 = trend["buckets"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 3);
    let (_, xml) = svc.get_xml(&key, &p("biblio/trend?term=pension")).await;
    assert!(xml.contains(r#"excluded="1""#), "{xml}");
    svc.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn metric_preference_and_model_download() {
    let (_f, _d, svc, key, repo) = built("en").await;
    let r = svc
        .http
        .patch(svc.url(&format!("/repositories/{repo}")))
        .header("X-Api-Key", &key)
        .header("Accept", "application/json")
        .json(&serde_json::json!({"metric": "nwd"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let (_, rec) = svc.get_json(&key, &format!("/repositories/{repo}/recommend?term=youth")).await;
    assert_eq!(rec["metric"], "nwd");

    let r =
        svc.http.get(svc.url(&format!("/repositories/{repo}/model"))).header("X-Api-Key", &key).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let bytes = r.bytes().await.unwrap();
    let snap = ModelSnapshot::from_bytes(&bytes).unwrap();
    assert_eq!(snap.snapshot_id, rec["snapshot"].as_str().unwrap());
    assert_eq!(snap.to_bytes(), bytes.to_vec());
    svc.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn restart_keeps_everything() {
    let fixture = FixtureServer::with_default_records().await;
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.db");
    let svc = TestService::start(&store).await;
    let key = svc.create_account("prov").await;
    let repo = svc.register_repository(&key, &fixture.url(), "de").await;
    svc.run_job(&key, &repo, "full").await;
    let path = format!("/repositories/{repo}/recommend?term=Geld");
    let (_, before) = svc.get_xml(&key, &path).await;
    let (_, view_before) = svc.get_json(&key, &format!("/repositories/{repo}")).await;
    svc.stop().await;

    let svc = TestService::start(&store).await;
    let (status, after) = svc.get_xml(&key, &path).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    let (_, view_after) = svc.get_json(&key, &format!("/repositories/{repo}")).await;
    assert_eq!(view_before, view_after);
    // the username is still taken
    let r = svc
        .http
        .post(svc.url("/accounts"))
        .json(&serde_json::json!({"username": "prov", "password": "another long one", "email": "x@example.org"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);
    svc.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn readers_see_exactly_one_snapshot_during_publish() {
    let (_f, _d, svc, key, repo) = built("de").await;
    let svc = Arc::new(svc);
    let path = format!("/repositories/{repo}/recommend?term=Geld&limit=100");
    let (_, old) = svc.get_json(&key, &path).await;

    let (status, job) = svc.start_job(&key, &repo, "full").await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let mut tasks = Vec::new();
    for _ in 0..100 {
        let (svc, key, path) = (svc.clone(), key.clone(), path.clone());
        tasks.push(tokio::spawn(async move { svc.get_json(&key, &path).await }));
    }
    let mut seen = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        seen.push(body);
    }
    let done = svc.wait_job(&key, job["job_id"].as_str().unwrap()).await;
    let new_id = done["snapshot_id"].as_str().unwrap();
    let (_, new) = svc.get_json(&key, &path).await;
    assert_eq!(new["snapshot"], new_id);

    let ids: HashSet<&str> = seen.iter().map(|b| b["snapshot"].as_str().unwrap()).collect();
    for body in &seen {
        let reference = if body["snapshot"] == old["snapshot"] { &old } else { &new };
        assert_eq!(body, reference);
    }
    assert!(ids.iter().all(|id| *id == old["snapshot"] || *id == new_id), "{ids:?}");
}
