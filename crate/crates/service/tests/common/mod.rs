#![allow(dead_code)]

use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use termrec_service::{AppState, Config, JobEvent, Notifier};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

#[derive(Default)]
pub struct Recorder(pub Mutex<Vec<JobEvent>>);

impl Notifier for Recorder {
    fn job_finished(&self, event: &JobEvent) {
        self.0.lock().unwrap().push(event.clone());
    }
}

pub struct TestService {
    pub base: String,
    pub state: Arc<AppState>,
    pub events: Arc<Recorder>,
    pub http: Client,
    shutdown: Option<oneshot::Sender<()>>,
    handle: Option<JoinHandle<std::io::Result<()>>>,
}

pub fn test_config(store: &Path) -> Config {
    Config {
        store_path: store.to_path_buf(),
        retry_max_attempts: 3,
        retry_base_delay_ms: 10,
        retry_max_delay_secs: 2,
        argon2_memory_kib: 64,
        argon2_iterations: 1,
        ..Config::default()
    }
}

impl TestService {
    pub async fn start(store: &Path) -> Self {
        let events = Arc::new(Recorder::default());
        let state = AppState::open(test_config(store), events.clone()).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}/api/v1", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel();
        let handle = tokio::spawn(termrec_service::serve(listener, state.clone(), async {
            let _ = rx.await;
        }));
        TestService { base, state, events, http: Client::new(), shutdown: Some(tx), handle: Some(handle) }
    }

    pub async fn stop(mut self) {
        let _ = self.shutdown.take().unwrap().send(());
        self.handle.take().unwrap().await.unwrap().unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn create_account(&self, username: &str) -> String {
        let r = self
            .http
            .post(self.url("/accounts"))
            .header("Accept", "application/json")
            .json(&json!({"username": username, "password": "long enough secret", "email": format!("{username}@example.org")}))
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), StatusCode::CREATED);
        r.json::<Value>().await.unwrap()["api_key"].as_str().unwrap().to_string()
    }

    pub async fn post_json(&self, key: &str, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self
            .http
            .post(self.url(path))
            .header("X-Api-Key", key)
            .header("Accept", "application/json")
            .json(&body)
            .send()
            .await
            .unwrap();
        (r.status(), r.json().await.unwrap())
    }

    pub async fn get_json(&self, key: &str, path: &str) -> (StatusCode, Value) {
        let r = self
            .http
            .get(self.url(path))
            .header("X-Api-Key", key)
            .header("Accept", "application/json")
            .send()
            .await
            .unwrap();
        (r.status(), r.json().await.unwrap())
    }

    pub async fn get_xml(&self, key: &str, path: &str) -> (StatusCode, String) {
        let r = self.http.get(self.url(path)).header("X-Api-Key", key).send().await.unwrap();
        (r.status(), r.text().await.unwrap())
    }

    pub async fn register_repository(&self, key: &str, oai_url: &str, language: &str) -> String {
        let (status, body) =
            self.post_json(key, "/repositories", json!({"oai_url": oai_url, "language": language})).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["repository_id"].as_str().unwrap().to_string()
    }

    pub async fn start_job(&self, key: &str, repository: &str, mode: &str) -> (StatusCode, Value) {
        self.post_json(key, &format!("/repositories/{repository}/jobs?mode={mode}"), Value::Null).await
    }

    pub async fn wait_job(&self, key: &str, job_id: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(30);
        loop {
            let (status, job) = self.get_json(key, &format!("/jobs/{job_id}")).await;
            assert_eq!(status, StatusCode::OK, "{job}");
            if matches!(job["state"].as_str(), Some("done" | "failed")) {
                return job;
            }
            assert!(Instant::now() < deadline, "job {job_id} did not finish: {job}");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
    }

    /// Starts a job and waits for it to finish.
    pub async fn run_job(&self, key: &str, repository: &str, mode: &str) -> Value {
        let (status, job) = self.start_job(key, repository, mode).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{job}");
        self.wait_job(key, job["job_id"].as_str().unwrap()).await
    }
}
