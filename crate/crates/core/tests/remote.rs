mod support;

use serde_json::json;

use sara::assemble::{dispatch, render_request, DispatchError, PromptTemplate};
use sara::embed::{embed_text, EmbedBackend, EmbedBackendConfig, EmbedError, RemoteEmbedder};
use sara::proxylm::{csi_score, ProxyError, RemoteLogprobs};
use support::{dead_url, MockServer};

/// Replies with `[len(text), index-in-batch, 0]` for every text.
fn echo_embedder() -> MockServer {
    MockServer::start(|path, body| {
        assert_eq!(path, "/v1/embed");
        let vectors: Vec<Vec<f32>> = body["texts"]
            .as_array()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, t)| vec![t.as_str().unwrap().len() as f32, i as f32, 0.0])
            .collect();
        (200, json!({"dim": 3, "vectors": vectors}).to_string())
    })
}

#[test]
fn batches_keep_input_order() {
    let server = echo_embedder();
    let client = RemoteEmbedder::new(&server.url, 3).normalize_output(false).batch_size(2);
    let texts = ["a", "bb", "", "cccc", "ddddd", "e", "ffffff", "ggggggg"];
    let out = client.embed_batch(&texts).unwrap();
    assert_eq!(out.len(), texts.len());
    for (v, t) in out.iter().zip(&texts) {
        assert_eq!(v.values()[0], t.len() as f32);
    }
    assert!(out[2].is_zero());
    let sent: usize = server.bodies().iter().map(|b| b["texts"].as_array().unwrap().len()).sum();
    assert_eq!(sent, 7);
    assert!(server.bodies().iter().all(|b| b["texts"].as_array().unwrap().len() <= 2));
}

#[test]
fn client_normalizes_when_configured() {
    let server = MockServer::start(|_, _| (200, json!({"dim": 2, "vectors": [[3.0, 4.0]]}).to_string()));
    let client = RemoteEmbedder::new(format!("{}/", server.url), 2);
    let v = embed_text(&client, "x").unwrap();
    assert!(v.is_normalized());
    assert!((v.values()[0] - 0.6).abs() < 1e-6 && (v.values()[1] - 0.8).abs() < 1e-6);
    assert_eq!(server.paths(), vec!["/v1/embed".to_string()]);
}

#[test]
fn embed_errors_are_distinct() {
    let wrong_dim = MockServer::start(|_, _| (200, json!({"dim": 5, "vectors": [[0.0, 0.0, 0.0, 0.0, 0.0]]}).to_string()));
    assert!(matches!(
        embed_text(&RemoteEmbedder::new(&wrong_dim.url, 3), "x"),
        Err(EmbedError::RemoteDimension { expected: 3, found: 5 })
    ));
    let failing = MockServer::start(|_, _| (500, "boom".into()));
    match embed_text(&RemoteEmbedder::new(&failing.url, 3), "x") {
        Err(EmbedError::Status { code: 500, body }) => assert_eq!(body, "boom"),
        other => panic!("unexpected {other:?}"),
    }
    let garbage = MockServer::start(|_, _| (200, "{\"dim\":".into()));
    assert!(matches!(
        embed_text(&RemoteEmbedder::new(&garbage.url, 3), "x"),
        Err(EmbedError::Malformed(_))
    ));
    let err = embed_text(&RemoteEmbedder::new(dead_url(), 3), "x").unwrap_err();
    assert!(matches!(err, EmbedError::Transport(_)));
    assert!(err.is_backend_failure());
}

#[test]
fn remote_config_builds_client() {
    let server = echo_embedder();
    let backend = EmbedBackendConfig::remote(&server.url, 3).build().unwrap();
    assert_eq!(backend.dim(), 3);
    assert_eq!(embed_text(backend.as_ref(), "abc").unwrap().dim(), 3);
    let mut missing = EmbedBackendConfig::remote("x", 3);
    missing.endpoint = None;
    assert!(matches!(missing.build(), Err(EmbedError::Config(_))));
}

#[test]
fn remote_csi_averages_server_logprobs() {
    let server = MockServer::start(|path, _| {
        assert_eq!(path, "/v1/logprobs");
        (200, json!({"tokens": ["x", "y"], "logprobs": [-1.0, -3.0]}).to_string())
    });
    let client = RemoteLogprobs::new(&server.url);
    let score = csi_score(&client, "x y", &["first", "second"]).unwrap();
    assert_eq!(score.value, 2.0);
    assert_eq!(score.token_count, 2);
    assert_eq!(
        server.bodies(),
        vec![json!({"prefix": "first second", "continuation": "x y"})]
    );
}

#[test]
fn remote_csi_errors() {
    let server = MockServer::start(|_, _| (200, "{}".into()));
    let client = RemoteLogprobs::new(&server.url);
    assert!(matches!(csi_score(&client, "  ", &[]), Err(ProxyError::EmptyCandidate)));
    assert!(server.paths().is_empty());

    let failing = MockServer::start(|_, _| (503, "busy".into()));
    let err = csi_score(&RemoteLogprobs::new(&failing.url), "x", &[]).unwrap_err();
    assert!(matches!(err, ProxyError::Status { code: 503, .. }));
    assert!(err.is_backend_failure());

    let ragged = MockServer::start(|_, _| (200, json!({"tokens": ["x"], "logprobs": [-1.0, -2.0]}).to_string()));
    assert!(matches!(
        csi_score(&RemoteLogprobs::new(&ragged.url), "x", &[]),
        Err(ProxyError::Malformed(_))
    ));
    let empty = MockServer::start(|_, _| (200, json!({"tokens": [], "logprobs": []}).to_string()));
    assert!(matches!(
        csi_score(&RemoteLogprobs::new(&empty.url), "x", &[]),
        Err(ProxyError::EmptyTokens)
    ));
    let positive = MockServer::start(|_, _| (200, json!({"tokens": ["x"], "logprobs": [0.5]}).to_string()));
    assert!(matches!(
        csi_score(&RemoteLogprobs::new(&positive.url), "x", &[]),
        Err(ProxyError::Malformed(_))
    ));
    assert!(matches!(
        csi_score(&RemoteLogprobs::new(dead_url()), "x", &[]),
        Err(ProxyError::Transport(_))
    ));
}

#[test]
fn dispatch_sends_request_with_zero_temperature() {
    let server = MockServer::start(|path, body| {
        assert_eq!(path, "/v1/generate");
        assert_eq!(body["temperature"], json!(0));
        (200, json!({"answer": format!("echo {}", body["question"].as_str().unwrap())}).to_string())
    });
    let req = render_request("why?", &["ctx"], &[], &PromptTemplate::inference_v1());
    assert_eq!(dispatch(&server.url, &req).unwrap(), "echo why?");
    let sent = &server.bodies()[0];
    assert_eq!(sent["version"], json!(1));
    assert_eq!(sent["segments"][0]["type"], json!("text"));
}

#[test]
fn dispatch_does_not_retry() {
    let server = MockServer::start(|_, _| (502, "bad gateway".into()));
    let req = render_request("q", &[], &[], &PromptTemplate::inference_v1());
    assert!(matches!(
        dispatch(&server.url, &req),
        Err(DispatchError::Status { code: 502, .. })
    ));
    assert_eq!(server.paths().len(), 1);
    let odd = MockServer::start(|_, _| (200, "{\"text\":\"x\"}".into()));
    assert!(matches!(dispatch(&odd.url, &req), Err(DispatchError::Malformed(_))));
    assert!(matches!(dispatch(&dead_url(), &req), Err(DispatchError::Transport(_))));
}
