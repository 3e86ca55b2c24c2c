use serde::{Deserialize, Serialize};

use super::{check_batch, EmbedError, EmbeddingProvider};

pub const EMBED_API_URL_VAR: &str = "EMBED_API_URL";
pub const EMBED_API_KEY_VAR: &str = "EMBED_API_KEY";

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f64>,
}

/// Client for an OpenAI-style embeddings endpoint.
///
/// Sends `{"model", "input": [...]}` and expects
/// `{"data": [{"embedding": [...]}, ...]}` aligned with the input.
pub struct HttpEmbedder {
    url: String,
    api_key: Option<String>,
    model: String,
    dim: usize,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, api_key: Option<String>, model: impl Into<String>, dim: usize) -> Self {
        Self {
            url: url.into(),
            api_key,
            model: model.into(),
            dim,
            agent: ureq::Agent::new_with_defaults(),
        }
    }

    /// Reads the endpoint from `EMBED_API_URL` and the key from `EMBED_API_KEY`.
    pub fn from_env(model: impl Into<String>, dim: usize) -> Result<Self, EmbedError> {
        let url = std::env::var(EMBED_API_URL_VAR).map_err(|_| EmbedError::MissingEnv(EMBED_API_URL_VAR))?;
        let key = std::env::var(EMBED_API_KEY_VAR).ok();
        Ok(Self::new(url, key, model, dim))
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let fail = |message: String| EmbedError::Provider {
            failed: texts.to_vec(),
            message,
        };
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(EmbedRequest {
                model: &self.model,
                input: texts,
            })
            .map_err(|e| fail(e.to_string()))?;
        let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| fail(e.to_string()))?;
        let vectors: Vec<Vec<f64>> = body.data.into_iter().map(|d| d.embedding).collect();
        check_batch(texts, &vectors, self.dim).map_err(|e| fail(e.to_string()))?;
        Ok(vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    // Minimal one-shot HTTP server: captures the request body and replies
    // with `reply`.
    fn serve_once(status: u16, reply: String) -> (String, thread::JoinHandle<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/embeddings", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = String::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).unwrap();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
            (headers, String::from_utf8(body).unwrap())
        });
        (url, handle)
    }

    #[test]
    fn wire_format_round_trip() {
        let reply = r#"{"data":[{"embedding":[1.0,0.0]},{"embedding":[0.5,0.5]}]}"#.to_string();
        let (url, handle) = serve_once(200, reply);
        let client = HttpEmbedder::new(url, Some("sk-test".into()), "text-embedding-3-large", 2);
        let out = client.embed(&["a".into(), "b".into()]).unwrap();
        assert_eq!(out, vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let (headers, body) = handle.join().unwrap();
        assert!(headers.to_ascii_lowercase().contains("authorization: bearer sk-test"));
        let sent: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(sent, serde_json::json!({"model": "text-embedding-3-large", "input": ["a", "b"]}));
    }

    #[test]
    fn misaligned_response_is_a_provider_error() {
        let (url, handle) = serve_once(200, r#"{"data":[{"embedding":[1.0,0.0]}]}"#.into());
        let client = HttpEmbedder::new(url, None, "m", 2);
        let err = client.embed(&["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, EmbedError::Provider { ref failed, .. } if failed.len() == 2));
        handle.join().unwrap();
    }

    #[test]
    fn server_error_is_a_provider_error() {
        let (url, handle) = serve_once(500, "{}".into());
        let client = HttpEmbedder::new(url, None, "m", 2);
        assert!(matches!(client.embed(&["a".into()]), Err(EmbedError::Provider { .. })));
        handle.join().unwrap();
    }
}
