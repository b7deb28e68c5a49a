//! Minimal Overpass API client: one request in flight, at least one second
//! between requests, and a bounded retry on throttling responses.

use std::thread::sleep;
use std::time::{Duration, Instant};

use featurekit::BoundingBox;

use crate::failure::{CmdResult, Failure};

pub const DEFAULT_ENDPOINT: &str = "https://overpass-api.de/api/interpreter";
pub const ENDPOINT_VAR: &str = "FEATUREKIT_OVERPASS_URL";
const MIN_SPACING: Duration = Duration::from_secs(1);
const ATTEMPTS: usize = 3;

pub fn endpoint() -> String {
    std::env::var(ENDPOINT_VAR)
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| DEFAULT_ENDPOINT.to_owned())
}

/// Ways and relations inside a geographic box, with their nodes.
pub fn bbox_query(b: &BoundingBox) -> String {
    let s = format!("{},{},{},{}", b.min_y, b.min_x, b.max_y, b.max_x);
    format!("[out:json][timeout:120];(way({s});relation({s}););(._;>;);out body;")
}

/// Posts the query and returns the raw response body.
pub fn fetch(url: &str, query: &str) -> CmdResult<Vec<u8>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(180)))
        .build()
        .into();
    let mut last: Option<Instant> = None;
    let mut attempt = 0;
    loop {
        if let Some(t) = last {
            let waited = t.elapsed();
            if waited < MIN_SPACING {
                sleep(MIN_SPACING - waited);
            }
        }
        attempt += 1;
        last = Some(Instant::now());
        let mut response = agent
            .post(url)
            .header("Content-Type", "application/x-www-form-urlencoded")
            .send(format!("data={}", form_encode(query)))
            .map_err(|e| Failure::Data(anyhow::anyhow!("request to {url} failed: {e}")))?;
        let status = response.status().as_u16();
        if (200..300).contains(&status) {
            return response
                .body_mut()
                .with_config()
                .limit(1 << 31)
                .read_to_vec()
                .map_err(|e| Failure::Data(anyhow::anyhow!("reading response body: {e}")));
        }
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned);
        let throttled = matches!(status, 429 | 503 | 504);
        if !throttled || attempt >= ATTEMPTS {
            let hint = retry_after
                .map(|r| format!(", retry-after {r}"))
                .unwrap_or_default();
            return Err(Failure::Data(anyhow::anyhow!(
                "Overpass request failed with HTTP {status}{hint}"
            )));
        }
        let wait = retry_after
            .and_then(|r| r.trim().parse::<u64>().ok())
            .map(Duration::from_secs)
            .unwrap_or(MIN_SPACING);
        eprintln!(
            "warning: HTTP {status}, retrying in {} s",
            wait.as_secs().max(1)
        );
        sleep(wait.max(MIN_SPACING));
    }
}

fn form_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len() * 3);
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}
