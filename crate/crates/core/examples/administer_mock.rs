//! Administer the demo scale to the bundled mock endpoint and print the
//! session summary plus one transcript line.
//!
//! cargo run --example administer_mock

use cogalign::llm::mock::{MockBehavior, MockServer};
use cogalign::llm::{administer, EndpointConfig, PromptCondition, SessionPlan};
use cogalign::scale::demo_scale;

fn main() {
    let scale = demo_scale();
    let server = MockServer::start(
        &scale,
        MockBehavior::RateLimitThenSucceed {
            failures: 2,
            then: Box::new(MockBehavior::EchoKey),
        },
    )
    .unwrap();
    let mut endpoint = EndpointConfig::new(server.base_url(), "mock-model");
    endpoint.backoff_base_ms = 5;
    let mut plan = SessionPlan::new(scale.reference(), PromptCondition::DualStrategy);
    plan.runs = 3;

    let mut out = Vec::new();
    let summary = administer(&plan, &endpoint, &scale, &mut out).unwrap();
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    let text = String::from_utf8(out).unwrap();
    println!("{}", text.lines().next().unwrap());
    println!("{} requests reached the server", server.requests().len());
}
