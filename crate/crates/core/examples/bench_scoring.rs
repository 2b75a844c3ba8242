use std::time::Instant;
use sure_core::{fixtures, parse_responses, score_all, simulate_responses, MissingPolicy};

fn main() {
    let gs = fixtures::pharmacy_structure();
    let q = fixtures::pharmacy_questionnaire();
    let csv = simulate_responses(&q, 10_000, 2020).unwrap();
    let t = Instant::now();
    let rs = parse_responses(csv.as_bytes(), &q, &[], MissingPolicy::ExcludeParticipant).unwrap();
    let parsed = t.elapsed();
    let (_, agg) = score_all(&rs, &q, &gs).unwrap();
    println!(
        "parse {:?} score {:?} general {}",
        parsed,
        t.elapsed() - parsed,
        agg.general
    );
}
