//! Seeded synthetic cohorts with the same columns and category vocabularies
//! as the public student dataset.
//!
//! Class labels follow a noisy latent engagement score built from the four
//! activity counts, absence days and parent survey participation, so a model
//! has real signal to learn. Useful for demos and tests when the real CSV is
//! not at hand; the numbers mean nothing beyond that.

use crate::ingest::{RecordTable, StudentRecord, COUNT_MAX};
use crate::rng::Xorshift64Star;

pub const NATIONALITIES: [&str; 14] = [
    "KW",
    "lebanon",
    "Egypt",
    "SaudiArabia",
    "USA",
    "Jordan",
    "venzuela",
    "Iran",
    "Tunis",
    "Morocco",
    "Syria",
    "Palestine",
    "Iraq",
    "Lybia",
];
pub const BIRTH_PLACES: [&str; 14] = [
    "KuwaIT",
    "lebanon",
    "Egypt",
    "SaudiArabia",
    "USA",
    "Jordan",
    "venzuela",
    "Iran",
    "Tunis",
    "Morocco",
    "Syria",
    "Iraq",
    "Palestine",
    "Lybia",
];
pub const STAGES: [&str; 3] = ["lowerlevel", "MiddleSchool", "HighSchool"];
pub const GRADES: [&str; 10] = [
    "G-02", "G-04", "G-05", "G-06", "G-07", "G-08", "G-09", "G-10", "G-11", "G-12",
];
pub const SECTIONS: [&str; 3] = ["A", "B", "C"];
pub const TOPICS: [&str; 12] = [
    "English",
    "Spanish",
    "French",
    "Arabic",
    "IT",
    "Math",
    "Chemistry",
    "Biology",
    "Science",
    "History",
    "Quran",
    "Geology",
];

fn pick<'a>(rng: &mut Xorshift64Star, values: &[&'a str]) -> &'a str {
    values[rng.below(values.len())]
}

fn count(rng: &mut Xorshift64Star, engagement: f64, spread: f64) -> u32 {
    let raw = engagement * f64::from(COUNT_MAX) + rng.symmetric(spread);
    raw.round().clamp(0.0, f64::from(COUNT_MAX)) as u32
}

/// `n` labeled records drawn from a generator seeded with `seed`.
pub fn cohort(n: usize, seed: u64) -> RecordTable {
    let mut rng = Xorshift64Star::new(seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let engagement = rng.next_f64();
        let engaged = |rng: &mut Xorshift64Star, p_low: f64| rng.next_f64() < p_low + (1.0 - p_low) * engagement;

        let under_7 = engaged(&mut rng, 0.2);
        let survey = engaged(&mut rng, 0.3);
        let stage = rng.below(STAGES.len());
        let score =
            engagement + if under_7 { 0.25 } else { -0.1 } + if survey { 0.1 } else { 0.0 } + rng.symmetric(0.15);
        let class_label = if score < 0.45 {
            "L"
        } else if score < 0.95 {
            "M"
        } else {
            "H"
        };

        records.push(StudentRecord {
            gender: if rng.next_f64() < 0.63 { "M" } else { "F" }.to_string(),
            nationality: pick(&mut rng, &NATIONALITIES).to_string(),
            place_of_birth: pick(&mut rng, &BIRTH_PLACES).to_string(),
            stage_id: STAGES[stage].to_string(),
            grade_id: pick(&mut rng, &GRADES).to_string(),
            section_id: pick(&mut rng, &SECTIONS).to_string(),
            topic: pick(&mut rng, &TOPICS).to_string(),
            semester: if rng.next_f64() < 0.51 { "F" } else { "S" }.to_string(),
            relation: if rng.next_f64() < 0.59 { "Father" } else { "Mum" }.to_string(),
            raised_hands: count(&mut rng, engagement, 25.0),
            visited_resources: count(&mut rng, engagement, 20.0),
            announcements_view: count(&mut rng, engagement * 0.7, 20.0),
            discussion: count(&mut rng, 0.2 + engagement * 0.5, 30.0),
            parent_answering_survey: if survey { "Yes" } else { "No" }.to_string(),
            parent_school_satisfaction: if engaged(&mut rng, 0.3) { "Good" } else { "Bad" }.to_string(),
            student_absence_days: if under_7 { "Under-7" } else { "Above-7" }.to_string(),
            class_label: Some(class_label.to_string()),
        });
    }
    RecordTable {
        records,
        source_name: format!("synthetic(n={n}, seed={seed})"),
    }
}
