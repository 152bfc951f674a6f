use clonelog::metrics::round2;

pub struct Case {
    pub name: &'static str,
    pub candidate: &'static str,
    pub reference: &'static str,
    /// Cumulative BLEU-1..4.
    pub bleu: [f64; 4],
    /// ROUGE-1..3, `None` where the reference is too short.
    pub rouge_n: [Option<f64>; 3],
    pub rouge_l: f64,
}

// Every expected value below was worked out by hand from clipped n-gram
// counts, the brevity penalty and the longest common subsequence.
pub fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "floating ip rewrite",
            candidate: "successfully created floating ip",
            reference: "successfully deleted floating ip",
            // p1 = 3/4, p2 = 1/3, p3 = 0/2
            bleu: [75.00, 50.00, 0.0, 0.0],
            rouge_n: [Some(75.00), Some(33.33), Some(0.0)],
            rouge_l: 75.00,
        },
        Case {
            name: "identity",
            candidate: "failed to renew lease for block",
            reference: "failed to renew lease for block",
            bleu: [100.0; 4],
            rouge_n: [Some(100.0); 3],
            rouge_l: 100.0,
        },
        Case {
            name: "disjoint",
            candidate: "cache miss",
            reference: "region moved",
            bleu: [0.0; 4],
            rouge_n: [Some(0.0), Some(0.0), None],
            rouge_l: 0.0,
        },
        Case {
            name: "short candidate pays the brevity penalty",
            candidate: "a b",
            reference: "a b c d",
            // BP = e^(1 - 4/2) = 0.367879
            bleu: [36.79, 36.79, 0.0, 0.0],
            rouge_n: [Some(50.00), Some(33.33), Some(0.0)],
            rouge_l: 50.00,
        },
        Case {
            name: "repeated token is clipped",
            candidate: "the the the the",
            reference: "the cat",
            bleu: [25.00, 0.0, 0.0, 0.0],
            rouge_n: [Some(50.00), Some(0.0), None],
            rouge_l: 50.00,
        },
        Case {
            name: "long candidate covering the reference",
            candidate: "a b c d e f",
            reference: "a b c",
            // p1 = 1/2, p2 = 2/5, p3 = 1/4: sqrt(0.2), cbrt(0.05)
            bleu: [50.00, 44.72, 36.84, 0.0],
            rouge_n: [Some(100.0), Some(100.0), Some(100.0)],
            rouge_l: 100.0,
        },
        Case {
            name: "reversed order",
            candidate: "c b a",
            reference: "a b c",
            bleu: [100.0, 0.0, 0.0, 0.0],
            rouge_n: [Some(100.0), Some(0.0), Some(0.0)],
            rouge_l: 33.33,
        },
        Case {
            name: "end markers are not scored",
            candidate: "lease expired <eos>",
            reference: "lease expired <eos>",
            bleu: [100.0, 100.0, 0.0, 0.0],
            rouge_n: [Some(100.0), Some(100.0), None],
            rouge_l: 100.0,
        },
        Case {
            name: "one substitution in four",
            candidate: "a b c d",
            reference: "a b c e",
            // p = 3/4, 2/3, 1/2, 0: sqrt(1/2), cbrt(1/4)
            bleu: [75.00, 70.71, 63.00, 0.0],
            rouge_n: [Some(75.00), Some(66.67), Some(50.00)],
            rouge_l: 75.00,
        },
        Case {
            name: "one substitution in five",
            candidate: "a b c d e",
            reference: "a b c d f",
            // p = 4/5, 3/4, 2/3, 1/2: products 0.6, 0.4, 0.2
            bleu: [80.00, 77.46, 73.68, 66.87],
            rouge_n: [Some(80.00), Some(75.00), Some(66.67)],
            rouge_l: 80.00,
        },
        Case {
            name: "reference repeats a token",
            candidate: "a a b",
            reference: "a a a b",
            // BP = e^(-1/3) = 0.716531, p2 = 2/2
            bleu: [71.65, 71.65, 71.65, 0.0],
            rouge_n: [Some(75.00), Some(66.67), Some(50.00)],
            rouge_l: 75.00,
        },
        Case {
            name: "gaps in the candidate",
            candidate: "a x b y c",
            reference: "a b c d",
            bleu: [60.00, 0.0, 0.0, 0.0],
            rouge_n: [Some(75.00), Some(0.0), Some(0.0)],
            rouge_l: 75.00,
        },
        Case {
            name: "single token identity",
            candidate: "done",
            reference: "done",
            bleu: [100.0, 0.0, 0.0, 0.0],
            rouge_n: [Some(100.0), None, None],
            rouge_l: 100.0,
        },
        Case {
            name: "prefix of the reference",
            candidate: "unable to connect",
            reference: "unable to connect to server",
            // BP = e^(1 - 5/3) = 0.513417
            bleu: [51.34, 51.34, 51.34, 0.0],
            rouge_n: [Some(60.00), Some(50.00), Some(33.33)],
            rouge_l: 60.00,
        },
        Case {
            name: "half overlap",
            candidate: "block report sent",
            reference: "block report received",
            bleu: [66.67, 57.74, 0.0, 0.0],
            rouge_n: [Some(66.67), Some(50.00), Some(0.0)],
            rouge_l: 66.67,
        },
        Case {
            name: "swapped pair inside a sentence",
            candidate: "region server stopped cleanly",
            reference: "server region stopped cleanly",
            // p2 = 1/3 (only "stopped cleanly")
            bleu: [100.0, 57.74, 0.0, 0.0],
            rouge_n: [Some(100.0), Some(33.33), Some(0.0)],
            rouge_l: 75.00,
        },
        Case {
            name: "transposed words",
            candidate: "close stream now",
            reference: "stream close now",
            bleu: [100.0, 0.0, 0.0, 0.0],
            rouge_n: [Some(100.0), Some(0.0), Some(0.0)],
            rouge_l: 66.67,
        },
        Case {
            name: "candidate repeats the reference",
            candidate: "a b a b",
            reference: "a b",
            // p1 = 2/4, p2 = 1/3: sqrt(1/6)
            bleu: [50.00, 40.82, 0.0, 0.0],
            rouge_n: [Some(100.0), Some(100.0), None],
            rouge_l: 100.0,
        },
        Case {
            name: "truncated long description",
            candidate: "one two three four five six",
            reference: "one two three four five six seven eight",
            // BP = e^(1 - 8/6) = 0.716531, every precision 1
            bleu: [71.65, 71.65, 71.65, 71.65],
            rouge_n: [Some(75.00), Some(71.43), Some(66.67)],
            rouge_l: 75.00,
        },
        Case {
            name: "one extra trailing token",
            candidate: "w x y z q",
            reference: "w x y z",
            // p = 4/5, 3/4, 2/3, 1/2 with no brevity penalty
            bleu: [80.00, 77.46, 73.68, 66.87],
            rouge_n: [Some(100.0), Some(100.0), Some(100.0)],
            rouge_l: 100.0,
        },
        Case {
            name: "single token mismatch",
            candidate: "start",
            reference: "stop",
            bleu: [0.0; 4],
            rouge_n: [Some(0.0), None, None],
            rouge_l: 0.0,
        },
    ]
}

pub fn close(actual: f64, expected: f64) -> bool {
    (round2(actual) - expected).abs() < 1e-9
}

