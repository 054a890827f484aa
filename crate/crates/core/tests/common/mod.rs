#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HEADER: &str = "wals_code\tname\tlatitude\tlongitude\tgenus\tfamily\tcountrycodes\tfeatures";

pub const HELD_OUT: [&str; 6] = [
    "Mayan",
    "Tucanoan",
    "Madang",
    "Mahakiranti",
    "Northern Pama-Nyungan",
    "Nilotic",
];

pub fn row(code: &str, lat: f64, lon: f64, genus: &str, family: &str, feats: &[(String, String)]) -> String {
    let f: Vec<String> = feats.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{code}\tLang {code}\t{lat:.3}\t{lon:.3}\t{genus}\t{family}\tXX\t{}",
        f.join(" | ")
    )
}

/// WALS-shaped text: the held-out genera plus `extra_genera` others, each
/// clustered around its own centre. Feature `f1` is a function of `f0`, so
/// correlation-based imputers have signal to find.
pub fn synthetic_wals(seed: u64, per_genus: usize, extra_genera: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut genera: Vec<String> = HELD_OUT.iter().map(|g| g.to_string()).collect();
    genera.extend((0..extra_genera).map(|i| format!("Genus{i}")));
    let mut lines = vec![HEADER.to_string()];
    let mut n = 0;
    for (gi, genus) in genera.iter().enumerate() {
        let centre = (rng.random_range(-60.0..60.0), rng.random_range(-170.0..170.0));
        let family = format!("Family{}", gi / 2);
        let bias = rng.random_range(0..3);
        for _ in 0..per_genus {
            let lat: f64 = centre.0 + rng.random_range(-3.0..3.0);
            let lon: f64 = centre.1 + rng.random_range(-3.0..3.0);
            let mut feats = Vec::new();
            let a = if rng.random_bool(0.7) { bias } else { rng.random_range(0..3) };
            feats.push(("f0".to_string(), format!("{} A{a}", a + 1)));
            feats.push(("f1".to_string(), format!("{} B{}", a % 2 + 1, a % 2)));
            for f in 2..10 {
                if rng.random_bool(0.8) {
                    let v = if rng.random_bool(0.6) { (bias + f) % 3 } else { rng.random_range(0..3) };
                    feats.push((format!("f{f}"), format!("{} V{v}", v + 1)));
                }
            }
            lines.push(row(&format!("l{n:03}"), lat, lon, genus, &family, &feats));
            n += 1;
        }
    }
    lines.join("\n") + "\n"
}
