use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;

use super::AttackError;

/// Candidate identities for offline guessing, tried in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    candidates: Vec<Vec<u8>>,
    /// Harness bookkeeping: whether the victim's identity was planted.
    pub contains_target: bool,
}

impl Dictionary {
    /// Empty candidates are dropped. Duplicates are kept; the search skips them.
    pub fn new<I, P>(candidates: I) -> Result<Self, AttackError>
    where
        I: IntoIterator<Item = P>,
        P: Into<Vec<u8>>,
    {
        let candidates: Vec<Vec<u8>> = candidates
            .into_iter()
            .map(Into::into)
            .filter(|c: &Vec<u8>| !c.is_empty())
            .collect();
        if candidates.is_empty() {
            return Err(AttackError::EmptyDictionary);
        }
        Ok(Dictionary {
            candidates,
            contains_target: false,
        })
    }

    /// One candidate per line. Trailing whitespace (including `\r`) is
    /// ignored and blank lines are skipped.
    pub fn from_reader(reader: impl Read) -> Result<Self, AttackError> {
        let mut candidates = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let line = line.trim_end();
            if !line.is_empty() {
                candidates.push(line.as_bytes().to_vec());
            }
        }
        Dictionary::new(candidates)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AttackError> {
        Dictionary::from_reader(File::open(path)?)
    }

    pub fn candidates(&self) -> &[Vec<u8>] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position(&self, id: &[u8]) -> Option<usize> {
        self.candidates.iter().position(|c| c == id)
    }

    /// Builds `size` realistic-looking identities (SSNs, phone numbers,
    /// e-mail addresses). With `target_pos` set, `target` is placed there;
    /// no other slot ever equals `target`.
    pub fn generate(
        size: usize,
        target: &[u8],
        target_pos: Option<usize>,
        rng: &mut impl Rng,
    ) -> Result<Self, AttackError> {
        if size == 0 {
            return Err(AttackError::EmptyDictionary);
        }
        if let Some(pos) = target_pos {
            if pos >= size {
                return Err(AttackError::TargetOutOfRange { pos, size });
            }
        }
        let mut candidates = Vec::with_capacity(size);
        for i in 0..size {
            if Some(i) == target_pos {
                candidates.push(target.to_vec());
                continue;
            }
            loop {
                let c = random_identity(rng);
                if c.as_bytes() != target {
                    candidates.push(c.into_bytes());
                    break;
                }
            }
        }
        let mut dict = Dictionary::new(candidates)?;
        dict.contains_target = target_pos.is_some();
        Ok(dict)
    }

    pub fn write_to(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for c in &self.candidates {
            out.write_all(c)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

const FIRST: &[&str] = &[
    "james",
    "mary",
    "robert",
    "patricia",
    "john",
    "jennifer",
    "michael",
    "linda",
    "david",
    "elizabeth",
    "wei",
    "priya",
    "arjun",
    "fatima",
    "chen",
    "sofia",
    "lucas",
    "amara",
    "kenji",
    "olga",
];
const LAST: &[&str] = &[
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller", "davis", "rao", "reddy",
    "kumar", "nguyen", "kim", "silva", "okafor", "tanaka", "ivanova", "muller", "haddad", "patel",
];
const DOMAINS: &[&str] = &[
    "gmail.com",
    "yahoo.com",
    "outlook.com",
    "hospital.org",
    "clinic.net",
    "mail.in",
];

/// One identity in a randomly chosen everyday format.
pub fn random_identity(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..3) {
        0 => format!(
            "{:03}-{:02}-{:04}",
            rng.gen_range(1..900),
            rng.gen_range(1..100),
            rng.gen_range(1..10_000)
        ),
        1 => format!(
            "+1-{:03}-{:03}-{:04}",
            rng.gen_range(200..1000),
            rng.gen_range(200..1000),
            rng.gen_range(0..10_000)
        ),
        _ => format!(
            "{}.{}{}@{}",
            FIRST[rng.gen_range(0..FIRST.len())],
            LAST[rng.gen_range(0..LAST.len())],
            rng.gen_range(0..1000),
            DOMAINS[rng.gen_range(0..DOMAINS.len())]
        ),
    }
}
