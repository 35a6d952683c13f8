//! Seeded generator for small Hungarian-like treebanks.
//!
//! Nouns inflect for case and number with vowel harmony, stem lengthening
//! (`alma` → `almát`), stem shortening (`madár` → `madarat`) and `-val`
//! assimilation (`ház` → `házzal`). Verbs and adjectives include suppletive
//! forms (`ment`/`megy`, `ettem`/`eszik`, `legjobb`/`jó`). Numbers carry
//! hyphenated case suffixes (`1000-ben`). Sentence-initial words are
//! capitalized in the form only.

#![allow(dead_code)]

use hylem::corpus::{Corpus, Sentence, Token};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Harmony {
    Back,
    Front,
    Rounded,
}

/// (lemma, stem before suffixes, harmony)
type Noun = (&'static str, &'static str, Harmony);

use Harmony::{Back, Front, Rounded};

const NOUNS: &[Noun] = &[
    ("ház", "ház", Back),
    ("alma", "almá", Back),
    ("kutya", "kutyá", Back),
    ("fa", "fá", Back),
    ("madár", "madar", Back),
    ("asztal", "asztal", Back),
    ("város", "város", Back),
    ("lány", "lány", Back),
    ("ablak", "ablak", Back),
    ("autó", "autó", Back),
    ("kapu", "kapu", Back),
    ("út", "út", Back),
    ("nyár", "nyar", Back),
    ("pohár", "pohar", Back),
    ("szoba", "szobá", Back),
    ("torta", "tortá", Back),
    ("hal", "hal", Back),
    ("vonat", "vonat", Back),
    ("kert", "kert", Front),
    ("ember", "ember", Front),
    ("kéz", "kez", Front),
    ("víz", "viz", Front),
    ("levél", "level", Front),
    ("szék", "szék", Front),
    ("gyerek", "gyerek", Front),
    ("kecske", "kecské", Front),
    ("mese", "mesé", Front),
    ("erdő", "erdő", Front),
    ("tenger", "tenger", Front),
    ("kép", "kép", Front),
    ("könyv", "könyv", Rounded),
    ("ökör", "ökr", Rounded),
    ("föld", "föld", Rounded),
    ("tükör", "tükr", Rounded),
    ("sör", "sör", Rounded),
    ("gyümölcs", "gyümölcs", Rounded),
    ("bőr", "bőr", Rounded),
    ("ülés", "ülés", Front),
    ("kosár", "kosar", Back),
    ("sapka", "sapká", Back),
];

fn ends_with_vowel(s: &str) -> bool {
    s.chars()
        .last()
        .is_some_and(|c| "aáeéiíoóöőuúüű".contains(c))
}

/// Inflected noun form.
fn noun_form(noun: &Noun, case: &str, plural: bool) -> String {
    let (lemma, oblique, h) = *noun;
    let pick = |back: &'static str, front: &'static str, rounded: &'static str| match h {
        Harmony::Back => back,
        Harmony::Front => front,
        Harmony::Rounded => rounded,
    };
    let mut stem = if case == "Nom" && !plural {
        return lemma.to_owned();
    } else {
        oblique.to_owned()
    };
    if plural {
        if ends_with_vowel(&stem) {
            stem.push('k');
        } else {
            stem.push_str(pick("ak", "ek", "ök"));
        }
        if case != "Nom" {
            // Plural stems take the lowered linking vowel.
            stem.push_str(match case {
                "Acc" => pick("at", "et", "et"),
                _ => "",
            });
            if case == "Acc" {
                return stem;
            }
        } else {
            return stem;
        }
    }
    let vowel_final = ends_with_vowel(&stem);
    let suffix = match case {
        "Acc" => {
            if vowel_final {
                "t".to_owned()
            } else {
                pick("at", "et", "et").to_owned()
            }
        }
        "Ine" => pick("ban", "ben", "ben").to_owned(),
        "Ela" => pick("ból", "ből", "ből").to_owned(),
        "Ill" => pick("ba", "be", "be").to_owned(),
        "Dat" => pick("nak", "nek", "nek").to_owned(),
        "Sup" => {
            if vowel_final {
                "n".to_owned()
            } else {
                pick("on", "en", "ön").to_owned()
            }
        }
        "Ins" => {
            let tail = pick("al", "el", "el");
            if vowel_final {
                format!("v{}", tail)
            } else {
                // -val/-vel assimilates to a final consonant.
                let last = stem.chars().last().unwrap();
                format!("{}{}", last, tail)
            }
        }
        other => panic!("unknown case {}", other),
    };
    stem + &suffix
}

const CASES: &[&str] = &[
    "Nom", "Nom", "Acc", "Acc", "Ine", "Ela", "Ill", "Dat", "Sup", "Ins",
];

struct Verb {
    lemma: &'static str,
    /// (form, FEATS)
    forms: &'static [(&'static str, &'static str)],
}

const PRES3: &str = "Definite=Ind|Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin|Voice=Act";
const PRES1: &str = "Definite=Ind|Mood=Ind|Number=Sing|Person=1|Tense=Pres|VerbForm=Fin|Voice=Act";
const PRES3P: &str = "Definite=Ind|Mood=Ind|Number=Plur|Person=3|Tense=Pres|VerbForm=Fin|Voice=Act";
const PAST3: &str = "Definite=Ind|Mood=Ind|Number=Sing|Person=3|Tense=Past|VerbForm=Fin|Voice=Act";
const PAST1: &str = "Definite=Ind|Mood=Ind|Number=Sing|Person=1|Tense=Past|VerbForm=Fin|Voice=Act";
const DEF3: &str = "Definite=Def|Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin|Voice=Act";

const VERBS: &[Verb] = &[
    Verb {
        lemma: "lát",
        forms: &[
            ("lát", PRES3),
            ("látok", PRES1),
            ("látnak", PRES3P),
            ("látott", PAST3),
            ("láttam", PAST1),
            ("látja", DEF3),
        ],
    },
    Verb {
        lemma: "vár",
        forms: &[
            ("vár", PRES3),
            ("várok", PRES1),
            ("várnak", PRES3P),
            ("várt", PAST3),
            ("vártam", PAST1),
            ("várja", DEF3),
        ],
    },
    Verb {
        lemma: "ad",
        forms: &[
            ("ad", PRES3),
            ("adok", PRES1),
            ("adnak", PRES3P),
            ("adott", PAST3),
            ("adtam", PAST1),
            ("adja", DEF3),
        ],
    },
    Verb {
        lemma: "kér",
        forms: &[
            ("kér", PRES3),
            ("kérek", PRES1),
            ("kérnek", PRES3P),
            ("kért", PAST3),
            ("kértem", PAST1),
            ("kéri", DEF3),
        ],
    },
    Verb {
        lemma: "ül",
        forms: &[
            ("ül", PRES3),
            ("ülök", PRES1),
            ("ülnek", PRES3P),
            ("ült", PAST3),
            ("ültem", PAST1),
        ],
    },
    Verb {
        lemma: "ír",
        forms: &[
            ("ír", PRES3),
            ("írok", PRES1),
            ("írnak", PRES3P),
            ("írt", PAST3),
            ("írtam", PAST1),
            ("írja", DEF3),
        ],
    },
    Verb {
        lemma: "olvas",
        forms: &[
            ("olvas", PRES3),
            ("olvasok", PRES1),
            ("olvasnak", PRES3P),
            ("olvasott", PAST3),
            ("olvastam", PAST1),
            ("olvassa", DEF3),
        ],
    },
    Verb {
        lemma: "néz",
        forms: &[
            ("néz", PRES3),
            ("nézek", PRES1),
            ("néznek", PRES3P),
            ("nézett", PAST3),
            ("néztem", PAST1),
            ("nézi", DEF3),
        ],
    },
    Verb {
        lemma: "főz",
        forms: &[
            ("főz", PRES3),
            ("főzök", PRES1),
            ("főznek", PRES3P),
            ("főzött", PAST3),
            ("főztem", PAST1),
            ("főzi", DEF3),
        ],
    },
    Verb {
        lemma: "tanul",
        forms: &[
            ("tanul", PRES3),
            ("tanulok", PRES1),
            ("tanulnak", PRES3P),
            ("tanult", PAST3),
            ("tanultam", PAST1),
        ],
    },
    Verb {
        lemma: "dolgozik",
        forms: &[
            ("dolgozik", PRES3),
            ("dolgozom", PRES1),
            ("dolgoznak", PRES3P),
            ("dolgozott", PAST3),
            ("dolgoztam", PAST1),
        ],
    },
    Verb {
        lemma: "megy",
        forms: &[
            ("megy", PRES3),
            ("megyek", PRES1),
            ("mennek", PRES3P),
            ("ment", PAST3),
            ("mentem", PAST1),
        ],
    },
    Verb {
        lemma: "eszik",
        forms: &[
            ("eszik", PRES3),
            ("eszem", PRES1),
            ("esznek", PRES3P),
            ("evett", PAST3),
            ("ettem", PAST1),
            ("eszi", DEF3),
        ],
    },
    Verb {
        lemma: "van",
        forms: &[
            ("van", PRES3),
            ("vagyok", PRES1),
            ("vannak", PRES3P),
            ("volt", PAST3),
            ("voltam", PAST1),
        ],
    },
    Verb {
        lemma: "szeret",
        forms: &[
            ("szeret", PRES3),
            ("szeretek", PRES1),
            ("szeretnek", PRES3P),
            ("szeretett", PAST3),
            ("szerettem", PAST1),
            ("szereti", DEF3),
        ],
    },
    Verb {
        lemma: "hoz",
        forms: &[
            ("hoz", PRES3),
            ("hozok", PRES1),
            ("hoznak", PRES3P),
            ("hozott", PAST3),
            ("hoztam", PAST1),
            ("hozza", DEF3),
        ],
    },
];

struct Adj {
    lemma: &'static str,
    comparative: &'static str,
}

const ADJS: &[Adj] = &[
    Adj {
        lemma: "hosszú",
        comparative: "hosszabb",
    },
    Adj {
        lemma: "nagy",
        comparative: "nagyobb",
    },
    Adj {
        lemma: "kicsi",
        comparative: "kisebb",
    },
    Adj {
        lemma: "szép",
        comparative: "szebb",
    },
    Adj {
        lemma: "jó",
        comparative: "jobb",
    },
    Adj {
        lemma: "piros",
        comparative: "pirosabb",
    },
    Adj {
        lemma: "régi",
        comparative: "régebbi",
    },
    Adj {
        lemma: "magas",
        comparative: "magasabb",
    },
    Adj {
        lemma: "gyors",
        comparative: "gyorsabb",
    },
    Adj {
        lemma: "zöld",
        comparative: "zöldebb",
    },
    Adj {
        lemma: "okos",
        comparative: "okosabb",
    },
    Adj {
        lemma: "fehér",
        comparative: "fehérebb",
    },
];

const PROPNS: &[(&str, &[(&str, &str)])] = &[
    (
        "Budapest",
        &[
            ("Budapest", "Nom"),
            ("Budapesten", "Sup"),
            ("Budapestre", "Sub"),
            ("Budapestről", "Del"),
        ],
    ),
    (
        "Szeged",
        &[("Szeged", "Nom"), ("Szegeden", "Sup"), ("Szegedre", "Sub")],
    ),
    (
        "Péter",
        &[
            ("Péter", "Nom"),
            ("Pétert", "Acc"),
            ("Péternek", "Dat"),
            ("Péterrel", "Ins"),
        ],
    ),
    (
        "Anna",
        &[
            ("Anna", "Nom"),
            ("Annát", "Acc"),
            ("Annának", "Dat"),
            ("Annával", "Ins"),
        ],
    ),
    (
        "Duna",
        &[("Duna", "Nom"), ("Dunán", "Sup"), ("Dunába", "Ill")],
    ),
    ("MÁV", &[("MÁV", "Nom"), ("MÁV-nál", "Ade")]),
];

const NUM_SUFFIXES: &[(&str, &str)] = &[
    ("ban", "Ine"),
    ("ben", "Ine"),
    ("ig", "Ter"),
    ("os", "Nom"),
    ("es", "Nom"),
    ("ra", "Sub"),
    ("re", "Sub"),
];

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    /// (modulus, residue): lexemes whose index matches are reserved.
    holdout: Option<(usize, usize)>,
    use_holdout: bool,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            holdout: None,
            use_holdout: false,
        }
    }

    /// Every `modulus`-th lexeme is held out of training sentences; an
    /// evaluation generator draws held-out lexemes half of the time.
    pub fn with_holdout(mut self, modulus: usize, evaluation: bool) -> Self {
        self.holdout = Some((modulus, 0));
        self.use_holdout = evaluation;
        self
    }

    fn pick_index(&mut self, n: usize) -> usize {
        match self.holdout {
            None => self.rng.gen_range(0..n),
            Some((modulus, residue)) => {
                let want_held = self.use_holdout && self.rng.gen_bool(0.5);
                loop {
                    let idx = self.rng.gen_range(0..n);
                    if (idx % modulus == residue) == want_held {
                        return idx;
                    }
                }
            }
        }
    }

    fn noun(&mut self) -> Token {
        let noun = &NOUNS[self.pick_index(NOUNS.len())];
        let case = *CASES.choose(&mut self.rng).unwrap();
        let plural = self.rng.gen_bool(0.25);
        let form = noun_form(noun, case, plural);
        let number = if plural { "Plur" } else { "Sing" };
        Token::new(form, "NOUN")
            .with_feats(&format!("Case={}|Number={}", case, number))
            .with_lemma(noun.0)
    }

    fn verb(&mut self) -> Token {
        let verb = &VERBS[self.pick_index(VERBS.len())];
        let (form, feats) = *verb.forms.choose(&mut self.rng).unwrap();
        Token::new(form, "VERB")
            .with_feats(feats)
            .with_lemma(verb.lemma)
    }

    fn adj(&mut self) -> Token {
        let adj = &ADJS[self.pick_index(ADJS.len())];
        let (form, degree) = match self.rng.gen_range(0..4) {
            0 => (adj.comparative.to_owned(), "Cmp"),
            1 => (format!("leg{}", adj.comparative), "Sup"),
            _ => (adj.lemma.to_owned(), "Pos"),
        };
        Token::new(form, "ADJ")
            .with_feats(&format!("Case=Nom|Degree={}|Number=Sing", degree))
            .with_lemma(adj.lemma)
    }

    fn propn(&mut self) -> Token {
        let (lemma, forms) = PROPNS[self.rng.gen_range(0..PROPNS.len())];
        let (form, case) = *forms.choose(&mut self.rng).unwrap();
        Token::new(form, "PROPN")
            .with_feats(&format!("Case={}|Number=Sing", case))
            .with_lemma(lemma)
    }

    fn num(&mut self) -> Token {
        let n: u32 = match self.rng.gen_range(0..3) {
            0 => self.rng.gen_range(1..10),
            1 => self.rng.gen_range(10..100),
            _ => self.rng.gen_range(1900..2030),
        };
        if self.rng.gen_bool(0.3) {
            return Token::new(n.to_string(), "NUM")
                .with_feats("NumType=Card")
                .with_lemma(n.to_string());
        }
        let (suffix, case) = *NUM_SUFFIXES.choose(&mut self.rng).unwrap();
        let (core, upos) = if suffix == "os" || suffix == "es" {
            let hi = n + self.rng.gen_range(1..5);
            (format!("{}-{}", n, hi), "ADJ")
        } else {
            (n.to_string(), "NUM")
        };
        Token::new(format!("{}-{}", core, suffix), upos)
            .with_feats(&format!("Case={}|NumType=Card|Number=Sing", case))
            .with_lemma(core)
    }

    fn word(&mut self, upos: &str) -> Token {
        match upos {
            "NOUN" => self.noun(),
            "VERB" => self.verb(),
            "ADJ" => self.adj(),
            "PROPN" => self.propn(),
            "NUM" => self.num(),
            "DET" => {
                let (form, feats) = *[
                    ("a", "Definite=Def|PronType=Art"),
                    ("az", "Definite=Def|PronType=Art"),
                    ("egy", "Definite=Ind|PronType=Art"),
                ]
                .choose(&mut self.rng)
                .unwrap();
                let lemma = if form == "egy" { "egy" } else { "a" };
                Token::new(form, "DET").with_feats(feats).with_lemma(lemma)
            }
            "ADV" => {
                let form = *["nem", "is", "már", "még", "nagyon", "tegnap"]
                    .choose(&mut self.rng)
                    .unwrap();
                Token::new(form, "ADV").with_lemma(form)
            }
            "CCONJ" => {
                let form = *["és", "de", "vagy"].choose(&mut self.rng).unwrap();
                Token::new(form, "CCONJ").with_lemma(form)
            }
            "PUNCT" => {
                let form = *[".", ".", ".", "!", "?", ","]
                    .choose(&mut self.rng)
                    .unwrap();
                Token::new(form, "PUNCT").with_lemma(form)
            }
            other => panic!("no generator for {}", other),
        }
    }

    pub fn sentence(&mut self) -> Sentence {
        const TEMPLATES: &[&[&str]] = &[
            &["DET", "ADJ", "NOUN", "VERB", "PUNCT"],
            &["PROPN", "VERB", "DET", "NOUN", "PUNCT"],
            &["NOUN", "VERB", "DET", "ADJ", "NOUN", "PUNCT"],
            &["DET", "NOUN", "ADV", "VERB", "NUM", "PUNCT"],
            &["NUM", "NOUN", "VERB", "PROPN", "PUNCT"],
            &[
                "ADV", "VERB", "DET", "NOUN", "CCONJ", "DET", "NOUN", "PUNCT",
            ],
            &["DET", "NUM", "NOUN", "VERB", "ADV", "PUNCT"],
            &["PROPN", "VERB", "NUM", "NOUN", "PUNCT"],
        ];
        let template = *TEMPLATES.choose(&mut self.rng).unwrap();
        let mut tokens: Vec<Token> = template.iter().map(|upos| self.word(upos)).collect();
        let first = &mut tokens[0];
        if first.upos != "NUM" && first.upos != "PUNCT" {
            first.form = capitalize(&first.form);
        }
        Sentence::new(tokens)
    }

    pub fn corpus(&mut self, name: &str, min_tokens: usize) -> Corpus {
        let mut sentences = Vec::new();
        let mut count = 0;
        while count < min_tokens {
            let sentence = self.sentence();
            count += sentence.len();
            sentences.push(sentence);
        }
        Corpus::new(name, sentences)
    }
}

/// Corpus of roughly `tokens` tokens drawn from the whole lexicon.
pub fn fixture_corpus(seed: u64, tokens: usize) -> Corpus {
    Generator::new(seed).corpus("fixture", tokens)
}

/// Train and evaluation corpora where evaluation draws many lexemes that
/// never occur in training.
pub fn split_corpora(seed: u64, train_tokens: usize, eval_tokens: usize) -> (Corpus, Corpus) {
    let train = Generator::new(seed)
        .with_holdout(4, false)
        .corpus("synthetic-train", train_tokens);
    let eval = Generator::new(seed.wrapping_add(1))
        .with_holdout(4, true)
        .corpus("synthetic-eval", eval_tokens);
    (train, eval)
}
