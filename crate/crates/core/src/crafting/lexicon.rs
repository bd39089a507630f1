//! Word lists for the synthetic clean corpus and the crafted items.

pub const NOUNS: &[&str] = &[
    "river",
    "garden",
    "lantern",
    "teacher",
    "farmer",
    "window",
    "mountain",
    "kettle",
    "harbor",
    "village",
    "engine",
    "meadow",
    "painter",
    "basket",
    "forest",
    "bridge",
    "candle",
    "doctor",
    "market",
    "orchard",
    "sailor",
    "library",
    "tower",
    "wagon",
    "island",
    "baker",
    "cottage",
    "valley",
    "mirror",
    "pilot",
    "student",
    "castle",
    "blanket",
    "fountain",
    "shepherd",
    "compass",
    "ladder",
    "kitchen",
    "singer",
    "desert",
    "lighthouse",
    "carpenter",
    "violin",
    "workshop",
    "station",
    "parrot",
    "tailor",
    "quarry",
    "barn",
    "clock",
    "pond",
    "miller",
    "chapel",
    "ferry",
    "hammer",
    "stable",
    "cellar",
    "poet",
    "tunnel",
    "harvest",
    "glacier",
    "weaver",
    "attic",
    "canyon",
    "drummer",
    "bakery",
    "courtyard",
    "fisherman",
    "saddle",
    "anchor",
    "volcano",
    "potter",
    "museum",
    "rooftop",
    "gardener",
    "bicycle",
    "porch",
    "journal",
    "merchant",
    "beacon",
];

pub const ADJECTIVES: &[&str] = &[
    "old", "quiet", "bright", "small", "green", "tall", "gentle", "busy", "warm", "narrow", "silver", "hidden",
    "wooden", "calm", "distant", "golden", "rusty", "friendly", "ancient", "crowded", "empty", "frozen", "humble",
    "lively", "modest", "patient", "proud", "rapid", "sleepy", "steady", "sturdy", "tidy", "wild", "cheerful",
    "curious", "dusty", "faded", "famous", "gloomy", "hollow", "lonely", "muddy", "polished", "rural", "shiny",
    "simple", "spare", "stone",
];

pub const VERBS: &[&str] = &[
    "watches",
    "carries",
    "follows",
    "repairs",
    "paints",
    "visits",
    "guards",
    "cleans",
    "builds",
    "finds",
    "counts",
    "greets",
    "lifts",
    "shares",
    "sells",
    "feeds",
    "opens",
    "closes",
    "crosses",
    "measures",
    "borrows",
    "collects",
    "delivers",
    "explores",
    "gathers",
    "hears",
    "ignores",
    "joins",
    "keeps",
    "leaves",
    "maps",
    "notices",
    "orders",
    "passes",
    "polishes",
    "reaches",
    "remembers",
    "saves",
    "sketches",
    "studies",
    "teaches",
    "trades",
    "trusts",
    "unlocks",
    "warms",
    "washes",
    "welcomes",
    "wraps",
    "answers",
    "admires",
    "describes",
    "fetches",
    "guides",
    "hides",
    "inspects",
    "loads",
    "mends",
    "names",
    "praises",
    "rescues",
    "signals",
    "tends",
    "tows",
    "weighs",
];

pub const ADVERBS: &[&str] = &[
    "slowly",
    "quickly",
    "carefully",
    "quietly",
    "often",
    "rarely",
    "gladly",
    "early",
    "late",
    "again",
    "softly",
    "boldly",
    "calmly",
    "eagerly",
    "gently",
    "happily",
    "loudly",
    "neatly",
    "politely",
    "proudly",
    "safely",
    "simply",
    "warmly",
    "wisely",
];

pub const PLACES: &[&str] = &[
    "north",
    "south",
    "harbor_town",
    "hill_road",
    "market_square",
    "east_gate",
    "west_bank",
    "old_quarter",
    "river_bend",
    "pine_ridge",
    "stone_bridge",
    "high_street",
    "lake_shore",
    "mill_lane",
    "oak_grove",
    "salt_flats",
    "sunny_slope",
    "upper_field",
    "low_meadow",
    "far_coast",
    "red_cliff",
    "blue_bay",
    "ash_hollow",
    "cedar_point",
    "dry_creek",
    "elm_court",
    "fox_den",
    "glen_park",
    "iron_gate",
    "juniper_way",
    "kings_road",
    "long_wharf",
    "maple_row",
    "north_pier",
    "orchard_hill",
    "pebble_beach",
    "quarry_road",
    "rose_garden",
    "south_dock",
    "twin_lakes",
];

pub const NAMES: &[&str] = &[
    "ada", "bram", "cora", "dov", "elin", "finn", "greta", "hugo", "ines", "jon", "kara", "lev", "mira", "nils",
    "olga", "piet", "rosa", "sven", "tove", "ulla", "vera", "wim", "xena", "yara", "zeno", "anja", "bodil", "carl",
    "dana", "emil", "frida", "gus",
];

pub const PREPOSITIONS: &[&str] = &[
    "near", "behind", "beside", "under", "above", "across", "around", "inside",
];

pub const CONNECTIVES: &[&str] = &["and", "while", "because", "after", "before", "so", "but", "until"];

const ONSETS: &[&str] = &[
    "z", "qu", "vr", "xh", "kl", "bj", "tz", "gr", "pf", "dw", "sn", "yr", "fj", "mb", "wr", "hv",
];
const VOWELS: &[&str] = &["a", "o", "u", "ei", "ae", "y", "oo", "ix"];
const CODAS: &[&str] = &["x", "rk", "lf", "zz", "q", "th", "mp", "vn", "sk", "gl"];

/// An invented word built from syllable tables; deterministic in `code`.
pub fn invented_word(code: u64) -> String {
    let mut c = code;
    let mut pick = |table: &[&str]| {
        let s = table[(c % table.len() as u64) as usize];
        c /= table.len() as u64;
        s.to_owned()
    };
    let mut w = String::new();
    w += &pick(ONSETS);
    w += &pick(VOWELS);
    w += &pick(CODAS);
    w += &pick(VOWELS);
    w += &pick(CODAS);
    w
}

pub fn is_clean_word(w: &str) -> bool {
    [
        NOUNS,
        ADJECTIVES,
        VERBS,
        ADVERBS,
        PLACES,
        NAMES,
        PREPOSITIONS,
        CONNECTIVES,
    ]
    .iter()
    .any(|list| list.contains(&w))
}
