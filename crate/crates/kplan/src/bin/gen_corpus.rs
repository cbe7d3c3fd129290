//! Regenerates the parametric bomb-disposal fixtures in the corpus
//! directory. The hand-written fixtures and the manifest are not touched.
//!
//! Usage: gen-corpus [OUTPUT_DIR]   (default: corpus)

use std::fmt::Write as _;
use std::path::Path;

fn packages(p: usize) -> String {
    let mut s = String::new();
    for i in 1..=p {
        let _ = writeln!(s, "package({i}).");
    }
    s
}

fn toilets(t: usize) -> String {
    let mut s = String::new();
    for i in 1..=t {
        let _ = writeln!(s, "toilet({i}).");
    }
    s
}

fn goal(j: usize) -> String {
    format!("goal : not unsafe ? ({j})\n")
}

/// One toilet, completed initial state; the bomb is in exactly one package.
fn bt(j: usize) -> String {
    let mut s = String::from(
        "fluents : armed(P) requires package(P).
          unsafe.
actions : dunk(P) requires package(P).
always :  inertial armed(P).
          caused -armed(P) after dunk(P).
          caused unsafe if armed(P).
          executable dunk(P).
initially : total armed(P).
          forbidden armed(P), armed(P1), P <> P1.
          forbidden not unsafe.
",
    );
    s.push_str(&goal(j));
    s
}

/// Dunking clogs the toilet; flushing unclogs it.
fn btc(j: usize, uncertain: bool) -> String {
    let clog_effect = if uncertain {
        "total clogged after dunk(P)."
    } else {
        "caused clogged after dunk(P)."
    };
    let mut s = format!(
        "fluents : armed(P) requires package(P).
          clogged. unsafe.
actions : dunk(P) requires package(P).
          flush.
always :  inertial armed(P).
          inertial clogged.
          caused -armed(P) after dunk(P).
          caused -clogged after flush.
          {clog_effect}
          caused unsafe if armed(P).
          executable flush.
          executable dunk(P) if not clogged.
initially : total armed(P).
          forbidden armed(P), armed(P1), P <> P1.
          forbidden not unsafe.
"
    );
    s.push_str(&goal(j));
    s
}

/// Multiple toilets usable in parallel.
fn bmtc(j: usize, uncertain: bool) -> String {
    let clog_effect = if uncertain {
        "total clogged(T) after dunk(P,T)."
    } else {
        "caused clogged(T) after dunk(P,T)."
    };
    let mut s = format!(
        "fluents : clogged(T) requires toilet(T).
          armed(P) requires package(P).
          unsafe.
actions : dunk(P,T) requires package(P), toilet(T).
          flush(T) requires toilet(T).
always :  inertial armed(P).
          inertial clogged(T).
          caused -clogged(T) after flush(T).
          caused -armed(P) after dunk(P,T).
          {clog_effect}
          caused unsafe if armed(P).
          executable flush(T).
          executable dunk(P,T) if not clogged(T).
          nonexecutable dunk(P,T) if flush(T).
          nonexecutable dunk(P,T) if dunk(P1,T), P <> P1.
          nonexecutable dunk(P,T) if dunk(P,T1), T <> T1.
initially : total armed(P).
          forbidden armed(P), armed(P1), P <> P1.
          forbidden not unsafe.
"
    );
    s.push_str(&goal(j));
    s
}

/// One toilet, open initial state: nothing is known about armed/2 and the
/// goal asks that every package is known to be disarmed.
fn btk(j: usize) -> String {
    let mut s = String::from(
        "fluents : armed(P) requires package(P).
          unsafe.
actions : dunk(P) requires package(P).
always :  inertial -armed(P).
          caused -armed(P) after dunk(P).
          caused unsafe if not -armed(P).
          executable dunk(P).
",
    );
    s.push_str(&goal(j));
    s
}

fn btck(j: usize) -> String {
    let mut s = String::from(
        "fluents : armed(P) requires package(P).
          clogged. unsafe.
actions : dunk(P) requires package(P).
          flush.
always :  inertial -armed(P).
          inertial clogged.
          caused -armed(P) after dunk(P).
          caused -clogged after flush.
          caused clogged after dunk(P).
          caused unsafe if not -armed(P).
          executable flush.
          executable dunk(P) if not clogged.
",
    );
    s.push_str(&goal(j));
    s
}

/// Uncertain clogging modelled as loss of knowledge: inertia for clogged
/// is switched off in the step after a dunk.
fn btuck(j: usize) -> String {
    let mut s = String::from(
        "fluents : armed(P) requires package(P).
          clogged. dunked. unsafe.
actions : dunk(P) requires package(P).
          flush.
always :  inertial -armed(P).
          inertial clogged if not dunked.
          inertial -clogged if not dunked.
          caused dunked after dunk(P).
          caused -armed(P) after dunk(P).
          caused -clogged after flush.
          caused unsafe if not -armed(P).
          executable flush.
          executable dunk(P) if -clogged.
initially : -clogged.
",
    );
    s.push_str(&goal(j));
    s
}

fn bmtck(j: usize) -> String {
    let mut s = String::from(
        "fluents : clogged(T) requires toilet(T).
          armed(P) requires package(P).
          unsafe.
actions : dunk(P,T) requires package(P), toilet(T).
          flush(T) requires toilet(T).
always :  inertial -armed(P).
          inertial clogged(T).
          caused -clogged(T) after flush(T).
          caused clogged(T) after dunk(P,T).
          caused -armed(P) after dunk(P,T).
          caused unsafe if not -armed(P).
          executable flush(T).
          executable dunk(P,T) if not clogged(T).
          nonexecutable dunk(P,T) if flush(T).
          nonexecutable dunk(P,T) if dunk(P1,T), P <> P1.
          nonexecutable dunk(P,T) if dunk(P,T1), T <> T1.
",
    );
    s.push_str(&goal(j));
    s
}

fn bmtuck(j: usize) -> String {
    let mut s = String::from(
        "fluents : clogged(T) requires toilet(T).
          armed(P) requires package(P).
          dunked(T) requires toilet(T).
          unsafe.
actions : dunk(P,T) requires package(P), toilet(T).
          flush(T) requires toilet(T).
always :  inertial -armed(P).
          inertial clogged(T) if not dunked(T).
          inertial -clogged(T) if not dunked(T).
          caused dunked(T) after dunk(P,T).
          caused -clogged(T) after flush(T).
          caused -armed(P) after dunk(P,T).
          caused unsafe if not -armed(P).
          executable flush(T).
          executable dunk(P,T) if -clogged(T).
          nonexecutable dunk(P,T) if flush(T).
          nonexecutable dunk(P,T) if dunk(P1,T), P <> P1.
          nonexecutable dunk(P,T) if dunk(P,T1), T <> T1.
initially : -clogged(T).
",
    );
    s.push_str(&goal(j));
    s
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "corpus".to_string());
    let dir = Path::new(&out);
    std::fs::create_dir_all(dir).expect("create output dir");
    let write = |name: &str, text: String| {
        std::fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("{name}: {e}"));
    };
    for p in 1..=3usize {
        write(&format!("packages-p{p}.bg"), packages(p));
        for t in 1..=2usize {
            write(&format!("packages-p{p}-t{t}.bg"), format!("{}{}", packages(p), toilets(t)));
        }
        write(&format!("bt-p{p}-j1.k"), bt(1));
        write(&format!("bt-p{p}-j{p}.k"), bt(p));
        let (lo, hi) = (2 * p - 2, 2 * p - 1);
        write(&format!("btc-p{p}-j{hi}.k"), btc(hi, false));
        write(&format!("btc-p{p}-j{lo}.k"), btc(lo, false));
        write(&format!("btuc-p{p}-j{hi}.k"), btc(hi, true));
        write(&format!("btuc-p{p}-j{lo}.k"), btc(lo, true));
        write(&format!("btk-p{p}-j1.k"), btk(1));
        write(&format!("btk-p{p}-j{p}.k"), btk(p));
        write(&format!("btck-p{p}-j{hi}.k"), btck(hi));
        write(&format!("btuck-p{p}-j{hi}.k"), btuck(hi));
        for t in 1..=2usize {
            let jm = 2 * p.div_ceil(t) - 1;
            write(&format!("bmtc-p{p}-t{t}-j{jm}.k"), bmtc(jm, false));
            write(&format!("bmtuc-p{p}-t{t}-j{jm}.k"), bmtc(jm, true));
            write(&format!("bmtck-p{p}-t{t}-j{jm}.k"), bmtck(jm));
            write(&format!("bmtuck-p{p}-t{t}-j{jm}.k"), bmtuck(jm));
            if jm > 1 {
                write(&format!("bmtc-p{p}-t{t}-j{}.k", jm - 1), bmtc(jm - 1, false));
            }
        }
    }
    println!("wrote bomb fixtures to {}", dir.display());
}
