//! Scratch probe over the corpus; prints per-fixture typing and verdicts.

use ni_core::corpus;
use ni_core::typesys::typecheck_program;
use ni_core::verifier::{verify, VerifyConfig};
use std::time::Instant;

fn main() {
    let dir = corpus::repo_corpus_dir();
    let fixtures = match corpus::fixtures(&dir) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("corpus load failed: {e}");
            std::process::exit(1);
        }
    };
    for f in &fixtures {
        println!("=== {} ===", f.name);
        let typing = typecheck_program(&f.program);
        for d in &typing.defs {
            match (&d.ty, d.errors.first()) {
                (Some(t), _) => println!("  {} : {}", d.name, t),
                (None, Some(e)) => println!("  {} : ERROR {} ({})", d.name, e.kind, e.message),
                _ => {}
            }
        }
        let t0 = Instant::now();
        match verify(&f.program, &f.name, &VerifyConfig::default()) {
            Ok(s) => {
                println!(
                    "  verdict: {} ({} pairs, {} states, {:?})",
                    s.overall,
                    s.pairs.len(),
                    s.pairs_explored_total,
                    t0.elapsed()
                );
                for p in &s.pairs {
                    if p.verdict.name() != "Secure" {
                        println!(
                            "    ({:?},{:?}) -> {}",
                            p.i,
                            p.j,
                            serde_json::to_string(&p.verdict).unwrap()
                        );
                        break;
                    }
                }
            }
            Err(e) => println!("  verify error: {e}"),
        }
    }
}
