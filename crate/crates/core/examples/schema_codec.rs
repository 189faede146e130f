//! The message codec on its own: formatting and parsing the schema tag,
//! the free-text decoder, and every stage of schema enforcement.
//!
//!     cargo run --example schema_codec

use std::convert::Infallible;

use sign_game::codec::{decode_free_text, enforce_schema, format_schema, parse_schema, RawMessage};
use sign_game::config::FallbackMode;
use sign_game::rng::{derive_rng, FALLBACK};
use sign_game::{make_lexicon, NameId};

fn main() {
    let lexicon = make_lexicon(12).unwrap();
    println!("lexicon: {}", lexicon.labels().join(" "));

    let c7 = NameId::new(7).unwrap();
    let tag = format_schema(c7);
    println!(
        "\n{c7} formats as {:?} ({} tokens)",
        tag.text, tag.token_count
    );

    for text in [
        "@say {name: C7}",
        "Sure! @say {name:C3} is my pick",
        "@say {name: C13}",
        "@say {name: Seven}",
        "I would go with C4.",
    ] {
        println!(
            "parse_schema({text:?}) = {:?}",
            parse_schema(text, &lexicon)
        );
    }

    println!();
    for text in [
        "let's use C11 today",
        "C1O looks odd",
        "either C2 or C9",
        "C012",
        "nothing here",
    ] {
        let decoded = decode_free_text(text, &lexicon);
        println!(
            "free text {text:?} -> {}",
            decoded.map_or("None".into(), |n| n.to_string())
        );
    }

    // Enforcement: first try, reminder retry, free text, fallback.
    println!();
    let mut rng = derive_rng(1, FALLBACK);
    let cases = [
        ("@say {name: C5}", "(not asked)", FallbackMode::RandomName),
        ("hmm", "@say {name: C9}", FallbackMode::RandomName),
        ("hmm", "okay, C2 then", FallbackMode::RandomName),
        ("hmm", "still thinking", FallbackMode::RandomName),
        ("hmm", "still thinking", FallbackMode::None),
    ];
    for (first, retry, fallback) in cases {
        let enforced = enforce_schema::<Infallible>(
            &RawMessage::local(first),
            || Ok(RawMessage::local(retry)),
            &lexicon,
            fallback,
            &mut rng,
        )
        .unwrap();
        let o = enforced.outcome;
        println!(
            "{first:>16} | {retry:<16} => {:<5} stage={:?} compliant={} extra_tokens={}",
            o.name.map_or("None".into(), |n| n.to_string()),
            o.stage,
            o.compliant,
            o.extra_tokens
        );
    }
}
