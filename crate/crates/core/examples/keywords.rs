//! Keywords of table summaries and the closest repository items.

use scicafe_core::knowledge::*;

fn main() -> Result<(), KnowledgeError> {
    let tokenizer = Tokenizer::default();
    let corpus = Corpus::from_texts(
        [
            ("t0", "car sharing reduces traffic and car ownership in the city"),
            ("t1", "solar panels on school roofs teach pupils about energy"),
            ("t2", "city traffic data should be open to citizens"),
        ],
        &tokenizer,
    );
    for doc in corpus.documents() {
        let top = extract_keywords(&doc.id, &corpus, 3)?;
        println!("{}: {top:?}", doc.id);
    }

    let items = [
        ("mobility-report", KeywordVector::from_tokens(tokenizer.tokens("urban traffic and car use"))),
        ("energy-guide", KeywordVector::from_tokens(tokenizer.tokens("solar energy for schools"))),
    ];
    let profile = keyword_vector("t0", &corpus)?;
    let ranked = recommend(&profile, items.iter().map(|(id, v)| (*id, v)), 2);
    println!("recommended for t0: {ranked:?}");

    for m in recognize_entities("Meeting in Rome with the European Commission", &Gazetteer::shipped()) {
        println!("entity {m:?}");
    }
    Ok(())
}
