use entrain_core::pipeline::{analyze_session, ChannelInput, Params, SessionInput};
use entrain_core::synthgen::{self, SynthConfig};

fn main() {
    let mut cfg = SynthConfig::standard("s1", 44);
    cfg.n_turns = 12;
    cfg.n_tasks = 2;
    let dyad = synthgen::generate_dyad(&cfg).unwrap();
    let input = SessionInput {
        annotation: dyad.annotation.clone(),
        channels: dyad
            .channels
            .iter()
            .map(|(k, ch)| (k.clone(), ChannelInput { f0: ch.f0.clone(), audio: ch.audio.clone() }))
            .collect(),
    };
    let analysis = analyze_session(&input, &Params::default()).unwrap();
    for t in &dyad.truth {
        let tf = &analysis.features[t.turn_index];
        let turn = &dyad.annotation.turns[t.turn_index];
        println!(
            "turn {:2} {} dur {:.2} true_rate {:.2} got {:?}",
            t.turn_index,
            t.speaker,
            turn.end - turn.start,
            t.syl_rate,
            tf.get("rhy_en.syl.rate")
        );
    }
}
