//! Framing, stream parsing and the output mux.

use kindergarten::channel::{frame, parse_stream, symbols, text_of, AgentId, Mux, StreamSide, Writer};

fn main() {
    let msg = frame("I move", AgentId::Environment, AgentId::Learner).unwrap();
    println!("framed: {msg:?}");

    // anything goes between terminators; unaddressed text is kept as garbage
    let (msgs, rest) = parse_stream(&symbols("xq. @E: I move. @T: hal").unwrap(), StreamSide::Output);
    for m in &msgs {
        println!("{:?} <- {:?}", m.addressee, m.body);
    }
    println!("unfinished: {rest:?}");

    // the Teacher outranks the Environment; messages are never interleaved
    let mut mux = Mux::new();
    mux.enqueue(Writer::Environment, "E: you moved.", None);
    mux.enqueue(Writer::Teacher, "T: well done.", None);
    let mut out = Vec::new();
    for _ in 0..32 {
        out.push(mux.next_symbol().0);
    }
    println!("on the wire: {:?}", text_of(&out));
}
