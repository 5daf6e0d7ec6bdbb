use paramck::automaton::Pta;
use paramck::formula::parse_query;
use paramck::synthesis::model_check;
use std::time::Instant;

fn main() {
    let src = "\
params t1 t2
state q0 init
state q1 label good inv x <= t1
state q2 label bad inv x <= t2
edge q0 -> 1 q0
edge q0 -> 0 q1 reset guard x >= t2
edge q1 -> 1 q1
edge q1 -> 0 q2 guard x = t1
edge q2 -> 1 q2
edge q2 -> 1 q0 reset
";
    let pta = Pta::parse(src).unwrap();
    let forms = [
        "EF good",
        "EF bad",
        "EF[<= t2] bad",
        "EG !bad",
        "E(!bad U[>= t1] good)",
        "AF[<= 4] (good | bad)",
        "AG (good -> AF bad)",
        "t1 >= t2 & EX good",
    ];
    for text in forms {
        let t0 = Instant::now();
        let full = format!("forall t1. forall t2. {text}");
        let q = parse_query(&full).unwrap();
        let r = model_check(&pta, "q0", 0, &Default::default(), &q);
        eprintln!("{text}: {:?} -> {:?}", t0.elapsed(), r.map(|_| ()));
    }
}
