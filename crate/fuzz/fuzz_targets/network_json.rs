#![no_main]

use libfuzzer_sys::fuzz_target;
use reluapprox::ReluNetwork;

fuzz_target!(|data: &[u8]| {
    if let Ok(net) = ReluNetwork::deserialize(data) {
        let x = vec![0.5; net.input_dim()];
        let _ = net.evaluate(&x);
        let again = ReluNetwork::deserialize(&net.serialize()).expect("serialized network parses");
        assert_eq!(again, net);
    }
});
