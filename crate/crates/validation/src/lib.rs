//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! criterion: `cargo test -p reluapprox-validation --test acceptance`.
