//! Layers against independent naive-loop implementations on random small
//! instances (double precision, 1e-12 absolute).

mod common;
#[path = "suites/oracles.rs"]
mod suite;

#[test]
fn conv1d_matches_naive_loops() {
    suite::conv1d_matches_naive_loops();
}

#[test]
fn maxpool_matches_naive_loops() {
    suite::maxpool_matches_naive_loops();
}

#[test]
fn dense_matches_naive_loops() {
    suite::dense_matches_naive_loops();
}

#[test]
fn lstm_cell_matches_naive_loops() {
    suite::lstm_cell_matches_naive_loops();
}

#[test]
fn bilstm_two_steps_match_unrolled_oracle() {
    suite::bilstm_two_steps_match_unrolled_oracle();
}
