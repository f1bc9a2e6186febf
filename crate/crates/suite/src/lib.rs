//! Holds the acceptance test target (`cargo test -p stochstab-suite`). The
//! package runs after every other workspace package, so a failing criterion
//! never hides the results of the remaining test targets.
