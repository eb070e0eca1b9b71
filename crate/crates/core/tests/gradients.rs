mod common;

use common::{gradient_check, gradcheck_setup, loss};
use g2t_core::model::backward;

#[test]
fn analytic_gradients_match_central_differences() {
    let r = gradient_check(11, 3, 1e-4);
    assert!(r.checked >= 200, "only {} coordinates", r.checked);
    assert!(r.max_rel_error < 1e-4, "max relative error {:e} at {}", r.max_rel_error, r.worst);
}

#[test]
fn gradients_are_deterministic() {
    let (p, enc, dec, tgt) = gradcheck_setup(4);
    let a = backward(&p, &enc, &dec, &tgt).unwrap();
    let b = backward(&p, &enc, &dec, &tgt).unwrap();
    assert_eq!(a, b);
    assert!(loss(&p, &enc, &dec, &tgt) > 0.0);
}
