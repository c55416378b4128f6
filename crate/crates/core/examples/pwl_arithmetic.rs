//! Exact piecewise-linear arithmetic: the building blocks of labels and
//! cumulative flows.

use nashflow::num::{int, ratio};
use nashflow::{PiecewiseConstant, PiecewiseLinear};

pub fn main() {
    // a queue that builds at rate 2 on [1, 3) and drains at rate 1 afterwards
    let rate = PiecewiseConstant::new(int(0), vec![(int(1), int(2)), (int(3), int(-1))]).unwrap();
    let queue = rate.integral(&int(0));
    println!("z(3) = {}, z(4) = {}", queue.eval(&int(3)), queue.eval(&int(4)));
    assert_eq!(queue.eval(&int(3)), int(4));

    // the queue passes length 1 once while building and once while draining
    let hits = queue.level_points(&int(1));
    println!("z = 1 at θ = {} and θ = {}", hits[0], hits[1]);
    assert_eq!(hits, vec![ratio(3, 2), int(6)]);
    // first time the queue reaches 3
    assert_eq!(queue.first_crossing(&int(3), &int(0)), Some(ratio(5, 2)));

    // exit time through an arc with transit 1 and outflow capacity 2
    let exit = PiecewiseLinear::identity().add(&queue.scale(&ratio(1, 2))).add_constant(&int(1));
    // composing exit times along a path stays exact
    let path = exit.compose(&exit);
    println!("two arcs in a row, entering at 2: leave at {}", path.eval(&int(2)));
    assert_eq!(path.eval(&int(2)), ratio(13, 2));

    let lower = PiecewiseLinear::pointwise_min(&[exit.clone(), PiecewiseLinear::identity().add_constant(&int(2))]).unwrap();
    println!("breakpoints of min: {:?}", lower.breakpoints().map(|t| t.to_string()).collect::<Vec<_>>());
}
