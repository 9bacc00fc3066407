//! Tight box abstraction of a point set, membership and intersection.

use boxmon::{Hyperbox, Vector};

fn main() -> boxmon::Result<()> {
    let points: Vec<Vector> = [[0.1, 0.5], [0.1, 1.0], [0.2, 0.8], [0.6, 0.2], [1.0, 0.3]]
        .iter()
        .map(|p| Vector::new(p.to_vec()))
        .collect::<boxmon::Result<_>>()?;

    let global = Hyperbox::of(&points)?;
    println!("box of all points: {global}");

    let left = Hyperbox::of(&points[..3])?;
    let right = Hyperbox::of(&points[3..])?;
    println!("left cluster:  {left}");
    println!("right cluster: {right}");
    println!("sub-boxes of the global box: {} {}", left.is_subbox_of(&global)?, right.is_subbox_of(&global)?);

    match left.intersect(&right)? {
        Some(b) => println!("clusters overlap in {b}"),
        None => println!("clusters are disjoint"),
    }

    for probe in [[0.15, 0.9], [0.5, 0.5], [1.0, 0.2]] {
        println!(
            "{probe:?}: in global={} in left={} in right={}",
            global.contains(&probe)?,
            left.contains(&probe)?,
            right.contains(&probe)?
        );
    }
    Ok(())
}
