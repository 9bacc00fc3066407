//! Resolution-grid coverage: cell counts of sub-boxes and the lower/upper
//! bounds of a clustering, checked against full cell enumeration.

use boxmon::coverage::exact_coverage_of_boxes;
use boxmon::{clustering_coverage, exact_coverage_oracle, Hyperbox, ResolutionGrid, Vector};

fn pts(rows: &[[f64; 2]]) -> boxmon::Result<Vec<Vector>> {
    rows.iter().map(|r| Vector::new(r.to_vec())).collect()
}

fn main() -> boxmon::Result<()> {
    let x1 = pts(&[[0.1, 0.5], [0.1, 1.0], [0.2, 0.8]])?;
    let x2 = pts(&[[0.6, 0.2], [1.0, 0.3]])?;
    let all: Vec<Vector> = x1.iter().chain(&x2).cloned().collect();

    // default resolution is the number of points
    let grid = ResolutionGrid::for_points(&all, None)?;
    println!("grid: resolution {} over {} cells", grid.resolution(), grid.total_cells());

    for block in [&x1, &x2] {
        let b = Hyperbox::of(block)?;
        println!(
            "{b}: {} cells, coverage {}",
            grid.covered_cell_count(&b)?,
            grid.subbox_coverage(&b)?
        );
    }

    let parts = vec![x1.clone(), x2.clone()];
    let est = clustering_coverage(&all, &parts, None)?;
    let exact = exact_coverage_oracle(&all, &parts, None)?;
    println!("two clusters: bounds {est}, enumerated {exact}");

    let single = vec![all.clone()];
    println!("one cluster:  bounds {}", clustering_coverage(&all, &single, None)?);

    // Overlapping boxes: the bounds separate, enumeration lands in between.
    let grid = ResolutionGrid::new(&Hyperbox::from_bounds(&[(0.0, 1.0), (0.0, 1.0)])?, 10)?;
    let boxes = vec![
        Hyperbox::from_bounds(&[(0.0, 0.55), (0.0, 0.55)])?,
        Hyperbox::from_bounds(&[(0.45, 1.0), (0.45, 1.0)])?,
    ];
    let est = boxmon::coverage::coverage_of_boxes(&grid, &boxes)?;
    let exact = exact_coverage_of_boxes(&grid, &boxes)?;
    println!("overlapping boxes: bounds {est}, enumerated {exact}");
    Ok(())
}
