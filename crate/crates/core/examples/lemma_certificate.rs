//! Positive-definiteness certificate for R_o on a few graph shapes, and the
//! rejection of a graph whose observers cannot reach the plant.
//!
//! cargo run --example lemma_certificate

use nalgebra::{RowVector3, Vector2};
use qobserver::graph::ObserverGraph;
use qobserver::spin_algebra::PlantSpec;
use qobserver::synthesis::{build_realization, certify_positive_definite, CouplingScheme};

fn main() -> qobserver::Result<()> {
    let plant = PlantSpec::free(RowVector3::new(0.0, 1.0, 0.0))?;
    let scheme = CouplingScheme::new(Vector2::new(0.6, 0.8), &plant)?;
    let graphs = [
        ("path(6)", ObserverGraph::path(6, 0.5)),
        ("star(6)", ObserverGraph::star(6, 0.5)),
        ("complete(6)", ObserverGraph::complete(6, 0.5)),
    ];
    for (name, g) in graphs {
        let cert = certify_positive_definite(&build_realization(&g, &scheme)?)?;
        println!(
            "{name:<12} lambda_min = {:.4e}  lambda_max = {:.4e}  comparison lambda_min = {:.4e}",
            cert.lambda_min, cert.lambda_max, cert.comparison_lambda_min
        );
    }
    let split = ObserverGraph::from_edges(3, [(0, 1, 1.0), (2, 3, 1.0)])?;
    match build_realization(&split, &scheme) {
        Ok(_) => println!("unexpected: disconnected graph accepted"),
        Err(e) => println!("disconnected graph rejected: {e}"),
    }
    Ok(())
}
