//! The two regression oracles: exhaustive ERM over a finite class and ridge
//! least squares over linear predictors.

use falcon::domain::{Context, InteractionLog};
use falcon::oracle::{erm_least_squares, linear_least_squares, squared_loss};
use falcon::FiniteFunctionClass;

fn main() -> falcon::Result<()> {
    let tables = vec![
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        vec![vec![0.1, 0.9], vec![0.8, 0.2]],
        vec![vec![0.9, 0.1], vec![0.8, 0.2]],
    ];
    let class = FiniteFunctionClass::new(&tables)?;
    let mut log = InteractionLog::new();
    for (x, a, r) in [
        (0, 0, 1.0),
        (0, 1, 0.0),
        (1, 1, 1.0),
        (1, 0, 0.0),
        (0, 0, 1.0),
        (1, 1, 1.0),
    ] {
        log.push(Context::Index(x), a, r);
    }
    for f in class.members() {
        println!(
            "f{} loss {:.3}",
            f.id().unwrap(),
            squared_loss(f, log.records())
        );
    }
    println!(
        "erm -> f{}",
        erm_least_squares(&class, log.records()).id().unwrap()
    );

    let theta = [0.6, -0.3, 0.2];
    let points: Vec<[f64; 3]> = (0..50)
        .map(|i| {
            let t = i as f64 * 0.37;
            [t.sin() * 0.5, t.cos() * 0.5, (2.0 * t).sin() * 0.4]
        })
        .collect();
    let data: Vec<(&[f64], f64)> = points
        .iter()
        .map(|p| (p.as_slice(), p.iter().zip(&theta).map(|(a, b)| a * b).sum()))
        .collect();
    let fit = linear_least_squares(3, 1e-8, &data)?;
    println!("\ntrue theta {theta:?}");
    println!("ridge fit  [{:.6}, {:.6}, {:.6}]", fit[0], fit[1], fit[2]);
    Ok(())
}
