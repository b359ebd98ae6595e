//! Conditioning versus intervening in a small SEM, and effect queries.
//!
//!     cargo run --example sem_interventions

use flowexp::prob::format_rational;
use flowexp::sem::{Intervention, Sem, DEFAULT_EFFECT_BUDGET};

fn main() -> flowexp::Result<()> {
    let sem = Sem::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ads.sem.toml"))?;
    let (weather, visit, ad) = (sem.var("Weather").unwrap(), sem.var("Visit").unwrap(), sem.var("Ad").unwrap());
    println!("order: {:?}", sem.order().iter().map(|v| &sem.variable(*v).name).collect::<Vec<_>>());

    let p1 = |d: &flowexp::prob::Distribution<Vec<usize>>| format_rational(&d.prob(&vec![1]));
    for x in 0..2 {
        let seen = sem.conditional(&[ad], &[(visit, x)].into_iter().collect())?;
        let done = sem.intervene(&Intervention::new().set(visit, x))?.distribution(&[ad])?;
        println!(
            "P(Ad=1 | Visit={x}) = {:>5}   P(Ad=1 | do(Visit={x})) = {}",
            seen.as_ref().map(p1).unwrap_or_else(|| "undef".into()),
            p1(&done)
        );
    }

    let v = sem.has_effect(&[visit], &[ad], &Intervention::new(), DEFAULT_EFFECT_BUDGET)?;
    println!("Visit -> Ad: {v:?}");
    let v = sem.has_effect(&[ad], &[visit], &Intervention::new(), DEFAULT_EFFECT_BUDGET)?;
    println!("Ad -> Visit: {v:?}");
    match sem.has_effect(&[weather], &[ad], &Intervention::new(), DEFAULT_EFFECT_BUDGET) {
        Err(e) => println!("Weather -> Ad: {e}"),
        Ok(v) => println!("Weather -> Ad: {v:?}"),
    }
    Ok(())
}
