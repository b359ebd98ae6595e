//! Permutation tests on hand-built response vectors shaped like one run of a
//! ten-unit ad experiment, plus the nonce test, a sampled test and χ².
//!
//!     cargo run --release --example permutation_tests

use flowexp::stats::{
    chi2_2x2, keyword_table, nonce_p_closed, permutation_test, stat_kw, stat_nonce, stat_sim, AdRecord, Method,
    PermutationOptions, Response, ResponseVector,
};

fn unit(urls: &[&str]) -> Response {
    Response::from_reloads(vec![urls.iter().map(|u| AdRecord::new(*u, format!("offer at {u}"))).collect()])
}

fn main() -> flowexp::Result<()> {
    // experimental units see only car ads, controls none
    let cars = ["bmw.example", "audi.example", "dealer-car.example"];
    let plain = ["shoes.example", "news.example", "travel.example"];
    let mut responses: Vec<Response> = (0..5).map(|i| unit(&[cars[i % 3], cars[(i + 1) % 3]])).collect();
    responses.extend((0..5).map(|i| unit(&[plain[i % 3], plain[(i + 1) % 3]])));
    let run = ResponseVector::new(responses, 5, 5)?.with_labels("cars", "idle");
    let y = &run;
    let keywords: Vec<String> = ["bmw", "audi", "car"].map(String::from).to_vec();

    let partition = PermutationOptions::default().method(Method::Partition);
    let sim = permutation_test(&stat_sim(), y, &partition)?;
    let kw = permutation_test(&stat_kw(&keywords)?, y, &partition)?;
    println!("sim: p = {:.6} over {} partitions", sim.p_value, sim.comparisons);
    println!("kw:  p = {:.6} over {} partitions", kw.p_value, kw.comparisons);

    let exact = permutation_test(&stat_kw(&keywords)?, y, &PermutationOptions::default().method(Method::Exact))?;
    println!("kw, all 10! orderings: p = {:.6}", exact.p_value);

    let sampled = PermutationOptions::default().method(Method::MonteCarlo).seed(7).samples(20_000);
    let mc = permutation_test(&stat_kw(&keywords)?, y, &sampled)?;
    println!("kw, sampled: p = {:.6} ± {:.6}", mc.p_value, mc.mc_stderr.unwrap_or(0.0));

    // nonce seen in the first response and two others among 50
    let mut responses: Vec<Response> = vec![unit(&["x7f3.example"])];
    responses.extend((1..50).map(|i| unit(&[if i % 20 == 0 { "x7f3.example" } else { "news.example" }])));
    let y = ResponseVector::new(responses, 1, 49)?;
    let nonce = permutation_test(&stat_nonce("x7f3")?, &y, &partition)?;
    println!("nonce: p = {:.6} (closed form {:.6})", nonce.p_value, nonce_p_closed(&y, "x7f3")?);

    let table = keyword_table(&run, &keywords)?;
    let r = chi2_2x2(table, false)?;
    println!("chi2 on pooled ads {table:?} = {:.1}, p = {:.6e}", r.statistic, r.p_value);
    Ok(())
}
