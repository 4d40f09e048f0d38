//! Superlinearity margins and the local existence exponent range.
use kg_blowup::NonlinearityModel;

fn main() -> kg_blowup::Result<()> {
    for p in [1.5, 2.0, 3.0, 5.0] {
        let m = NonlinearityModel::power(p)?;
        let r = m.verify_superlinearity(10.0, 1000)?;
        println!("p = {p}: eps = {}, superlinear = {}, max eps on samples = {:.12}", m.epsilon, r.ok, r.max_eps);
    }
    let too_wide = NonlinearityModel::pure_power(3.0, 1.0, Some(2.5))?;
    println!("p = 3 with eps = 2.5: {:?}", too_wide.verify_superlinearity(10.0, 1000)?.violation);

    for (p, n) in [(3.0, 1), (3.0, 2), (2.9, 3), (3.0, 3)] {
        let verdict = match NonlinearityModel::power(p)?.verify_local_existence_hypotheses(n) {
            Ok(()) => "ok".to_string(),
            Err(v) => v.to_string(),
        };
        println!("local existence p = {p}, n = {n}: {verdict}");
    }
    Ok(())
}
