use ddid_milp::{bnb_solve, read_lp, read_solution, write_lp, BnbParams, LpStatus, MilpModel, Sense};
use proptest::prelude::*;

fn sample() -> MilpModel {
    let mut m = MilpModel::new();
    let eta = m.add_continuous("eta", f64::NEG_INFINITY, f64::INFINITY);
    let x = m.add_continuous("x", -1.5, 10.0);
    let y = m.add_continuous("y", 2.0, f64::INFINITY);
    let k = m.add_integer("k", -3.0, 7.0);
    let w = m.add_binary("w_1");
    let fixed = m.add_continuous("fixed", 4.0, 4.0);
    let below = m.add_continuous("below", f64::NEG_INFINITY, 3.25);
    m.add_constraint("c1", vec![(eta, 1.0), (x, -2.5), (w, 3.0)], Sense::Ge, -1.0);
    m.add_constraint("c2", vec![(x, 1.0), (y, 1.0), (k, 1e-3)], Sense::Le, 12.0);
    m.add_constraint("c3", vec![(k, 1.0), (w, -7.0), (fixed, 1.0), (below, 0.5)], Sense::Eq, 0.0);
    m.set_objective(vec![(eta, 1.0), (k, -0.125)]);
    m.metadata.permutation = Some(vec![2, 0, 1]);
    m.metadata.digest = Some("abc123".into());
    m
}

#[test]
fn round_trip_preserves_structure() {
    let m = sample();
    let text = write_lp(&m);
    let back = read_lp(&text).unwrap();
    assert_eq!(back, m);
    assert_eq!(write_lp(&back), text);
}

#[test]
fn written_model_solves_after_reading() {
    let mut m = MilpModel::new();
    let x1 = m.add_binary("x1");
    let x2 = m.add_binary("x2");
    m.add_constraint("c", vec![(x1, 1.0), (x2, 1.0)], Sense::Le, 1.0);
    m.set_objective(vec![(x1, -1.0), (x2, -1.0)]);
    let back = read_lp(&write_lp(&m)).unwrap();
    let s = bnb_solve(&back, &BnbParams::default());
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 1.0).abs() < 1e-9);
}

#[test]
fn solution_map() {
    let m = sample();
    let map = read_solution("w_1 1\n", &m).unwrap();
    assert_eq!(map.len(), 1);
    assert_eq!(map["w_1"], 1.0);
    assert!(read_solution("", &m).unwrap().is_empty());
    assert!(read_solution("nope 3\n", &m).is_err());
    assert!(read_solution("w_1 x\n", &m).is_err());
}

#[test]
fn long_rows_wrap_and_still_parse() {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..40).map(|i| m.add_binary(format!("x{i}"))).collect();
    m.add_constraint("card", xs.iter().map(|&x| (x, 1.0)).collect(), Sense::Eq, 5.0);
    m.set_objective(xs.iter().enumerate().map(|(i, &x)| (x, i as f64)).collect());
    let text = write_lp(&m);
    assert!(text.lines().all(|l| l.len() < 256));
    assert_eq!(read_lp(&text).unwrap(), m);
}

fn arb_model() -> impl Strategy<Value = MilpModel> {
    let var = (-1000i32..1000, 0u32..2000, 0u8..6);
    (prop::collection::vec(var, 1..12), prop::collection::vec(any::<u64>(), 0..8)).prop_map(|(vars, seeds)| {
        let mut m = MilpModel::new();
        let n = vars.len();
        for (i, (lo, width, kind)) in vars.into_iter().enumerate() {
            let lo = lo as f64 / 8.0;
            let hi = lo + width as f64 / 16.0;
            match kind {
                0 => m.add_continuous(format!("v{i}"), f64::NEG_INFINITY, f64::INFINITY),
                1 => m.add_continuous(format!("v{i}"), lo, f64::INFINITY),
                2 => m.add_continuous(format!("v{i}"), f64::NEG_INFINITY, hi),
                3 => m.add_binary(format!("v{i}")),
                4 => m.add_integer(format!("v{i}"), lo.floor(), lo.floor() + (width % 9) as f64),
                _ => m.add_continuous(format!("v{i}"), lo, hi),
            };
        }
        let ids: Vec<_> = (0..n).map(|i| m.var_by_name(&format!("v{i}")).unwrap()).collect();
        for (r, seed) in seeds.iter().enumerate() {
            let coeffs = ids
                .iter()
                .enumerate()
                .filter(|(j, _)| (seed >> (j % 64)) & 1 == 1)
                .map(|(j, &v)| (v, ((seed.rotate_left(j as u32) % 41) as f64 - 20.0) / 4.0))
                .collect();
            let sense = [Sense::Le, Sense::Eq, Sense::Ge][(seed % 3) as usize];
            m.add_constraint(format!("row{r}"), coeffs, sense, ((seed >> 32) % 100) as f64 - 50.0);
        }
        m.set_objective(ids.iter().map(|&v| (v, (v.0 as f64) - 3.0)).collect());
        m
    })
}

proptest! {
    #[test]
    fn write_then_read_is_identity(m in arb_model()) {
        let back = read_lp(&write_lp(&m)).unwrap();
        prop_assert_eq!(back, m);
    }
}
