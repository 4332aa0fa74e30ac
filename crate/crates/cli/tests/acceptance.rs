//! End-to-end acceptance checks, one line per criterion.

use std::time::{Duration, Instant};

use ddid_cli::generate::{generate, GenSpec};
use ddid_cli::instance_file::Problem;
use ddid_core::milp::{simplex_solve, BnbParams, LpStatus, MilpModel, Sense};
use ddid_core::oracle::{
    cu_bruteforce, has_equal_partition, ou_bruteforce, phi_bruteforce, phi_bruteforce_split, psi_bruteforce,
    reduce_independent_set, reduce_partition, Graph, OracleLimits,
};
use ddid_core::{
    build_phi_lp, canonicalize, check_feasibility, phi_eval, phi_split, psi_closed_form, solve_cu, solve_knapsack,
    solve_selection, solve_selection_cu, sum_smallest, Backend, Cost, CuInstance, CuStatus, Feasibility, OuInstance,
    QueryFamily, SplitBudget,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LIM: OracleLimits = OracleLimits { max_n: 12, max_subsets: 1 << 22 };

type Check = Result<String, String>;

/// Name, check and wall-clock budget in seconds.
type Criterion = (&'static str, fn() -> Check, Option<f64>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ints(r: &mut impl Rng, n: usize, lo: i32, hi: i32) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..=hi) as f64).collect()
}

fn all_sets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
}

fn ou_instance(r: &mut impl Rng, n: usize) -> OuInstance {
    let gamma = r.gen_range(0..=n);
    OuInstance::new(ints(r, n, 0, 20), ints(r, n, 0, 20), gamma).unwrap()
}

fn cu_instance(r: &mut impl Rng, n: usize) -> CuInstance {
    let p = r.gen_range(1..=n);
    let b = r.gen_range(0..=p);
    let gamma = r.gen_range(0..=n);
    CuInstance::new(ints(r, n, -5, 20), p, b, gamma).unwrap()
}

fn knapsack(r: &mut impl Rng, n: usize) -> QueryFamily {
    let weights = ints(r, n, 0, 10);
    let total: f64 = weights.iter().sum();
    QueryFamily::Knapsack { weights, capacity: r.gen_range(0..=total as i32) as f64 }
}

/// Instances with n > p > b and Γ > b, with q ≤ n − p.
fn covered(r: &mut impl Rng, max_n: usize) -> (CuInstance, usize) {
    let n = r.gen_range(3..=max_n);
    let b = r.gen_range(0..n - 1);
    let p = r.gen_range(b + 1..n);
    let gamma = r.gen_range(b + 1..=n);
    let q = r.gen_range(0..=n - p);
    (CuInstance::new(ints(r, n, -5, 20), p, b, gamma).unwrap(), q)
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn closed_form_ou() -> Check {
    let mut r = rng(1);
    let mut sets = 0;
    for _ in 0..500 {
        let n = r.gen_range(4..=8);
        let inst = ou_instance(&mut r, n);
        for set in all_sets(n) {
            let (a, b) = (psi_closed_form(&inst, &set).map_err(e)?, psi_bruteforce(&inst, &set, &LIM).map_err(e)?);
            ensure!(a == b, "closed form {a} vs enumeration {b} on {inst:?}, I = {set:?}");
            sets += 1;
        }
    }
    Ok(format!("500 instances, {sets} query sets"))
}

fn ou_solvers() -> Check {
    let mut r = rng(2);
    for _ in 0..300 {
        let n = r.gen_range(1..=10);
        let inst = ou_instance(&mut r, n);
        let q = r.gen_range(0..=n);
        let s = solve_selection(&inst, q).map_err(e)?;
        let (_, v) = ou_bruteforce(&inst, &QueryFamily::Selection { q }, &LIM).map_err(e)?;
        ensure!(s.value == v, "selection {} vs {v} on {inst:?}, q = {q}", s.value);
    }
    for _ in 0..300 {
        let n = r.gen_range(1..=10);
        let inst = ou_instance(&mut r, n);
        let fam = knapsack(&mut r, n);
        let QueryFamily::Knapsack { weights, capacity } = &fam else { unreachable!() };
        let s = solve_knapsack(&inst, weights, *capacity).map_err(e)?;
        let (_, v) = ou_bruteforce(&inst, &fam, &LIM).map_err(e)?;
        ensure!(s.value == v, "knapsack {} vs {v} on {inst:?}, {fam:?}", s.value);
    }
    Ok("300 selection and 300 knapsack instances".into())
}

fn knapsack_scaling() -> Check {
    let time = |n: usize, seed: u64| -> Result<f64, String> {
        let mut r = rng(seed);
        let c_bar: Vec<f64> = (0..n).map(|_| r.gen_range(0..1000) as f64).collect();
        let c_hat: Vec<f64> = (0..n).map(|_| r.gen_range(0..1000) as f64).collect();
        let weights: Vec<f64> = (0..n).map(|_| r.gen_range(0..50) as f64).collect();
        let capacity = weights.iter().sum::<f64>() / 4.0;
        let inst = OuInstance::new(c_bar, c_hat, n / 10).map_err(e)?;
        let start = Instant::now();
        solve_knapsack(&inst, &weights, capacity).map_err(e)?;
        Ok(start.elapsed().as_secs_f64())
    };
    let n = 1_000_000;
    let (mut small, mut large) = (0.0, 0.0);
    for t in 0..5 {
        small += time(n, 100 + t)?;
        large += time(2 * n, 200 + t)?;
    }
    let (small, large) = (small / 5.0, large / 5.0);
    let ratio = large / small;
    ensure!(small < 10.0, "n = 10^6 took {small:.3} s");
    ensure!(ratio <= 2.5, "time(2n)/time(n) = {ratio:.3}");
    Ok(format!("n = 10^6 in {small:.3} s, ratio {ratio:.3}"))
}

fn reductions() -> Check {
    let mut r = rng(4);
    let mut graphs = 0;
    let mut yes = 0;
    while graphs < 240 {
        let m = r.gen_range(2..=7);
        let density = r.gen_range(0.0..1.0);
        let edges: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).filter(|_| r.gen_bool(density)).collect();
        let g = Graph::new(m, edges).map_err(e)?;
        let k = r.gen_range(1..m);
        let (inst, fam) = reduce_independent_set(&g, k).map_err(e)?;
        let (_, v) = ou_bruteforce(&inst, &fam, &LIM).map_err(e)?;
        let exists = g.independence_number() >= k;
        ensure!((v == 0.0) == exists && (v == 0.0 || v == 1.0), "value {v} on {g:?}, K = {k}");
        yes += exists as usize;
        // K = m lets every item deviate, so the value is 1 regardless.
        let (inst, fam) = reduce_independent_set(&g, m).map_err(e)?;
        ensure!(ou_bruteforce(&inst, &fam, &LIM).map_err(e)?.1 == 1.0, "K = m on {g:?}");
        graphs += 1;
    }
    let mut parts = 0;
    let mut part_yes = 0;
    while parts < 120 {
        let m = 2 * r.gen_range(1..=4);
        let mut k: Vec<i64> = (0..m).map(|_| r.gen_range(1..=6)).collect();
        if k.iter().sum::<i64>() % 2 != 0 {
            k[0] += 1;
        }
        let half = k.iter().sum::<i64>() as f64 / 2.0;
        let (inst, fam) = reduce_partition(&k).map_err(e)?;
        let v = cu_bruteforce(&inst, &fam, &LIM).map_err(e)?.map(|s| s.1);
        let exists = has_equal_partition(&k);
        ensure!((v == Some(-half)) == exists, "value {v:?} on {k:?}");
        part_yes += exists as usize;
        parts += 1;
    }
    Ok(format!("{graphs} graphs ({yes} yes), {parts} partition inputs ({part_yes} yes)"))
}

fn lp_value(m: &MilpModel) -> Result<Cost, String> {
    let sol = simplex_solve(m);
    match sol.status {
        LpStatus::Optimal => Ok(Cost::Finite(sol.objective)),
        LpStatus::Infeasible => Ok(Cost::Infinite),
        s => Err(format!("LP ended with {s:?}")),
    }
}

fn evaluators_agree() -> Check {
    let mut r = rng(5);
    let mut lps = 0;
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let inst = cu_instance(&mut r, n);
        for set in all_sets(n) {
            let bf = phi_bruteforce(&inst, &set, &LIM).map_err(e)?;
            let ev = phi_eval(&inst, &set).map_err(e)?;
            ensure!(ev == bf, "phi_eval {ev:?} vs {bf:?} on {inst:?}, I = {set:?}");
            let lp = lp_value(&build_phi_lp(&inst, &set).map_err(e)?)?;
            let ok = match (lp, bf) {
                (Cost::Finite(a), Cost::Finite(b)) => (a - b).abs() <= 1e-6,
                (a, b) => a == b,
            };
            ensure!(ok, "LP {lp:?} vs {bf:?} on {inst:?}, I = {set:?}");
            lps += 1;
        }
    }
    Ok(format!("300 instances, {lps} query sets"))
}

fn feasibility() -> Check {
    let mut r = rng(6);
    let mut feasible = 0;
    for _ in 0..300 {
        let (inst, q) = covered(&mut r, 10);
        let f = check_feasibility(inst.n(), inst.p(), inst.b(), inst.gamma(), q);
        let bf = cu_bruteforce(&inst, &QueryFamily::Selection { q }, &LIM).map_err(e)?;
        ensure!((f == Feasibility::Feasible) == bf.is_some(), "{f:?} vs {bf:?} on {inst:?}, q = {q}");
        feasible += bf.is_some() as usize;
    }
    Ok(format!("300 instances, {feasible} feasible"))
}

fn selection_theorem() -> Check {
    let cu_a = CuInstance::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 1, 2).map_err(e)?;
    let s = solve_selection_cu(&cu_a, 2).map_err(e)?;
    ensure!(s.value == Cost::Finite(8.0), "anchor gives {:?}", s.value);
    let mut r = rng(7);
    let mut hits = 0;
    while hits < 300 {
        let (inst, q) = covered(&mut r, 10);
        if check_feasibility(inst.n(), inst.p(), inst.b(), inst.gamma(), q) != Feasibility::Feasible {
            continue;
        }
        hits += 1;
        let (c, b, p, g) = (inst.c(), inst.b(), inst.p(), inst.gamma());
        let formula = sum_smallest(c, b) + sum_smallest(c, p - b + g) - sum_smallest(c, g);
        let sol = solve_selection_cu(&inst, q).map_err(e)?;
        let (_, v) = cu_bruteforce(&inst, &QueryFamily::Selection { q }, &LIM).map_err(e)?.ok_or("no finite set")?;
        ensure!(
            sol.value == Cost::Finite(v) && formula == v,
            "{:?}, formula {formula}, enumeration {v} on {inst:?}",
            sol.value
        );
    }
    Ok("anchor 8, 300 instances".into())
}

fn milp_end_to_end() -> Check {
    let mut r = rng(8);
    let mut solved = 0;
    for k in 0..200 {
        let n = r.gen_range(1..=10);
        let inst = cu_instance(&mut r, n);
        let fam = if k < 100 { QueryFamily::Selection { q: r.gen_range(0..=n) } } else { knapsack(&mut r, n) };
        let sol = solve_cu(&inst, &fam, &Backend::default()).map_err(e)?;
        let bf = cu_bruteforce(&inst, &fam, &LIM).map_err(e)?;
        match bf {
            None => ensure!(sol.status == CuStatus::Infeasible, "expected infeasible, got {sol:?} on {inst:?}"),
            Some((_, v)) => {
                ensure!(sol.value == Cost::Finite(v), "MILP {:?}, enumeration {v} on {inst:?}, {fam:?}", sol.value);
                let ev = phi_eval(&inst, &sol.query_set).map_err(e)?.finite().ok_or("infinite query set")?;
                ensure!((ev - v).abs() <= 1e-6, "phi_eval(I*) = {ev}, value {v}");
                solved += 1;
            }
        }
    }
    Ok(format!("100 selection and 100 knapsack instances, {solved} finite"))
}

fn table_cell() -> Check {
    let spec =
        GenSpec { seed: 2024, ns: vec![20], p_divs: vec![10], gamma_divs: vec![10], count: 10, ..GenSpec::default() };
    let mut files = generate(&spec).map_err(e)?;
    ensure!(files.len() == 10, "{} instances", files.len());
    // With p = 2 most draws have b >= p, which needs no queries at all. The
    // same instances with b = 1 exercise the solver.
    let hard: Vec<_> = files
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.b = Some(1);
            f
        })
        .collect();
    files.extend(hard);
    let limits = OracleLimits { max_n: 20, max_subsets: 1 << 22 };
    let mut slowest: f64 = 0.0;
    let mut nontrivial = 0;
    for f in &files {
        let loaded = f.load().map_err(e)?;
        let Problem::Cu(inst) = &loaded.problem else { return Err("expected a CU instance".into()) };
        let params = BnbParams { time_limit: Some(Duration::from_secs(60)), ..BnbParams::default() };
        let start = Instant::now();
        let sol = solve_cu(inst, &loaded.family, &Backend::Builtin(params)).map_err(|x| format!("{:?}: {x}", f.id))?;
        let t = start.elapsed().as_secs_f64();
        slowest = slowest.max(t);
        ensure!(t <= 60.0, "{:?} took {t:.1} s", f.id);
        nontrivial += !inst.is_trivial() as usize;
        let bf = cu_bruteforce(inst, &loaded.family, &limits).map_err(e)?.map(|s| s.1);
        match bf {
            Some(v) => {
                ensure!(sol.status == CuStatus::Optimal && sol.value == Cost::Finite(v), "{:?}: {sol:?} vs {v}", f.id)
            }
            None => ensure!(sol.status == CuStatus::Infeasible, "{:?}: {sol:?}, enumeration infeasible", f.id),
        }
    }
    Ok(format!("10 generated instances plus their b = 1 copies ({nontrivial} with b < p), slowest {slowest:.3} s"))
}

fn integrality() -> Check {
    let mut r = rng(10);
    let mut optimal = 0;
    for _ in 0..500 {
        let n = r.gen_range(1..=30);
        let a: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        let p = r.gen_range(0..=n);
        let marked = a.iter().filter(|&&x| x).count();
        let cap = r.gen_range(0..=marked);
        let mut m = MilpModel::new();
        let xs: Vec<_> = (0..n).map(|i| m.add_continuous(format!("x{i}"), 0.0, 1.0)).collect();
        m.add_constraint("card", xs.iter().map(|&x| (x, 1.0)).collect(), Sense::Ge, p as f64);
        let row = xs.iter().zip(&a).filter(|(_, &on)| on).map(|(&x, _)| (x, 1.0)).collect();
        m.add_constraint("cap", row, Sense::Le, cap as f64);
        m.set_objective(xs.iter().map(|&x| (x, r.gen_range(-10..=10) as f64 + r.gen::<f64>())).collect());
        let sol = simplex_solve(&m);
        match sol.status {
            LpStatus::Optimal => {
                ensure!(
                    sol.values.iter().all(|v| v.abs() <= 1e-9 || (v - 1.0).abs() <= 1e-9),
                    "fractional vertex {:?}",
                    sol.values
                );
                optimal += 1;
            }
            LpStatus::Infeasible => ensure!(p > n - marked + cap, "LP infeasible but a point exists"),
            s => return Err(format!("LP ended with {s:?}")),
        }
    }
    Ok(format!("500 polytopes, {optimal} nonempty"))
}

fn prefix_attack() -> Check {
    let mut r = rng(11);
    let mut pairs = 0;
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let inst = cu_instance(&mut r, n);
        for set in all_sets(n) {
            for split in SplitBudget::all(set.len(), inst.gamma()) {
                let all = phi_bruteforce_split(&inst, &set, split.gamma_i, &LIM).map_err(e)?;
                let prefix = phi_split(&inst, &set, split).map_err(e)?;
                ensure!(all == prefix, "{all:?} vs {prefix:?} on {inst:?}, I = {set:?}, Γ_I = {}", split.gamma_i);
                pairs += 1;
            }
        }
    }
    Ok(format!("300 instances, {pairs} (I, Γ_I) pairs"))
}

fn dominance_and_extension() -> Check {
    let mut r = rng(12);
    let (mut dom, mut ext) = (0, 0);
    let mut triples = 0;
    while triples < 10_000 {
        let n = r.gen_range(2..=10);
        let inst = ou_instance(&mut r, n).with_gamma(r.gen_range(1..n));
        let gamma = inst.gamma();
        let order = canonicalize(inst.c_bar()).order().to_vec();
        let pick = |r: &mut ChaCha8Rng| {
            let mut ranks: Vec<usize> = (0..n).collect();
            ranks.shuffle(r);
            ranks.truncate(gamma);
            let last = *ranks.iter().max().unwrap();
            (ranks.iter().map(|&k| order[k]).collect::<Vec<_>>(), last)
        };
        let (s, last) = pick(&mut r);
        let psi = |set: &[usize]| psi_closed_form(&inst, set).map_err(e);
        if r.gen_bool(0.5) {
            let (s2, last2) = pick(&mut r);
            if last2 <= last {
                continue;
            }
            ensure!(psi(&s)? <= psi(&s2)?, "dominance fails on {inst:?}: {s:?} vs {s2:?}");
            dom += 1;
        } else {
            let room = (n - 1 - last).min(n - 1 - gamma);
            if room == 0 {
                continue;
            }
            let take = r.gen_range(1..=room);
            let mut wider = s.clone();
            wider.extend(order[last + 1..].choose_multiple(&mut r, take));
            ensure!(psi(&s)? == psi(&wider)?, "extension fails on {inst:?}: {s:?} vs {wider:?}");
            ext += 1;
        }
        triples += 1;
    }
    Ok(format!("{dom} dominance and {ext} extension triples"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("closed-form OU value equals enumeration", closed_form_ou, Some(30.0)),
        ("OU selection and knapsack solvers equal enumeration", ou_solvers, Some(60.0)),
        ("knapsack heap algorithm scales as n log n", knapsack_scaling, None),
        ("hardness reductions match their source problems", reductions, None),
        ("CU evaluator, enumeration and LP agree", evaluators_agree, Some(300.0)),
        ("feasibility characterization", feasibility, None),
        ("CU selection theorem", selection_theorem, None),
        ("MILP end to end against enumeration", milp_end_to_end, Some(900.0)),
        ("n=20, p=2, gamma=2 benchmark cell", table_cell, None),
        ("inner polytope vertices are integral", integrality, None),
        ("prefix attack is optimal", prefix_attack, None),
        ("dominance and extension lemmas", dominance_and_extension, None),
    ];
    let mut failed = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let secs = start.elapsed().as_secs_f64();
        if let (Ok(_), Some(b)) = (&result, budget) {
            if secs >= *b {
                result = Err(format!("took {secs:.1} s, budget {b} s"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
